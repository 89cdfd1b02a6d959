// Copyright (c) 2026, mefem developers
// SPDX-License-Identifier: Apache-2.0

#include "mefem/cli.hpp"

#include "mefem/checkpoint.hpp"
#include "mefem/config.hpp"
#include "mefem/io.hpp"
#include "mefem/lossweights.hpp"
#include "mefem/maskgen.hpp"
#include "mefem/preprocess.hpp"
#include "mefem/probe.hpp"
#include "mefem/synthdata.hpp"
#include "mefem/trainer.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ostream.h>

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>
#include <thread>

namespace mefem::cli {

namespace fs = std::filesystem;

namespace {

struct UsageError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

std::uint64_t parse_seed(const std::string& text, const std::string& origin)
{
  std::uint64_t v = 0;
  const char* end = text.data() + text.size();
  const auto [p, ec] = std::from_chars(text.data(), end, v);
  if (text.empty() || ec != std::errc() || p != end) {
    throw UsageError(fmt::format("{}: '{}' is not a valid seed", origin, text));
  }
  return v;
}

/// --seed flag, then config value, then MEFEM_SEED, then 0.
std::uint64_t resolve_seed(const std::optional<std::uint64_t>& flag, const std::optional<std::string>& config_value = {})
{
  if (flag) return *flag;
  if (config_value) return parse_seed(*config_value, "config seed");
  if (const char* env = std::getenv("MEFEM_SEED")) return parse_seed(env, "MEFEM_SEED");
  return 0;
}

void require_file(const std::string& path, const char* what)
{
  if (!fs::is_regular_file(path)) throw UsageError(fmt::format("{} '{}' does not exist", what, path));
}

void require_dir(const std::string& path, const char* what)
{
  if (!fs::is_directory(path)) throw UsageError(fmt::format("{} '{}' is not a directory", what, path));
}

void run_parallel(int workers, const std::function<void()>& job)
{
  workers = std::max(workers, 1);
  if (workers == 1) {
    job();
    return;
  }
  std::vector<std::jthread> pool;
  for (int w = 0; w < workers; ++w) pool.emplace_back(job);
}

// Masking flags shared by train, mask-viz and coverage, mapped onto config keys.
struct MaskFlags {
  std::optional<std::string> strategy;
  std::optional<int> stripe_width;
  std::optional<double> stripe_k;
  std::optional<std::string> orientation;
  std::optional<std::string> multiblock_modes;

  void add(CLI::App& app)
  {
    app.add_option("--strategy", strategy, "Masking strategy")->check(CLI::IsMember({"stripe", "quadrant", "multiblock"}));
    app.add_option("--stripe-width", stripe_width, "Stripe width in patches");
    app.add_option("--stripe-k", stripe_k, "Stripe center spread k");
    app.add_option("--orientation", orientation, "Stripe orientation")
        ->check(CLI::IsMember({"random", "horizontal", "vertical"}));
    app.add_option("--multiblock-modes", multiblock_modes,
                   "Multiblock modes 'blocks:scale_lo:scale_hi:aspect_lo:aspect_hi;...'");
  }

  void apply(KeyValueConfig& kv) const
  {
    if (strategy) kv.set("mask.strategy", *strategy);
    if (stripe_width) kv.set("mask.stripe_width", std::to_string(*stripe_width));
    if (stripe_k) kv.set("mask.stripe_k", fmt::format("{}", *stripe_k));
    if (orientation) kv.set("mask.orientation", *orientation);
    if (multiblock_modes) kv.set("mask.multiblock_modes", *multiblock_modes);
  }
};

struct GridFlags {
  int patches_per_axis = 14;
  int patch_size = 16;

  void add(CLI::App& app)
  {
    app.add_option("--grid", patches_per_axis, "Patches per axis")->capture_default_str();
    app.add_option("--patch-size", patch_size, "Patch side in pixels")->capture_default_str();
  }
  GridSpec spec() const
  {
    GridSpec g{patches_per_axis, patch_size};
    g.validate();
    return g;
  }
};

std::string header(const std::string& command, std::uint64_t seed)
{
  return fmt::format("# mefem {} seed={}\n", command, seed);
}

// ------------------------------------------------------------------ commands

struct Context {
  std::ostream& out;
  std::ostream& err;
};

struct PreprocessCmd {
  std::string manifest, out_dir;
  int min_side = 224;
  int workers = 1;
  std::optional<std::uint64_t> seed;
  GridFlags grid;

  void add(CLI::App& app)
  {
    app.add_option("--manifest", manifest, "CSV of path,x,y,w,h")->required();
    app.add_option("--out", out_dir, "Output directory")->required();
    app.add_option("--min-side", min_side, "Smallest accepted crop side in pixels")->capture_default_str();
    app.add_option("--workers", workers, "Worker threads")->capture_default_str();
    app.add_option("--seed", seed, "Seed (recorded only)");
    grid.add(app);
  }

  int run(Context& ctx) const
  {
    require_file(manifest, "manifest");
    const std::uint64_t s = resolve_seed(seed);
    const auto records = parse_manifest(read_file(manifest), fs::path(manifest).parent_path().string());
    fmt::print(ctx.out, "{}# manifest={} records={} min_side={} workers={}\n", header("preprocess", s), manifest,
               records.size(), min_side, workers);
    const ManifestSummary summary = run_manifest(records, out_dir, grid.spec(), min_side, workers);
    fmt::print(ctx.out, "{}\n", summary.to_line());
    return ok;
  }
};

struct SynthCmd {
  std::size_t count = 0;
  std::string out_dir;
  int size = 224;
  int workers = 1;
  std::optional<std::uint64_t> seed;

  void add(CLI::App& app)
  {
    app.add_option("--count", count, "Number of images")->required();
    app.add_option("--out", out_dir, "Output directory")->required();
    app.add_option("--size", size, "Image side in pixels")->capture_default_str()->check(CLI::PositiveNumber);
    app.add_option("--workers", workers, "Worker threads")->capture_default_str();
    app.add_option("--seed", seed, "Seed");
  }

  int run(Context& ctx) const
  {
    const std::uint64_t s = resolve_seed(seed);
    fmt::print(ctx.out, "{}# count={} size={} out={}\n", header("synth", s), count, size, out_dir);
    fs::create_directories(out_dir);
    const SyntheticDataset data(count, size, s);
    std::atomic<std::size_t> next{0};
    run_parallel(workers, [&] {
      for (std::size_t i = next++; i < count; i = next++) {
        save_image_png(data.image(i), (fs::path(out_dir) / fmt::format("face_{:06d}.png", i)).string());
      }
    });
    std::string csv = attributes_csv_header();
    for (std::size_t i = 0; i < count; ++i) {
      csv += attributes_csv_row(fmt::format("face_{:06d}.png", i), data.attributes(i));
    }
    write_file_atomic((fs::path(out_dir) / "attributes.csv").string(), csv);
    fmt::print(ctx.out, "wrote {} images and attributes.csv\n", count);
    return ok;
  }
};

struct TrainCmd {
  std::optional<std::string> config_path;
  std::string out_dir;
  std::optional<std::string> data_dir;
  std::size_t synth_count = 2000;
  std::optional<std::uint64_t> synth_seed;
  std::optional<int> epochs, batch_size;
  std::optional<double> lr, p_source;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> sets;
  std::vector<int> keep_epochs;
  bool resume = false;
  MaskFlags mask;

  void add(CLI::App& app)
  {
    app.add_option("--config", config_path, "Config file (key = value lines)");
    app.add_option("--out", out_dir, "Run directory for checkpoints and metrics")->required();
    app.add_option("--data", data_dir, "Directory of PNG images (default: synthetic faces)");
    app.add_option("--synth", synth_count, "Synthetic image count when --data is absent")->capture_default_str();
    app.add_option("--synth-seed", synth_seed, "Synthetic data seed (default: training seed)");
    app.add_option("--epochs", epochs, "Epochs");
    app.add_option("--batch-size", batch_size, "Batch size");
    app.add_option("--lr", lr, "Peak learning rate");
    app.add_option("--p-source", p_source, "Probability of routing CLS to the source set");
    app.add_option("--seed", seed, "Seed");
    app.add_option("--set", sets, "Extra config override key=value (repeatable)");
    app.add_option("--keep-epochs", keep_epochs, "Keep a checkpoint copy after these epochs");
    app.add_flag("--resume", resume, "Continue from <out>/latest.mefe");
    mask.add(app);
  }

  KeyValueConfig effective() const
  {
    KeyValueConfig kv;
    if (config_path) kv = KeyValueConfig::load(*config_path);
    KeyValueConfig flags;
    if (epochs) flags.set("train.epochs", std::to_string(*epochs));
    if (batch_size) flags.set("train.batch_size", std::to_string(*batch_size));
    if (lr) flags.set("train.lr", fmt::format("{}", *lr));
    if (p_source) flags.set("cls.p_source", fmt::format("{}", *p_source));
    mask.apply(flags);
    for (const auto& s : sets) {
      const auto eq = s.find('=');
      if (eq == std::string::npos) throw UsageError(fmt::format("--set '{}': expected key=value", s));
      flags.set(s.substr(0, eq), s.substr(eq + 1));
    }
    kv.merge(flags);
    kv.set("seed", std::to_string(resolve_seed(seed, kv.get("seed"))));
    return kv;
  }

  int run(Context& ctx) const
  {
    std::unique_ptr<Dataset> data;
    if (data_dir) require_dir(*data_dir, "data directory");

    TrainState state;
    const auto latest = (fs::path(out_dir) / "latest.mefe").string();
    if (resume) {
      require_file(latest, "checkpoint");
      state = load_checkpoint(latest);
    } else {
      TrainConfig cfg = TrainConfig::from_kv(effective());
      cfg.validate();
      state = init_state(cfg);
    }
    const TrainConfig& cfg = state.config;
    if (data_dir) {
      data = std::make_unique<DirectoryDataset>(*data_dir);
    } else {
      data = std::make_unique<SyntheticDataset>(synth_count, cfg.grid().image_size(), synth_seed.value_or(cfg.seed));
    }
    fmt::print(ctx.out, "{}# data={} images={} resume={} epoch={}\n", header("train", cfg.seed),
               data_dir.value_or(fmt::format("synthetic:{}", synth_seed.value_or(cfg.seed))), data->size(), resume,
               state.epoch);
    ctx.out << cfg.to_kv().to_text();
    fs::create_directories(out_dir);
    write_file_atomic((fs::path(out_dir) / "config.txt").string(), cfg.to_kv().to_text());

    LoopOptions opts;
    opts.checkpoint_dir = out_dir;
    opts.metrics_csv = (fs::path(out_dir) / "metrics.csv").string();
    opts.keep_epochs = keep_epochs;
    const int first_epoch = state.epoch;
    const LoopResult r = train_loop(state, *data, opts);
    for (std::size_t e = 0; e < r.epoch_mean_losses.size(); ++e) {
      fmt::print(ctx.out, "epoch {} mean_loss {:.6f}\n", first_epoch + static_cast<int>(e) + 1, r.epoch_mean_losses[e]);
    }
    if (data->size() >= 2) {
      const std::size_t n = std::min<std::size_t>(data->size(), 64);
      const double student = representation_stats(state.source, *data, n).collapse_indicator;
      const double teacher = representation_stats(state.target, *data, n).collapse_indicator;
      const auto path = (fs::path(out_dir) / "representation.csv").string();
      std::string log = fs::exists(path) ? read_file(path) : "epoch,step,samples,student_indicator,teacher_indicator\n";
      log += fmt::format("{},{},{},{:.9g},{:.9g}\n", state.epoch, state.step, n, student, teacher);
      write_file_atomic(path, log);
      fmt::print(ctx.out, "collapse_indicator student {:.6f} teacher {:.6f}\n", student, teacher);
    }
    return ok;
  }
};

// Labels keyed by file name from a CSV with a header row.
std::map<std::string, double> read_label_csv(const std::string& path, const std::string& column)
{
  std::istringstream in(read_file(path));
  std::string line;
  if (!std::getline(in, line)) throw UsageError(fmt::format("labels file '{}' is empty", path));
  const auto split = [](const std::string& s) {
    std::vector<std::string> f;
    std::istringstream ls(s);
    for (std::string x; std::getline(ls, x, ',');) f.push_back(x);
    return f;
  };
  const auto head = split(line);
  const auto col = std::find(head.begin(), head.end(), column);
  if (col == head.end()) throw UsageError(fmt::format("labels file '{}' has no column '{}'", path, column));
  const auto idx = static_cast<std::size_t>(col - head.begin());
  std::map<std::string, double> labels;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split(line);
    if (f.size() <= idx) throw UsageError(fmt::format("labels file '{}': short row '{}'", path, line));
    labels[f[0]] = std::stod(f[idx]);
  }
  return labels;
}

struct ProbeCmd {
  std::string features = "patches";
  std::optional<std::string> head;
  int hidden_dim = 512;
  std::optional<int> pooler_heads;
  std::string task = "regression";
  int classes = 0;
  double train_fraction = 0.8;
  int epochs = 50;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> checkpoint;
  std::string encoder_choice = "target";
  bool random_init = false;
  std::optional<std::string> config_path;
  std::optional<std::string> data_dir, labels_path;
  std::size_t synth_count = 600;
  std::uint64_t synth_seed = 1;
  std::string label = "face_scale";
  std::optional<std::string> report_path, results_path;
  int workers = 1;

  void add(CLI::App& app)
  {
    app.add_option("--features", features, "Feature mode")
        ->check(CLI::IsMember({"patches", "cls", "patches_plus_cls"}))
        ->capture_default_str();
    app.add_option("--head", head, "Probe head (default: paired with the feature mode)")
        ->check(CLI::IsMember({"attentive_pooler", "mlp"}));
    app.add_option("--hidden-dim", hidden_dim, "Perceptron hidden width")->capture_default_str();
    app.add_option("--pooler-heads", pooler_heads, "Pooler heads (default: encoder heads)");
    app.add_option("--task", task, "Task")->check(CLI::IsMember({"regression", "classification"}))->capture_default_str();
    app.add_option("--classes", classes, "Class count for classification");
    app.add_option("--train-fraction", train_fraction, "Training fraction")->capture_default_str();
    app.add_option("--epochs", epochs, "Probe epochs")->capture_default_str();
    app.add_option("--seed", seed, "Seed for split and head init");
    app.add_option("--checkpoint", checkpoint, "Training checkpoint (.mefe)");
    app.add_option("--encoder", encoder_choice, "Encoder inside the checkpoint")
        ->check(CLI::IsMember({"target", "source"}))
        ->capture_default_str();
    app.add_flag("--random-init", random_init, "Probe a randomly initialized encoder");
    app.add_option("--config", config_path, "Training config for --random-init");
    app.add_option("--data", data_dir, "Directory of PNG images");
    app.add_option("--labels", labels_path, "CSV with a 'file' column and label columns");
    app.add_option("--synth", synth_count, "Synthetic image count when --data is absent")->capture_default_str();
    app.add_option("--synth-seed", synth_seed, "Synthetic data seed")->capture_default_str();
    app.add_option("--label", label, "Label column / synthetic attribute")->capture_default_str();
    app.add_option("--report", report_path, "Write the report here");
    app.add_option("--results", results_path, "Append a row to this results CSV");
    app.add_option("--workers", workers, "Feature extraction threads")->capture_default_str();
  }

  int run(Context& ctx) const
  {
    ProbeConfig pc;
    pc.features = parse_feature_mode(features);
    pc.head = head ? parse_head_kind(*head) : (pc.features == FeatureMode::cls ? HeadKind::mlp : HeadKind::attentive_pooler);
    pc.hidden_dim = hidden_dim;
    pc.task = task == "regression" ? TaskKind::regression : TaskKind::classification;
    pc.num_classes = classes;
    pc.train_fraction = train_fraction;
    pc.epochs = epochs;
    pc.seed = resolve_seed(seed);
    pc.validate();

    if (checkpoint.has_value() == random_init) {
      throw UsageError("probe: give exactly one of --checkpoint or --random-init");
    }
    if (data_dir.has_value() != labels_path.has_value()) {
      throw UsageError("probe: --data and --labels go together");
    }
    Encoder<float> encoder;
    std::string source_tag;
    if (checkpoint) {
      require_file(*checkpoint, "checkpoint");
      TrainState st = load_checkpoint(*checkpoint);
      encoder = encoder_choice == "target" ? std::move(st.target) : std::move(st.source);
      source_tag = fmt::format("{}:{:016x}", encoder_choice, fnv1a64(read_file(*checkpoint)));
    } else {
      TrainConfig cfg;
      if (config_path) cfg = TrainConfig::from_kv(KeyValueConfig::load(*config_path));
      cfg.seed = pc.seed;
      encoder = init_state(cfg).source;
      source_tag = fmt::format("random:{}", pc.seed);
    }
    pc.pooler_heads = pooler_heads.value_or(encoder.config().num_heads);
    pc.validate();

    std::unique_ptr<Dataset> data;
    std::vector<double> labels;
    if (data_dir) {
      require_dir(*data_dir, "data directory");
      require_file(*labels_path, "labels file");
      auto dir = std::make_unique<DirectoryDataset>(*data_dir);
      const auto table = read_label_csv(*labels_path, label);
      for (const auto& p : dir->paths()) {
        const auto it = table.find(fs::path(p).filename().string());
        if (it == table.end()) throw UsageError(fmt::format("no label for '{}'", p));
        labels.push_back(it->second);
      }
      data = std::move(dir);
    } else {
      auto synth = std::make_unique<SyntheticDataset>(synth_count, encoder.config().grid.image_size(), synth_seed);
      for (std::size_t i = 0; i < synth->size(); ++i) labels.push_back(attribute_value(synth->attributes(i), label));
      data = std::move(synth);
    }

    const std::string data_tag = data_dir ? *data_dir : fmt::format("synthetic:{}:{}", synth_count, synth_seed);
    const std::string hash =
        fmt::format("{:016x}", fnv1a64(pc.to_text() + "encoder=" + source_tag + "\ndata=" + data_tag + "\nlabel=" + label));
    fmt::print(ctx.out, "{}# encoder={} data={} label={} features={} head={} config_hash={}\n", header("probe", pc.seed),
               source_tag, data_tag, label, to_string(pc.features), to_string(pc.head), hash);

    const ProbeData pd = extract_probe_features(encoder, *data, labels, pc.features, 16, workers);
    const FittedProbe fit = fit_probe(pd, pc);
    const std::string report = header("probe", pc.seed) + fmt::format("config_hash: {}\n", hash) + fit.report.to_text();
    ctx.out << fit.report.to_text();
    if (report_path) write_file_atomic(*report_path, report);
    if (results_path) append_report_csv(*results_path, hash, pc, fit.report);
    return ok;
  }
};

struct MaskVizCmd {
  std::string out_dir;
  int count = 8;
  int scale = 16;
  std::optional<std::uint64_t> seed;
  MaskFlags mask;
  GridFlags grid;

  void add(CLI::App& app)
  {
    app.add_option("--out", out_dir, "Output directory")->required();
    app.add_option("--count", count, "Number of masks")->capture_default_str()->check(CLI::PositiveNumber);
    app.add_option("--scale", scale, "Pixels per patch")->capture_default_str()->check(CLI::PositiveNumber);
    app.add_option("--seed", seed, "Seed");
    mask.add(app);
    grid.add(app);
  }

  int run(Context& ctx) const
  {
    KeyValueConfig kv;
    mask.apply(kv);
    const GridSpec g = grid.spec();
    const MaskStrategy strategy = TrainConfig::from_kv(kv).strategy;
    validate_strategy(strategy, g);
    const std::uint64_t s = resolve_seed(seed);
    fmt::print(ctx.out, "{}# strategy={} count={}\n", header("mask-viz", s), kv.get_string("mask.strategy", "stripe"),
               count);
    fs::create_directories(out_dir);
    Rng rng(s);
    const int L = g.patches_per_axis, side = L * scale;
    for (int m = 0; m < count; ++m) {
      const MaskPair mp = sample_mask(g, strategy, rng);
      std::vector<double> px(static_cast<std::size_t>(side) * side, 0.0);
      for (const int p : mp.source) {
        for (int y = 0; y < scale; ++y) {
          for (int x = 0; x < scale; ++x) {
            px[static_cast<std::size_t>(g.row(p) * scale + y) * side + g.col(p) * scale + x] = 1.0;
          }
        }
      }
      const std::string name = fmt::format("mask_{:04d}.pgm", m);
      write_file_atomic((fs::path(out_dir) / name).string(),
                        matrix_to_pgm(px, side, side, fmt::format("mefem mask-viz seed={} index={} source=white", s, m)));
      fmt::print(ctx.out, "{} source={} target={}\n", name, mp.source.size(), mp.target.size());
    }
    return ok;
  }
};

struct WeightsVizCmd {
  std::string out;
  double r0 = 5.0, sigma = 1.5;
  std::string scheme = "circular";
  std::optional<std::uint64_t> seed;
  GridFlags grid;

  void add(CLI::App& app)
  {
    app.add_option("--out", out, "Output file (.csv or .pgm)")->required();
    app.add_option("--r0", r0, "Falloff radius in patches")->capture_default_str();
    app.add_option("--sigma", sigma, "Steepness")->capture_default_str();
    app.add_option("--scheme", scheme, "Weight scheme")->check(CLI::IsMember({"circular", "uniform"}))->capture_default_str();
    app.add_option("--seed", seed, "Seed (recorded only)");
    grid.add(app);
  }

  int run(Context& ctx) const
  {
    WeightConfig wc{r0, sigma, scheme == "uniform" ? WeightScheme::uniform : WeightScheme::circular};
    wc.validate();
    const GridSpec g = grid.spec();
    const WeightMatrix w = build_weight_matrix(g, wc);
    const std::uint64_t s = resolve_seed(seed);
    fmt::print(ctx.out, "{}# scheme={} r0={} sigma={}\n", header("weights-viz", s), scheme, r0, sigma);
    const int L = g.patches_per_axis;
    if (fs::path(out).extension() == ".pgm") {
      write_file_atomic(out, matrix_to_pgm(w.weights, L, L, fmt::format("mefem weights-viz seed={} r0={} sigma={}", s, r0, sigma)));
    } else {
      write_file_atomic(out, matrix_to_csv(w.weights, L, L));
    }
    fmt::print(ctx.out, "wrote {}\n", out);
    return ok;
  }
};

struct CoverageCmd {
  std::string out;
  int samples = 50000;
  std::optional<std::uint64_t> seed;
  MaskFlags mask;
  GridFlags grid;

  void add(CLI::App& app)
  {
    app.add_option("--out", out, "Output CSV")->required();
    app.add_option("--samples", samples, "Number of sampled masks")->capture_default_str()->check(CLI::PositiveNumber);
    app.add_option("--seed", seed, "Seed");
    mask.add(app);
    grid.add(app);
  }

  int run(Context& ctx) const
  {
    KeyValueConfig kv;
    mask.apply(kv);
    const GridSpec g = grid.spec();
    const MaskStrategy strategy = TrainConfig::from_kv(kv).strategy;
    validate_strategy(strategy, g);
    const std::uint64_t s = resolve_seed(seed);
    fmt::print(ctx.out, "{}# strategy={} samples={}\n", header("coverage", s), kv.get_string("mask.strategy", "stripe"),
               samples);
    Rng rng(s);
    const auto cov = coverage_map(strategy, g, samples, rng);
    const int L = g.patches_per_axis;
    write_file_atomic(out, matrix_to_csv(cov, L, L));
    fmt::print(ctx.out, "corner={:.4f} center={:.4f}\n", cov[0], cov[static_cast<std::size_t>(g.index(L / 2, L / 2))]);
    return ok;
  }
};

} // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
  CLI::App app{"mefem: masked embedding prediction for face images"};
  app.name(args.empty() ? "mefem" : fs::path(args[0]).filename().string());
  app.require_subcommand(1);

  PreprocessCmd preprocess;
  SynthCmd synth;
  TrainCmd train;
  ProbeCmd probe;
  MaskVizCmd mask_viz;
  WeightsVizCmd weights_viz;
  CoverageCmd coverage;
  auto* c_pre = app.add_subcommand("preprocess", "Crop faces from a bounding-box manifest");
  auto* c_syn = app.add_subcommand("synth", "Generate synthetic face images");
  auto* c_trn = app.add_subcommand("train", "Train the encoder");
  auto* c_prb = app.add_subcommand("probe", "Fit a probe on frozen encoder features");
  auto* c_mvz = app.add_subcommand("mask-viz", "Render sampled masks as PGM images");
  auto* c_wvz = app.add_subcommand("weights-viz", "Export the loss weight matrix");
  auto* c_cov = app.add_subcommand("coverage", "Estimate per-patch source probability");
  preprocess.add(*c_pre);
  synth.add(*c_syn);
  train.add(*c_trn);
  probe.add(*c_prb);
  mask_viz.add(*c_mvz);
  weights_viz.add(*c_wvz);
  coverage.add(*c_cov);

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    if (!rev.empty()) rev.pop_back();
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    const CLI::App* target = &app;
    for (const auto* sub : app.get_subcommands()) target = sub;
    out << target->help();
    return ok;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return ok;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return validation_error;
  }

  Context ctx{out, err};
  try {
    if (c_pre->parsed()) return preprocess.run(ctx);
    if (c_syn->parsed()) return synth.run(ctx);
    if (c_trn->parsed()) return train.run(ctx);
    if (c_prb->parsed()) return probe.run(ctx);
    if (c_mvz->parsed()) return mask_viz.run(ctx);
    if (c_wvz->parsed()) return weights_viz.run(ctx);
    if (c_cov->parsed()) return coverage.run(ctx);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return validation_error;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return validation_error;
  } catch (const std::exception& e) {
    err << "failure: " << e.what() << "\n";
    return runtime_failure;
  }
  return validation_error;
}

int dispatch(int argc, char** argv)
{
  return dispatch(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}

} // namespace mefem::cli
