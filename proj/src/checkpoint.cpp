// Copyright (c) 2026, mefem developers
// SPDX-License-Identifier: Apache-2.0

#include "mefem/checkpoint.hpp"

#include "mefem/io.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <bit>
#include <cstring>
#include <stdexcept>

namespace mefem {

namespace {

class Writer {
public:
  template <typename U>
  void put(U v)
  {
    static_assert(std::is_trivially_copyable_v<U>);
    unsigned char bytes[sizeof(U)];
    std::memcpy(bytes, &v, sizeof(U));
    if constexpr (std::endian::native == std::endian::big) {
      std::reverse(bytes, bytes + sizeof(U));
    }
    out_.append(reinterpret_cast<const char*>(bytes), sizeof(U));
  }
  void put_string(const std::string& s, bool wide)
  {
    if (wide) {
      put<std::uint64_t>(s.size());
    } else {
      put<std::uint32_t>(static_cast<std::uint32_t>(s.size()));
    }
    out_ += s;
  }
  void raw(const char* p, std::size_t n) { out_.append(p, n); }
  std::string take() { return std::move(out_); }

private:
  std::string out_;
};

class Reader {
public:
  explicit Reader(const std::string& in) : in_(in) {}

  template <typename U>
  U get()
  {
    need(sizeof(U));
    unsigned char bytes[sizeof(U)];
    std::memcpy(bytes, in_.data() + pos_, sizeof(U));
    if constexpr (std::endian::native == std::endian::big) {
      std::reverse(bytes, bytes + sizeof(U));
    }
    pos_ += sizeof(U);
    U v;
    std::memcpy(&v, bytes, sizeof(U));
    return v;
  }
  std::string get_string(bool wide)
  {
    const std::uint64_t n = wide ? get<std::uint64_t>() : get<std::uint32_t>();
    need(n);
    std::string s = in_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == in_.size(); }

private:
  void need(std::uint64_t n) const
  {
    if (pos_ + n > in_.size()) {
      throw std::runtime_error("checkpoint truncated");
    }
  }

  const std::string& in_;
  std::size_t pos_ = 0;
};

void put_array(Writer& w, const std::string& name, const nn::Mat<float>& m)
{
  w.put_string(name, false);
  w.put<std::uint8_t>(1);
  w.put<std::uint32_t>(2);
  w.put<std::uint64_t>(m.rows());
  w.put<std::uint64_t>(m.cols());
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    w.put<float>(m.data()[i]);
  }
}

} // namespace

std::string serialize_checkpoint(const TrainState& state)
{
  Writer w;
  w.raw(checkpoint_magic, 4);
  w.put<std::uint32_t>(checkpoint_version);
  w.put_string(state.config.to_kv().to_text(), true);
  w.put_string(state.rng.state(), true);
  w.put<std::int64_t>(state.step);
  w.put<std::int32_t>(state.epoch);
  w.put<std::int64_t>(state.total_steps);
  w.put<std::int64_t>(state.optimizer.steps_taken());

  const auto source = state.source.parameters();
  const auto target = state.target.parameters();
  const auto predictor = state.predictor.parameters();
  const auto& m1 = state.optimizer.first_moments();
  const auto& m2 = state.optimizer.second_moments();
  const std::size_t trainable = source.size() + predictor.size();
  w.put<std::uint32_t>(static_cast<std::uint32_t>(source.size() + target.size() + predictor.size() + 2 * trainable));

  std::vector<std::string> opt_names;
  for (const auto* p : source) {
    put_array(w, "source." + p->name, p->value);
    opt_names.push_back("source." + p->name);
  }
  for (const auto* p : target) put_array(w, "target." + p->name, p->value);
  for (const auto* p : predictor) {
    put_array(w, "predictor." + p->name, p->value);
    opt_names.push_back("predictor." + p->name);
  }
  for (std::size_t i = 0; i < trainable; ++i) put_array(w, "adam.m." + opt_names[i], m1[i]);
  for (std::size_t i = 0; i < trainable; ++i) put_array(w, "adam.v." + opt_names[i], m2[i]);
  return w.take();
}

void save_checkpoint(const TrainState& state, const std::string& path)
{
  write_file_atomic(path, serialize_checkpoint(state));
}

CheckpointContents parse_checkpoint(const std::string& bytes)
{
  if (bytes.size() < 8 || std::memcmp(bytes.data(), checkpoint_magic, 4) != 0) {
    throw std::runtime_error("not a checkpoint (bad magic)");
  }
  const std::string body = bytes.substr(4);
  Reader r(body);
  CheckpointContents c;
  c.version = r.get<std::uint32_t>();
  if (c.version != checkpoint_version) {
    throw std::runtime_error(fmt::format("unsupported checkpoint version {}", c.version));
  }
  c.config_text = r.get_string(true);
  c.rng_state = r.get_string(true);
  c.step = r.get<std::int64_t>();
  c.epoch = r.get<std::int32_t>();
  c.total_steps = r.get<std::int64_t>();
  c.optimizer_steps = r.get<std::int64_t>();
  const auto count = r.get<std::uint32_t>();
  for (std::uint32_t i = 0; i < count; ++i) {
    NamedArray a;
    a.name = r.get_string(false);
    a.dtype = r.get<std::uint8_t>();
    const auto ndim = r.get<std::uint32_t>();
    std::uint64_t n = 1;
    for (std::uint32_t d = 0; d < ndim; ++d) {
      a.shape.push_back(r.get<std::uint64_t>());
      n *= a.shape.back();
    }
    a.values.reserve(n);
    for (std::uint64_t k = 0; k < n; ++k) {
      if (a.dtype == 1) {
        a.values.push_back(r.get<float>());
      } else if (a.dtype == 2) {
        a.values.push_back(r.get<double>());
      } else {
        throw std::runtime_error(fmt::format("array '{}': unknown dtype {}", a.name, a.dtype));
      }
    }
    c.arrays.push_back(std::move(a));
  }
  if (!r.done()) {
    throw std::runtime_error("checkpoint has trailing bytes");
  }
  return c;
}

TrainState load_checkpoint(const std::string& path)
{
  const CheckpointContents c = parse_checkpoint(read_file(path));
  TrainState state = init_state(TrainConfig::from_kv(KeyValueConfig::parse(c.config_text, path)));
  state.rng.restore(c.rng_state);
  state.step = c.step;
  state.epoch = c.epoch;
  state.total_steps = c.total_steps;
  state.optimizer.set_steps_taken(c.optimizer_steps);

  std::map<std::string, const NamedArray*> by_name;
  for (const auto& a : c.arrays) by_name[a.name] = &a;
  const auto fill = [&](const std::string& name, nn::Mat<float>& dst) {
    const auto it = by_name.find(name);
    if (it == by_name.end()) {
      throw std::runtime_error(fmt::format("checkpoint '{}' lacks array '{}'", path, name));
    }
    const NamedArray& a = *it->second;
    if (a.shape.size() != 2 || a.shape[0] != static_cast<std::uint64_t>(dst.rows()) ||
        a.shape[1] != static_cast<std::uint64_t>(dst.cols())) {
      throw std::runtime_error(fmt::format("checkpoint array '{}' has the wrong shape", name));
    }
    for (Eigen::Index i = 0; i < dst.size(); ++i) dst.data()[i] = static_cast<float>(a.values[i]);
  };

  std::vector<std::string> opt_names;
  for (auto* p : state.source.parameters()) {
    fill("source." + p->name, p->value);
    opt_names.push_back("source." + p->name);
  }
  for (auto* p : state.target.parameters()) fill("target." + p->name, p->value);
  for (auto* p : state.predictor.parameters()) {
    fill("predictor." + p->name, p->value);
    opt_names.push_back("predictor." + p->name);
  }
  for (std::size_t i = 0; i < opt_names.size(); ++i) {
    fill("adam.m." + opt_names[i], state.optimizer.first_moments()[i]);
    fill("adam.v." + opt_names[i], state.optimizer.second_moments()[i]);
  }
  return state;
}

} // namespace mefem
