// Copyright (c) 2026, mefem developers
// SPDX-License-Identifier: Apache-2.0

#include "mefem/config.hpp"
#include "mefem/io.hpp"
#include "mefem/trainer.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <filesystem>

using namespace mefem;

TEST_CASE("key-value parsing")
{
  const auto kv = KeyValueConfig::parse("# header\n a = 1 \n\nb=two # trailing\na = 3\nflag = true\n");
  CHECK(kv.get_int("a", 0) == 3);
  CHECK(kv.get_string("b", "") == "two");
  CHECK(kv.get_bool("flag", false));
  CHECK(kv.get_double("missing", 2.5) == 2.5);
  CHECK_FALSE(kv.get("missing").has_value());
  CHECK(kv.to_text() == "a = 3\nb = two\nflag = true\n");

  CHECK_THROWS_AS(KeyValueConfig::parse("novalue\n"), ConfigError);
  CHECK_THROWS_AS(KeyValueConfig::parse(" = 4\n"), ConfigError);
  CHECK_THROWS_AS(kv.get_int("b", 0), ConfigError);
  CHECK_THROWS_AS(KeyValueConfig::parse("x = 1.5\n").get_int("x", 0), ConfigError);
  CHECK_THROWS_AS(KeyValueConfig::parse("x = maybe\n").get_bool("x", false), ConfigError);
}

TEST_CASE("merge and unknown keys")
{
  auto base = KeyValueConfig::parse("a = 1\nb = 2\n");
  base.merge(KeyValueConfig::parse("b = 5\nc = 6\n"));
  CHECK(base.get_int("a", 0) == 1);
  CHECK(base.get_int("b", 0) == 5);
  CHECK(base.get_int("c", 0) == 6);
  try {
    base.check_known({"a", "b"});
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("'c'") != std::string::npos);
  }
}

TEST_CASE("loading names the missing path")
{
  try {
    KeyValueConfig::load("/nonexistent/run.cfg");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("/nonexistent/run.cfg") != std::string::npos);
  }
  const std::filesystem::path dir = oracle::temp_dir("cfg");
  write_file_atomic((dir / "a.cfg").string(), "train.epochs = 4\n");
  CHECK(KeyValueConfig::load((dir / "a.cfg").string()).get_int("train.epochs", 0) == 4);
}

TEST_CASE("every training field round-trips through text")
{
  TrainConfig c;
  c.encoder = EncoderConfig{24, 3, 4, 3.0, GridSpec{8, 8}, PosEmbedding::sinusoidal};
  c.predictor = PredictorConfig{12, 2, 2, 2.0};
  c.batch_size = 7;
  c.epochs = 4;
  c.learning_rate = 3e-4;
  c.weight_decay = 0.01;
  c.warmup_steps = 12;
  c.ema_start = 0.99;
  c.ema_end = 0.999;
  c.seed = 123456789012345ull;
  c.strategy = MultiblockConfig{{MultiblockParams{2, {0.1, 0.2}, {0.5, 2.0}}}, 50};
  c.cls = ClsPolicy{0.25, false};
  c.loss = LossConfig{Distance::l2, 0.5};
  c.weights = WeightConfig{3.0, 2.0};
  c.target_full_context = true;

  const auto text = c.to_kv().to_text();
  const TrainConfig back = TrainConfig::from_kv(KeyValueConfig::parse(text));
  CHECK(back.to_kv().to_text() == text);
  CHECK(back.encoder.embed_dim == 24);
  CHECK(back.encoder.pos_embedding == PosEmbedding::sinusoidal);
  CHECK(back.predictor_config().width == 12);
  CHECK(back.seed == 123456789012345ull);
  CHECK(back.cls.p_source == 0.25);
  CHECK_FALSE(back.cls.border_drop);
  CHECK(back.loss.distance == Distance::l2);
  CHECK(back.target_full_context);
  REQUIRE(std::holds_alternative<MultiblockConfig>(back.strategy));
  CHECK(std::get<MultiblockConfig>(back.strategy).resample_budget == 50);
  CHECK(std::get<MultiblockConfig>(back.strategy).modes.at(0).num_blocks == 2);

  const auto kv = c.to_kv();
  for (const auto& [key, value] : kv.values()) CHECK(TrainConfig::known_keys().count(key) == 1);

  TrainConfig stripe;
  stripe.strategy = StripeParams{4, 0.2, Orientation::vertical};
  const auto s = TrainConfig::from_kv(stripe.to_kv());
  CHECK(std::get<StripeParams>(s.strategy).width == 4);
  CHECK(std::get<StripeParams>(s.strategy).orientation == Orientation::vertical);
}

TEST_CASE("training config validation")
{
  CHECK_THROWS_AS(TrainConfig::from_kv(KeyValueConfig::parse("train.epoch = 3\n")), ConfigError);
  CHECK_THROWS_AS(TrainConfig::from_kv(KeyValueConfig::parse("mask.strategy = checker\n")), ConfigError);
  TrainConfig c;
  c.batch_size = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = TrainConfig{};
  c.ema_end = 1.5;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = TrainConfig{};
  c.strategy = StripeParams{15};
  CHECK_THROWS(c.validate());
  CHECK_NOTHROW(TrainConfig{}.validate());
}
