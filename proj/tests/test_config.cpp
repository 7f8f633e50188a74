#include <doctest.h>

#include <fstream>

#include <nlohmann/json.hpp>

#include "helpers.hpp"
#include "zscore/error.hpp"
#include "zscore/run_config.hpp"

using namespace zscore;

namespace {

ErrorCode code_of(const std::string& text) {
  try {
    apply_config_json({}, text);
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::InvalidArgument;
}

}  // namespace

TEST_CASE("default configuration snapshot") {
  const RunConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  const auto j = nlohmann::json::parse(dump_run_config(cfg));
  CHECK(j["role"] == "lp");
  CHECK(j["seed"] == 42);
  CHECK(j["sigma"] == 25.0);
  CHECK(j["val_fraction"] == 0.2);
  CHECK(j["train"]["lr"] == 5e-4);
  CHECK(j["train"]["weight_decay"] == 1e-4);
  CHECK(j["train"]["loss"] == "mse");
  CHECK(j["train"]["max_epochs"] == 500);
  CHECK(j["train"]["early_stop_patience"] == 30);
  CHECK(j["train"]["batch_size"] == 256);
  CHECK(j["train"]["plateau_factor"] == 0.5);
  CHECK(j["train"]["plateau_patience"] == 10);
  CHECK(j["train"]["min_lr"] == 1e-6);
  CHECK(j["train"]["target_scale"] == 1000.0);
  CHECK(j["model"]["block_dims"] == nlohmann::json::parse("[[1024,1024],[1024,512],[512,512],[512,256]]"));
  CHECK(j["model"]["head_dims"] == nlohmann::json::parse("[256,64,1]"));
  CHECK(j["model"]["dropout_p"] == 0.1);
  CHECK(j["blueprint"]["lp_caps"]["holding"] == 250.0);
  CHECK(j["blueprint"]["swap_caps"]["volume"] == 250.0);
  CHECK(j["blueprint"]["refs"]["tvl_ref_usd"] == 1e9);
}

TEST_CASE("dump and apply round trip") {
  RunConfig cfg;
  cfg.role = Role::Swap;
  cfg.sigma = 10.0;
  cfg.train.max_epochs = 12;
  cfg.model.block_dims = {{64, 32}};
  cfg.model.head_dims = {32, 8, 1};
  cfg.blueprint.refs.fee_tier_score[100] = 0.3;
  const RunConfig back = apply_config_json({}, dump_run_config(cfg));
  CHECK(back.role == Role::Swap);
  CHECK(back.sigma == 10.0);
  CHECK(back.train == cfg.train);
  CHECK(back.model == cfg.model);
  CHECK(back.blueprint == cfg.blueprint);
  CHECK(dump_run_config(back) == dump_run_config(cfg));
}

TEST_CASE("partial documents merge onto defaults") {
  const auto cfg = apply_config_json({}, R"({"train": {"max_epochs": 7}, "blueprint": {"lp_caps": {"volume": 150, "holding": 300}}})");
  CHECK(cfg.train.max_epochs == 7);
  CHECK(cfg.train.lr == 5e-4);
  CHECK(cfg.blueprint.lp_caps[0] == 150.0);
  CHECK(cfg.blueprint.lp_caps[1] == 300.0);
  CHECK_NOTHROW(cfg.validate());
}

TEST_CASE("top-level seed reaches model and trainer unless overridden") {
  const auto a = apply_config_json({}, R"({"seed": 9})");
  CHECK(a.seed == 9);
  CHECK(a.model.seed == 9);
  CHECK(a.train.seed == 9);
  const auto b = apply_config_json({}, R"({"seed": 9, "model": {"seed": 3}})");
  CHECK(b.model.seed == 3);
  CHECK(b.train.seed == 9);
}

TEST_CASE("bad documents are config errors") {
  CHECK(code_of("{") == ErrorCode::Config);
  CHECK(code_of("[]") == ErrorCode::Config);
  CHECK(code_of(R"({"colour": 1})") == ErrorCode::Config);
  CHECK(code_of(R"({"train": {"learning_rate": 1}})") == ErrorCode::Config);
  CHECK(code_of(R"({"train": {"lr": "fast"}})") == ErrorCode::Config);
  CHECK(code_of(R"({"role": "maker"})") == ErrorCode::Config);
  CHECK(code_of(R"({"blueprint": {"lp_caps": {"vibes": 1}}})") == ErrorCode::Config);
  CHECK(code_of(R"({"blueprint": {"refs": {"fee_tier_score": {"x": 0.5}}}})") == ErrorCode::Config);
  // unknown tiers merge, then fail validation
  const auto odd = apply_config_json({}, R"({"blueprint": {"refs": {"fee_tier_score": {"250": 0.5}}}})");
  try {
    odd.validate();
    FAIL("expected Config");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Config);
  }
}

TEST_CASE("validation catches out-of-range values") {
  auto expect_bad = [](auto mutate) {
    RunConfig c;
    mutate(c);
    CHECK_THROWS_AS(c.validate(), Error);
  };
  expect_bad([](RunConfig& c) { c.sigma = -1; });
  expect_bad([](RunConfig& c) { c.val_fraction = 0; });
  expect_bad([](RunConfig& c) { c.val_fraction = 1; });
  expect_bad([](RunConfig& c) { c.train.lr = 0; });
  expect_bad([](RunConfig& c) { c.train.plateau_factor = 1; });
  expect_bad([](RunConfig& c) { c.train.batch_size = 0; });
  expect_bad([](RunConfig& c) { c.train.loss = "mae"; });
  expect_bad([](RunConfig& c) { c.model.dropout_p = 1.0; });
  expect_bad([](RunConfig& c) { c.blueprint.swap_caps[6] = 0; });
}

TEST_CASE("config files") {
  const auto dir = testutil::scratch_dir("config");
  const auto path = (dir / "c.json").string();
  std::ofstream(path) << R"({"role": "swap", "sigma": 0})";
  const auto cfg = load_run_config(path);
  CHECK(cfg.role == Role::Swap);
  CHECK(cfg.sigma == 0.0);
  try {
    load_run_config((dir / "nope.json").string());
    FAIL("expected Io");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Io);
  }
}
