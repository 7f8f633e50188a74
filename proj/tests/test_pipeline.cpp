#include <doctest.h>

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "helpers.hpp"
#include "zscore/checkpoint.hpp"
#include "zscore/cohort_synth.hpp"
#include "zscore/error.hpp"
#include "zscore/pipeline.hpp"

using namespace zscore;

namespace {

RunConfig tiny(Role role) {
  RunConfig cfg;
  cfg.role = role;
  cfg.model.block_dims = {{32, 32}, {32, 16}};
  cfg.model.head_dims = {16, 8, 1};
  cfg.train.max_epochs = 4;
  return cfg;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("pipeline writes every artifact") {
  const auto log = generate_cohort(800, default_mix(), default_pool_universe(), 42);
  const auto dir = testutil::scratch_dir("pipeline");
  for (Role role : {Role::Lp, Role::Swap}) {
    const auto out = dir / std::string(to_string(role));
    int epochs = 0;
    TrainOptions opt;
    opt.on_epoch = [&](const EpochRecord&) { ++epochs; };
    const auto res = run_pipeline(log, tiny(role), out.string(), opt);
    CHECK(epochs == 4);
    CHECK(res.wallets_kept > 0);
    CHECK(res.wallets_dropped > 0);
    for (const char* f : {"features.csv", "dusk_wallets.csv", "scores.csv", "labels.csv", "history.csv", "model.json",
                          "model.bin", "predictions.csv", "report.json", "bins.csv", "residuals.csv", "config.json"}) {
      CHECK_MESSAGE(std::filesystem::exists(out / f), f);
    }
    const auto report = nlohmann::json::parse(slurp(out / "report.json"));
    CHECK(report["role"] == std::string(to_string(role)));
    CHECK(report["n_wallets"].get<std::size_t>() == res.report.n_wallets);
    // validation wallets only
    CHECK(res.report.n_wallets == static_cast<std::size_t>(std::llround(0.2 * res.wallets_kept)));
    std::ifstream feats(out / "features.csv");
    const auto back = read_features_csv(feats, role);
    CHECK(wallet_count(back) == res.wallets_kept);
  }
}

TEST_CASE("pipeline runs are byte-identical") {
  const auto log = generate_cohort(600, default_mix(), default_pool_universe(), 7);
  const auto dir = testutil::scratch_dir("pipeline_det");
  run_pipeline(log, tiny(Role::Lp), (dir / "a").string());
  run_pipeline(log, tiny(Role::Lp), (dir / "b").string());
  for (const char* f : {"report.json", "model.json", "model.bin", "predictions.csv", "history.csv"}) {
    CHECK_MESSAGE(slurp(dir / "a" / f) == slurp(dir / "b" / f), f);
  }
  auto other = tiny(Role::Lp);
  other.seed = other.model.seed = other.train.seed = 8;
  run_pipeline(log, other, (dir / "c").string());
  CHECK(slurp(dir / "a" / "model.bin") != slurp(dir / "c" / "model.bin"));
}

TEST_CASE("pipeline errors name their stage") {
  const auto dir = testutil::scratch_dir("pipeline_err");
  auto bad = tiny(Role::Lp);
  bad.val_fraction = 0.0;
  const auto log = generate_cohort(200, default_mix(), default_pool_universe(), 1);
  try {
    run_pipeline(log, bad, (dir / "x").string());
    FAIL("expected a config error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Config);
    CHECK(std::string(e.what()).rfind("config:", 0) == 0);
  }
  CHECK_FALSE(std::filesystem::exists(dir / "x" / "features.csv"));

  const EventLog swaps_only({testutil::swap("a", testutil::kT0, 100), testutil::swap("b", testutil::kT0 + 5, 100)});
  try {
    run_pipeline(swaps_only, tiny(Role::Lp), (dir / "y").string());
    FAIL("expected an empty-input error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::EmptyInput);
  }
}

TEST_CASE("prediction role must match the checkpoint") {
  const auto log = generate_cohort(400, default_mix(), default_pool_universe(), 3);
  const auto dir = testutil::scratch_dir("pipeline_role");
  run_pipeline(log, tiny(Role::Lp), dir.string());
  const auto ckpt = load_checkpoint((dir / "model.json").string());
  const auto swap = extract_features(log, Role::Swap, 0);
  try {
    predict_features(ckpt, swap);
    FAIL("expected ShapeMismatch");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ShapeMismatch);
  }
  const auto lp = filter_dusk(extract_features(log, Role::Lp, 0)).kept;
  const auto preds = predict_features(ckpt, lp);
  CHECK(preds.size() == wallet_count(lp));
  for (const auto& [w, p] : preds) {
    CHECK(p >= 0.0);
    CHECK(p <= 1000.0);
  }
  std::stringstream buf;
  write_predictions_csv(preds, buf);
  CHECK(read_predictions_csv(buf) == preds);
}
