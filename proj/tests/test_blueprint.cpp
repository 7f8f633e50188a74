#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "helpers.hpp"
#include "oracles.hpp"
#include "zscore/blueprint_scorer.hpp"
#include "zscore/error.hpp"

using namespace zscore;
using doctest::Approx;
using namespace oracle;

namespace {

LpFeatures top_lp() {
  LpFeatures f;
  f.wallet = "lp";
  f.total_deposit_usd = 77890;
  f.avg_holding_days = 909;
  f.liquidity_retention = 1.0;
  f.deposit_freq_per_month = 0.12;
  f.wallet_age_days = 1000;
  f.deposit_cv = 0;
  f.pool_ctx_weight = 0.9833;
  f.deposit_count = 3;
  return f;
}

SwapFeatures top_swap() {
  SwapFeatures f;
  f.wallet = "sw";
  f.total_volume_usd = 8.2e7;
  f.swap_count = 1000;
  f.unique_tokens = 7;
  f.avg_inter_swap_days = 8.48;
  f.volatility_exposure = 0.5;
  f.avg_route_hops = 2.2;
  f.pool_ctx_weight = 1.0;
  return f;
}

double sum(const ScoreBreakdown& s) {
  double t = 0;
  for (const auto& [k, v] : s.sub_scores) t += v;
  return t;
}

}  // namespace

TEST_CASE("pool context factor") {
  BlueprintConfig cfg;
  CHECK(pool_context_factor(testutil::pool("p", 10000, 0.0), cfg) == 0.25);
  CHECK(pool_context_factor(testutil::pool("p", 500, 1e9), cfg) == 1.0);
  CHECK(pool_context_factor(testutil::pool("p", 500, 5e8), cfg) == Approx(0.9832761113769355).epsilon(1e-14));
  CHECK(pool_context_factor(testutil::pool("p", 500, 1e12), cfg) == 1.0);
  CHECK_THROWS_AS(pool_context_factor(testutil::pool("p", 250, 1e6), cfg), Error);
}

TEST_CASE("default caps sum to 1000") {
  BlueprintConfig cfg;
  double lp = 0, sw = 0;
  for (double c : cfg.lp_caps) lp += c;
  for (double c : cfg.swap_caps) sw += c;
  CHECK(lp == 1000);
  CHECK(sw == 1000);
  CHECK_NOTHROW(cfg.validate());
  cfg.lp_caps[0] = 199;
  CHECK_THROWS_AS(cfg.validate(), Error);
}

TEST_CASE("all-zero LP features score 150") {
  const auto s = score_lp(LpFeatures{});
  CHECK(s.total == 150.0);
  CHECK(s.sub_score("frequency") == 100.0);
  CHECK(s.sub_score("consistency") == 50.0);
  CHECK(s.sub_score("volume") == 0.0);
}

TEST_CASE("top-bin LP profile") {
  const auto s = score_lp(top_lp());
  const std::array<double, 7> expected = {139.7567785484894, 250, 250, 99.40179640539353, 100, 50, 49.165};
  REQUIRE(s.sub_scores.size() == 7);
  for (std::size_t i = 0; i < 7; ++i) {
    CHECK(s.sub_scores[i].first == kLpSubCategories[i]);
    CHECK(s.sub_scores[i].second == Approx(expected[i]).epsilon(1e-12));
  }
  CHECK(s.total == Approx(938.3235749538828).epsilon(1e-12));
  CHECK(s.total >= 900.0);
}

TEST_CASE("retention 0.5 to 0.9 adds exactly 100") {
  auto f = top_lp();
  f.avg_holding_days = 100;
  f.liquidity_retention = 0.5;
  const double lo = score_lp(f).total;
  f.liquidity_retention = 0.9;
  CHECK(score_lp(f).total - lo == Approx(100.0).epsilon(1e-12));
}

TEST_CASE("top-bin swap profile") {
  const auto s = score_swap(top_swap());
  const std::array<double, 7> expected = {247.30668291824477, 200, 131.25, 100, 100, 60, 100};
  REQUIRE(s.sub_scores.size() == 7);
  for (std::size_t i = 0; i < 7; ++i) {
    CHECK(s.sub_scores[i].first == kSwapSubCategories[i]);
    CHECK(s.sub_scores[i].second == Approx(expected[i]).epsilon(1e-12));
  }
  CHECK(s.total == Approx(938.5566829182447).epsilon(1e-12));
}

TEST_CASE("swap edge cases") {
  auto f = top_swap();
  f.wash_ratio = 0.5;
  f.micro_swap_ratio = 1.0;
  CHECK(score_swap(f).sub_score("integrity") == 0.0);
  f = top_swap();
  f.volatility_exposure = 0.0;
  CHECK(score_swap(f).sub_score("vol_exposure") == 0.0);
  f.volatility_exposure = 1.0;
  CHECK(score_swap(f).sub_score("vol_exposure") == 0.0);
}

TEST_CASE("temporal credit plateau") {
  CHECK(temporal_credit(1.0) == Approx(1.0));
  CHECK(temporal_credit(30.0) == Approx(1.0));
  CHECK(temporal_credit(0.1) == Approx(0.5));
  CHECK(temporal_credit(1e-4) == 0.0);
  CHECK(temporal_credit(1e-9) == 0.0);
  CHECK(temporal_credit(363.0) == Approx(0.0).epsilon(1e-3));
  CHECK(temporal_credit(5000.0) == 0.0);
}

TEST_CASE("scores match the straight-line oracle on fuzzed features") {
  std::mt19937_64 rng(2024);
  for (int i = 0; i < 10000; ++i) {
    const auto lf = random_lp(rng);
    const auto ls = score_lp(lf);
    const auto lo = oracle_lp(lf);
    double lt = 0;
    for (std::size_t k = 0; k < 7; ++k) {
      REQUIRE(std::abs(ls.sub_scores[k].second - lo[k]) < 1e-9);
      lt += lo[k];
    }
    REQUIRE(std::abs(ls.total - lt) < 1e-9);

    const auto sf = random_swap(rng);
    const auto ss = score_swap(sf);
    const auto so = oracle_swap(sf);
    double st = 0;
    for (std::size_t k = 0; k < 7; ++k) {
      REQUIRE(std::abs(ss.sub_scores[k].second - so[k]) < 1e-9);
      st += so[k];
    }
    REQUIRE(std::abs(ss.total - st) < 1e-9);
  }
}

TEST_CASE("caps hold and the total is the exact sub-score sum") {
  std::mt19937_64 rng(9);
  BlueprintConfig cfg;
  for (int i = 0; i < 5000; ++i) {
    const auto ls = score_lp(random_lp(rng), cfg);
    for (std::size_t k = 0; k < 7; ++k) {
      REQUIRE(ls.sub_scores[k].second >= 0.0);
      REQUIRE(ls.sub_scores[k].second <= cfg.lp_caps[k]);
    }
    REQUIRE(ls.total == sum(ls));
    REQUIRE(ls.total <= 1000.0);
    const auto ss = score_swap(random_swap(rng), cfg);
    for (std::size_t k = 0; k < 7; ++k) {
      REQUIRE(ss.sub_scores[k].second >= 0.0);
      REQUIRE(ss.sub_scores[k].second <= cfg.swap_caps[k]);
      // zeroing one sub-category moves the total by at most its cap
      REQUIRE(ss.total - (ss.total - ss.sub_scores[k].second) <= 250.0);
    }
    REQUIRE(ss.total == sum(ss));
    REQUIRE(ss.total <= 1000.0);
  }
}

TEST_CASE("LP monotonicity") {
  std::mt19937_64 rng(31);
  for (int i = 0; i < 2000; ++i) {
    const auto base = random_lp(rng);
    const double t = score_lp(base).total;
    auto up = [&](auto member, double factor, bool increasing) {
      auto g = base;
      g.*member = g.*member * factor + 0.01;
      const double t2 = score_lp(g).total;
      if (increasing) REQUIRE(t2 >= t);
      else REQUIRE(t2 <= t);
    };
    up(&LpFeatures::total_deposit_usd, 1.7, true);
    up(&LpFeatures::avg_holding_days, 1.7, true);
    up(&LpFeatures::wallet_age_days, 1.7, true);
    up(&LpFeatures::deposit_freq_per_month, 1.7, false);
    up(&LpFeatures::deposit_cv, 1.7, false);
    auto g = base;
    g.liquidity_retention = std::min(1.0, g.liquidity_retention + 0.1);
    REQUIRE(score_lp(g).total >= t);
  }
}

TEST_CASE("swap monotonicity") {
  std::mt19937_64 rng(32);
  for (int i = 0; i < 2000; ++i) {
    const auto base = random_swap(rng);
    const double t = score_swap(base).total;
    auto g = base;
    g.total_volume_usd *= 1.9;
    REQUIRE(score_swap(g).total >= t);
    g = base;
    g.swap_count += 7;
    REQUIRE(score_swap(g).total >= t);
    g = base;
    g.unique_tokens += 1;
    REQUIRE(score_swap(g).total >= t);
    g = base;
    g.avg_route_hops += 0.3;
    REQUIRE(score_swap(g).total >= t);
    g = base;
    g.micro_swap_ratio = std::min(1.0, g.micro_swap_ratio + 0.05);
    REQUIRE(score_swap(g).total <= t);
    g = base;
    g.wash_ratio = std::min(1.0, g.wash_ratio + 0.05);
    REQUIRE(score_swap(g).total <= t);
  }
}

TEST_CASE("score CSV round trip") {
  std::mt19937_64 rng(4);
  ScoreMap m;
  for (int i = 0; i < 20; ++i) {
    auto f = random_swap(rng);
    f.wallet = "w" + std::to_string(i);
    m[f.wallet] = score_swap(f);
  }
  std::stringstream buf;
  write_scores_csv(m, Role::Swap, buf);
  std::string header;
  std::getline(buf, header);
  CHECK(header == "wallet,volume,count,diversity,temporal,vol_exposure,routing,integrity,total");
  buf.seekg(0);
  const auto back = read_scores_csv(buf, Role::Swap);
  REQUIRE(back.size() == m.size());
  // six fixed decimals: half-unit rounding bound
  for (const auto& [w, s] : m) CHECK(std::abs(back.at(w).total - s.total) <= 5e-7);
  std::stringstream lp_buf(header + "\n");
  CHECK_THROWS_AS(read_scores_csv(lp_buf, Role::Lp), Error);
}
