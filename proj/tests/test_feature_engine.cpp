#include <doctest.h>

#include <random>
#include <sstream>

#include "helpers.hpp"
#include "zscore/blueprint_config.hpp"
#include "zscore/cohort_synth.hpp"
#include "zscore/error.hpp"
#include "zscore/feature_engine.hpp"

using namespace zscore;
using namespace testutil;
using doctest::Approx;

TEST_CASE("matched deposit and withdraw") {
  const EventLog log({deposit("a", kT0, 100), withdraw("a", kT0 + 10 * kDay, 100)});
  const auto f = extract_lp_features(log, log.max_ts()).at("a");
  CHECK(f.liquidity_retention == 0.0);
  CHECK(f.avg_holding_days == Approx(10.0).epsilon(1e-12));
  CHECK(f.deposit_count == 1);
  CHECK(f.withdraw_count == 1);
  CHECK(f.total_withdraw_usd == 100.0);
}

TEST_CASE("deposits only keep full retention") {
  const EventLog log({deposit("a", kT0, 100), deposit("a", kT0 + kDay, 50)});
  CHECK(extract_lp_features(log, log.max_ts()).at("a").liquidity_retention == 1.0);
}

TEST_CASE("deposit coefficient of variation uses the population std") {
  const EventLog log({deposit("a", kT0, 100), deposit("a", kT0 + kDay, 300)});
  CHECK(extract_lp_features(log, log.max_ts()).at("a").deposit_cv == Approx(0.5).epsilon(1e-12));
  const EventLog one({deposit("b", kT0, 100)});
  CHECK(extract_lp_features(one, one.max_ts()).at("b").deposit_cv == 0.0);
}

TEST_CASE("FIFO holding with partial withdrawals and open lots") {
  // 100 held 20d, 50 held 10d, 50 still open for 20d at observation end.
  const EventLog log({deposit("a", kT0, 100), deposit("a", kT0 + 10 * kDay, 100),
                      withdraw("a", kT0 + 20 * kDay, 150)});
  const auto f = extract_lp_features(log, kT0 + 30 * kDay).at("a");
  CHECK(f.avg_holding_days == Approx(17.5).epsilon(1e-12));
  CHECK(f.liquidity_retention == Approx(0.25));
  CHECK(f.wallet_age_days == Approx(30.0));
}

TEST_CASE("withdrawals only match lots in the same pool") {
  const auto p1 = pool("0x1");
  const auto p2 = pool("0x2");
  const EventLog log({deposit("a", kT0, 100, p1), deposit("a", kT0 + 5 * kDay, 100, p2),
                      withdraw("a", kT0 + 6 * kDay, 100, p2)});
  const auto f = extract_lp_features(log, kT0 + 6 * kDay).at("a");
  // pool 2 lot: 1 day; pool 1 lot still open: 6 days.
  CHECK(f.avg_holding_days == Approx(3.5).epsilon(1e-12));
}

TEST_CASE("deposit frequency per active month") {
  const EventLog spread({deposit("a", kT0, 1), deposit("a", kT0 + 30 * kDay, 1), deposit("a", kT0 + 60 * kDay, 1)});
  CHECK(extract_lp_features(spread, spread.max_ts()).at("a").deposit_freq_per_month == Approx(1.5));
  const EventLog burst({deposit("a", kT0, 1), deposit("a", kT0 + 60, 1)});
  CHECK(extract_lp_features(burst, burst.max_ts()).at("a").deposit_freq_per_month == Approx(60.0));
}

TEST_CASE("pool context weight is deposit weighted") {
  BlueprintConfig cfg;
  const auto big = pool("0xbig", 500, 1e9);   // factor 1.0
  const auto zero = pool("0xz", 10000, 0.0);  // factor 0.25
  const EventLog log({deposit("a", kT0, 300, big), deposit("a", kT0 + 1, 100, zero)});
  CHECK(extract_lp_features(log, log.max_ts(), cfg).at("a").pool_ctx_weight == Approx((300 * 1.0 + 100 * 0.25) / 400));
}

TEST_CASE("observation end before the last event is rejected") {
  const EventLog log({deposit("a", kT0, 1), swap("b", kT0 + 10, 60)});
  CHECK_THROWS_AS(extract_lp_features(log, kT0 + 9), Error);
  CHECK_THROWS_AS(extract_swap_features(log, kT0 + 9), Error);
  try {
    extract_swap_features(log, kT0);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InvalidWindow);
  }
}

TEST_CASE("single micro swap") {
  const EventLog log({swap("s", kT0, 40)});
  const auto f = extract_swap_features(log, kT0 + 3 * kDay).at("s");
  CHECK(f.micro_swap_ratio == 1.0);
  CHECK(f.unique_tokens == 2);
  CHECK(f.avg_inter_swap_days == Approx(3.0));
}

TEST_CASE("round trip within the hour flags the second leg") {
  const EventLog log({swap("s", kT0, 500, "A", "B"), swap("s", kT0 + 1800, 500, "B", "A")});
  CHECK(extract_swap_features(log, log.max_ts()).at("s").wash_ratio == 0.5);
}

TEST_CASE("wash rule boundaries") {
  SUBCASE("exactly one hour still counts") {
    const EventLog log({swap("s", kT0, 500, "A", "B"), swap("s", kT0 + 3600, 500, "B", "A")});
    CHECK(extract_swap_features(log, log.max_ts()).at("s").wash_ratio == 0.5);
  }
  SUBCASE("past the window does not") {
    const EventLog log({swap("s", kT0, 500, "A", "B"), swap("s", kT0 + 3601, 500, "B", "A")});
    CHECK(extract_swap_features(log, log.max_ts()).at("s").wash_ratio == 0.0);
  }
  SUBCASE("different pool does not") {
    const EventLog log({swap("s", kT0, 500, "A", "B", 1, pool("0x1")), swap("s", kT0 + 60, 500, "B", "A", 1, pool("0x2"))});
    CHECK(extract_swap_features(log, log.max_ts()).at("s").wash_ratio == 0.0);
  }
  SUBCASE("same direction does not") {
    const EventLog log({swap("s", kT0, 500, "A", "B"), swap("s", kT0 + 60, 500, "A", "B")});
    CHECK(extract_swap_features(log, log.max_ts()).at("s").wash_ratio == 0.0);
  }
  SUBCASE("each swap pairs at most once") {
    const EventLog log({swap("s", kT0, 500, "A", "B"), swap("s", kT0 + 60, 500, "B", "A"),
                        swap("s", kT0 + 120, 500, "B", "A")});
    CHECK(extract_swap_features(log, log.max_ts()).at("s").wash_ratio == Approx(1.0 / 3.0));
  }
}

TEST_CASE("inter-swap gap and swap aggregates") {
  const auto stable = pool("0xs", 100, 1e8, true);
  const EventLog log({swap("s", kT0, 100, "A", "B", 1), swap("s", kT0 + 10 * kDay, 300, "C", "D", 3, stable)});
  const auto f = extract_swap_features(log, log.max_ts()).at("s");
  CHECK(f.avg_inter_swap_days == Approx(10.0));
  CHECK(f.unique_tokens == 4);
  CHECK(f.avg_route_hops == 2.0);
  CHECK(f.volatility_exposure == Approx(0.25));
  CHECK(f.total_volume_usd == 400.0);
}

TEST_CASE("each role only sees its own events") {
  const EventLog log({deposit("a", kT0, 100), swap("a", kT0 + 1, 100), swap("b", kT0 + 2, 100)});
  CHECK(extract_lp_features(log, log.max_ts()).size() == 1);
  CHECK(extract_swap_features(log, log.max_ts()).size() == 2);
}

TEST_CASE("dusk filter thresholds") {
  const EventLog log({deposit("dusk", kT0, 9.99), deposit("two", kT0, 1), deposit("two", kT0 + 5, 1),
                      deposit("ten", kT0, 10.0), swap("s50", kT0, 50.0), swap("s49", kT0, 49.99)});
  const auto lp = filter_dusk(extract_lp_features(log, log.max_ts()));
  CHECK(lp.dropped == std::vector<std::string>{"dusk"});
  CHECK(lp.kept.count("two") == 1);
  CHECK(lp.kept.count("ten") == 1);
  const auto sw = filter_dusk(extract_swap_features(log, log.max_ts()));
  CHECK(sw.dropped == std::vector<std::string>{"s49"});
  CHECK(sw.kept.count("s50") == 1);
}

TEST_CASE("dusk filter is idempotent") {
  const EventLog log = generate_cohort(400, default_mix(), default_pool_universe(), 11);
  const auto once = filter_dusk(extract_lp_features(log, log.max_ts()));
  const auto twice = filter_dusk(once.kept);
  CHECK(twice.kept == once.kept);
  CHECK(twice.dropped.empty());
}

TEST_CASE("per-wallet locality: merged logs featurize like the union") {
  const EventLog a = generate_cohort(150, default_mix(), default_pool_universe(), 21);
  const EventLog raw = generate_cohort(150, default_mix(), default_pool_universe(), 22);
  std::vector<Event> renamed;
  for (auto e : raw.events()) {
    e.wallet = "other-" + e.wallet;
    renamed.push_back(e);
  }
  const EventLog b(renamed);
  const std::int64_t end = std::max(a.max_ts(), b.max_ts());
  const EventLog merged = merge_logs(a, b);

  auto lp = extract_lp_features(a, end);
  for (const auto& kv : extract_lp_features(b, end)) lp.insert(kv);
  CHECK(extract_lp_features(merged, end) == lp);

  auto sw = extract_swap_features(a, end);
  for (const auto& kv : extract_swap_features(b, end)) sw.insert(kv);
  CHECK(extract_swap_features(merged, end) == sw);
}

TEST_CASE("ratio features stay in range on fuzzed logs") {
  std::mt19937_64 rng(77);
  const auto pools = default_pool_universe();
  const std::vector<std::string> toks = {"A", "B", "C", "D"};
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<Event> events;
    const int n = 1 + static_cast<int>(rng() % 60);
    for (int i = 0; i < n; ++i) {
      const std::string w = "w" + std::to_string(rng() % 5);
      const auto& p = pools[rng() % pools.size()].context;
      const std::int64_t ts = kT0 + static_cast<std::int64_t>(rng() % (90 * kDay));
      const double usd = std::ldexp(static_cast<double>(rng() % 1000), static_cast<int>(rng() % 20) - 5);
      const std::string tx = "0x" + std::to_string(i);
      switch (rng() % 3) {
        case 0: events.push_back(deposit(w, ts, usd, p, tx)); break;
        case 1: events.push_back(withdraw(w, ts, usd, p, tx)); break;
        default: {
          const auto a = rng() % toks.size();
          const auto b = (a + 1 + rng() % (toks.size() - 1)) % toks.size();
          events.push_back(swap(w, ts, usd, toks[a], toks[b], 1 + static_cast<int>(rng() % 4), p, tx));
        }
      }
    }
    const EventLog log(events);
    REQUIRE(validate_log(log).empty());
    for (const auto& [w, f] : extract_lp_features(log, log.max_ts())) {
      CHECK(f.liquidity_retention >= 0.0);
      CHECK(f.liquidity_retention <= 1.0);
      CHECK(f.pool_ctx_weight >= 0.0);
      CHECK(f.pool_ctx_weight <= 1.0);
      CHECK(f.deposit_cv >= 0.0);
      CHECK(f.avg_holding_days >= 0.0);
    }
    for (const auto& [w, f] : extract_swap_features(log, log.max_ts())) {
      for (double r : {f.volatility_exposure, f.micro_swap_ratio, f.wash_ratio, f.pool_ctx_weight}) {
        CHECK(r >= 0.0);
        CHECK(r <= 1.0);
      }
      CHECK(f.avg_route_hops >= 1.0);
      CHECK(f.unique_tokens >= 2);
    }
  }
}

TEST_CASE("feature CSV round trip and schema") {
  const EventLog log = generate_cohort(200, default_mix(), default_pool_universe(), 5);
  const auto lp = extract_lp_features(log, log.max_ts());
  std::stringstream buf;
  write_features_csv(lp, buf);
  std::string header;
  std::getline(buf, header);
  CHECK(header ==
        "wallet,total_deposit_usd,total_withdraw_usd,deposit_count,withdraw_count,deposit_freq_per_month,"
        "avg_holding_days,liquidity_retention,wallet_age_days,deposit_cv,pool_ctx_weight");
  buf.seekg(0);
  const auto back = read_lp_features_csv(buf);
  REQUIRE(back.size() == lp.size());
  for (const auto& [w, f] : lp) {
    const auto& g = back.at(w);
    CHECK(g.deposit_count == f.deposit_count);
    CHECK(g.avg_holding_days == Approx(f.avg_holding_days).epsilon(1e-6));
  }

  const auto sw = extract_swap_features(log, log.max_ts());
  std::stringstream sbuf;
  write_features_csv(sw, sbuf);
  std::getline(sbuf, header);
  CHECK(header ==
        "wallet,total_volume_usd,swap_count,unique_tokens,avg_inter_swap_days,volatility_exposure,"
        "avg_route_hops,micro_swap_ratio,wash_ratio,pool_ctx_weight");
  std::string first_row;
  std::getline(sbuf, first_row);
  CHECK(first_row.find('.') != std::string::npos);
  sbuf.seekg(0);
  CHECK(read_swap_features_csv(sbuf).size() == sw.size());

  std::istringstream wrong("wallet,x\n");
  CHECK_THROWS_AS(read_lp_features_csv(wrong), Error);
}

TEST_CASE("model inputs compress heavy-tailed magnitudes") {
  LpFeatures f;
  f.total_deposit_usd = std::exp(3.0) - 1.0;
  f.liquidity_retention = 0.7;
  const auto x = model_inputs(f);
  REQUIRE(x.size() == model_input_names(Role::Lp).size());
  CHECK(x[0] == Approx(3.0));
  CHECK(x[6] == 0.7);
  SwapFeatures s;
  s.unique_tokens = 5;
  CHECK(model_inputs(s).size() == model_input_names(Role::Swap).size());
  CHECK(model_inputs(s)[2] == 5.0);
}
