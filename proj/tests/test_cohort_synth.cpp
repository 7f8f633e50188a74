#include <doctest.h>

#include <set>

#include "zscore/blueprint_scorer.hpp"
#include "zscore/cohort_synth.hpp"
#include "zscore/error.hpp"
#include "zscore/hashing.hpp"
#include "zscore/pipeline.hpp"

using namespace zscore;

namespace {

std::vector<ArchetypeSpec> single(Archetype a) {
  auto s = default_archetype_spec(a);
  s.population_weight = 1.0;
  return {s};
}

std::map<Archetype, double> mean_score_by_archetype(const EventLog& log) {
  std::map<Archetype, std::pair<double, int>> acc;
  for (Role role : {Role::Lp, Role::Swap}) {
    const auto kept = filter_dusk(extract_features(log, role, 0)).kept;
    for (const auto& [w, s] : score_features(kept)) {
      auto& a = acc[*archetype_of_wallet(w)];
      a.first += s.total;
      a.second += 1;
    }
  }
  std::map<Archetype, double> out;
  for (const auto& [k, v] : acc) out[k] = v.first / v.second;
  return out;
}

std::vector<std::size_t> histogram(const ScoreMap& scores) {
  std::vector<std::size_t> h(10, 0);
  for (const auto& [w, s] : scores) ++h[std::min<std::size_t>(9, static_cast<std::size_t>(s.total / 100.0))];
  return h;
}

void check_unimodal(const std::vector<std::size_t>& h) {
  const auto mode = static_cast<std::size_t>(std::max_element(h.begin(), h.end()) - h.begin());
  CHECK(mode >= 2);
  CHECK(mode <= 4);
  for (std::size_t i = 1; i <= mode; ++i) CHECK(h[i] >= h[i - 1]);
  for (std::size_t i = mode + 1; i < h.size(); ++i) CHECK(h[i] <= h[i - 1]);
}

}  // namespace

TEST_CASE("default mix and pool universe are well formed") {
  const auto mix = default_mix();
  const auto pools = default_pool_universe();
  CHECK(mix.size() == 8);
  double w = 0;
  for (const auto& s : mix) w += s.population_weight;
  CHECK(w == doctest::Approx(1.0).epsilon(1e-12));
  CHECK_NOTHROW(validate_mix(mix, pools.size()));
  REQUIRE(pools.size() == 6);
  std::set<int> tiers;
  int stable = 0;
  double lo = 1e300, hi = 0;
  for (const auto& p : pools) {
    tiers.insert(p.context.fee_tier_ppm);
    stable += p.context.is_stable_pair;
    lo = std::min(lo, p.context.tvl_usd);
    hi = std::max(hi, p.context.tvl_usd);
  }
  CHECK(tiers == std::set<int>{100, 500, 3000, 10000});
  CHECK(stable == 2);
  CHECK(lo >= 1e5);
  CHECK(hi <= 1e9);
}

TEST_CASE("invalid mixes are rejected") {
  auto mix = default_mix();
  mix[0].population_weight += 0.1;
  CHECK_THROWS_AS(validate_mix(mix, 6), Error);
  CHECK_THROWS_AS(validate_mix({}, 6), Error);
  mix = default_mix();
  mix[1].amount_log10_usd = {3.0, 2.0};
  CHECK_THROWS_AS(validate_mix(mix, 6), Error);
  mix = default_mix();
  mix[2].pool_weights = {1.0};
  CHECK_THROWS_AS(validate_mix(mix, 6), Error);
  mix = default_mix();
  mix.push_back(mix[0]);
  CHECK_THROWS_AS(validate_mix(mix, 6), Error);
  try {
    generate_cohort(10, {}, default_pool_universe(), 1);
    FAIL("expected InvalidMix");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InvalidMix);
  }
  CHECK_THROWS_AS(generate_cohort(0, default_mix(), default_pool_universe(), 1), Error);
  CHECK_THROWS_AS(generate_cohort(10, default_mix(), default_pool_universe(), 1, 0), Error);
}

TEST_CASE("wallet allocation") {
  const auto mix = default_mix();
  for (std::size_t n : {1u, 7u, 100u, 12345u}) {
    const auto a = allocate_wallets(n, mix);
    REQUIRE(a.size() == mix.size());
    std::size_t total = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      total += a[i];
      CHECK(std::abs(static_cast<double>(a[i]) - n * mix[i].population_weight) < 1.0);
    }
    CHECK(total == n);
  }
}

TEST_CASE("a single dusk LP wallet") {
  const auto log = generate_cohort(1, single(Archetype::DuskLp), default_pool_universe(), 3);
  REQUIRE(log.size() == 1);
  const auto& e = log.events().front();
  CHECK(e.kind == EventKind::Deposit);
  CHECK(e.amount_usd < 10.0);
  CHECK(archetype_of_wallet(e.wallet) == Archetype::DuskLp);
}

TEST_CASE("generated logs satisfy every event invariant") {
  for (std::uint64_t seed = 1; seed <= 12; ++seed) {
    const auto log = generate_cohort(300, default_mix(), default_pool_universe(), seed, 30 + 100 * static_cast<int>(seed));
    CHECK(validate_log(log).empty());
  }
  for (Archetype a : kAllArchetypes) {
    CHECK(validate_log(generate_cohort(40, single(a), default_pool_universe(), 5)).empty());
  }
}

TEST_CASE("generation is deterministic in its inputs") {
  const auto a = generate_cohort(400, default_mix(), default_pool_universe(), 17);
  const auto b = generate_cohort(400, default_mix(), default_pool_universe(), 17);
  CHECK(a == b);
  CHECK_FALSE(a == generate_cohort(400, default_mix(), default_pool_universe(), 18));
  CHECK_FALSE(a == generate_cohort(400, default_mix(), default_pool_universe(), 17, 900));
}

TEST_CASE("dusk archetypes and only they are filtered") {
  const auto log = generate_cohort(4000, default_mix(), default_pool_universe(), 42);
  for (Role role : {Role::Lp, Role::Swap}) {
    const auto split = filter_dusk(extract_features(log, role, 0));
    for (const auto& w : split.dropped) CHECK(is_dusk_archetype(*archetype_of_wallet(w)));
    for (const auto& w : wallets_of(split.kept)) CHECK_FALSE(is_dusk_archetype(*archetype_of_wallet(w)));
    CHECK(!split.dropped.empty());
  }
}

TEST_CASE("declared ordinal contract") {
  const auto order = expected_order(default_mix());
  auto has = [&](Archetype hi, Archetype lo) {
    return std::find(order.begin(), order.end(), std::make_pair(hi, lo)) != order.end();
  };
  CHECK(has(Archetype::SteadyLp, Archetype::MercenaryFarmer));
  CHECK(has(Archetype::SteadyLp, Archetype::WhaleLp));
  CHECK(has(Archetype::WhaleLp, Archetype::MercenaryFarmer));
  CHECK(has(Archetype::PowerTrader, Archetype::WashTrader));
  CHECK(has(Archetype::PowerTrader, Archetype::RetailSwapper));
  CHECK(has(Archetype::RetailSwapper, Archetype::WashTrader));
  for (const auto& [hi, lo] : order) {
    CHECK_FALSE(is_dusk_archetype(hi));
    CHECK_FALSE(is_dusk_archetype(lo));
  }
  auto partial = default_mix();
  partial.erase(std::remove_if(partial.begin(), partial.end(), [](const auto& s) { return s.name == Archetype::WhaleLp; }),
                partial.end());
  for (const auto& [hi, lo] : expected_order(partial)) {
    CHECK(hi != Archetype::WhaleLp);
    CHECK(lo != Archetype::WhaleLp);
  }
}

TEST_CASE("declared order holds on mean blueprint scores across seeds") {
  // 12,500 wallets puts at least 500 in the rarest archetype.
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto log = generate_cohort(12500, default_mix(), default_pool_universe(), seed);
    const auto means = mean_score_by_archetype(log);
    for (const auto& [hi, lo] : expected_order(default_mix())) {
      INFO("seed " << seed << ": " << to_string(hi) << " vs " << to_string(lo));
      CHECK(means.at(hi) > means.at(lo));
    }
  }
}

TEST_CASE("blueprint distribution is bell shaped around the middle range") {
  const auto log = generate_cohort(20000, default_mix(), default_pool_universe(), 42);
  for (Role role : {Role::Lp, Role::Swap}) {
    INFO("role " << to_string(role));
    check_unimodal(histogram(score_features(filter_dusk(extract_features(log, role, 0)).kept)));
  }
}

TEST_CASE("scores never read the archetype tag in wallet ids") {
  const auto log = generate_cohort(600, default_mix(), default_pool_universe(), 8);
  std::vector<Event> scrambled;
  std::map<std::string, std::string> rename;
  for (auto e : log.events()) {
    auto it = rename.find(e.wallet);
    if (it == rename.end()) {
      it = rename.emplace(e.wallet, "0x" + std::to_string(fnv1a64(e.wallet))).first;
    }
    e.wallet = it->second;
    scrambled.push_back(e);
  }
  const EventLog other(scrambled);
  for (Role role : {Role::Lp, Role::Swap}) {
    const auto a = score_features(filter_dusk(extract_features(log, role, 0)).kept);
    const auto b = score_features(filter_dusk(extract_features(other, role, 0)).kept);
    REQUIRE(a.size() == b.size());
    for (const auto& [w, s] : a) CHECK(b.at(rename.at(w)).total == s.total);
  }
}

TEST_CASE("mix files and manifests") {
  const auto mix = parse_mix_json(R"({"archetypes": [
      {"name": "SteadyLp", "population_weight": 0.5},
      {"name": "PowerTrader", "population_weight": 0.5, "wash_probability": 0.2}]})");
  REQUIRE(mix.size() == 2);
  CHECK(mix[0].name == Archetype::SteadyLp);
  CHECK(mix[0].amount_log10_usd == default_archetype_spec(Archetype::SteadyLp).amount_log10_usd);
  CHECK(mix[1].wash_probability == 0.2);
  CHECK_THROWS_AS(parse_mix_json(R"({"archetypes": [{"name": "Nobody", "population_weight": 1}]})"), Error);
  CHECK_THROWS_AS(parse_mix_json("not json"), Error);

  const auto manifest = cohort_manifest_json(100, mix, default_pool_universe(), 77, 365);
  CHECK(manifest.find("\"seed\": 77") != std::string::npos);
  CHECK(manifest.find("SteadyLp") != std::string::npos);
  CHECK(manifest.find("365") != std::string::npos);
}
