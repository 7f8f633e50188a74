#include "zscore/cohort_synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>
#include <set>

#include <json.hpp>

#include "zscore/error.hpp"
#include "zscore/hashing.hpp"

namespace zscore {

namespace {

using nlohmann::json;

constexpr std::array<std::string_view, 8> kArchetypeNames = {
    "DuskLp", "MercenaryFarmer", "SteadyLp", "WhaleLp", "DuskSwapper", "RetailSwapper", "PowerTrader", "WashTrader"};

double round_cents(double usd) { return std::round(usd * 100.0) / 100.0; }

std::string hex_id(std::uint64_t a, std::uint64_t b, int words) {
  std::string out = "0x";
  char buf[17];
  std::uint64_t state = mix_keys(a, b);
  for (int i = 0; i < words; ++i) {
    state = splitmix64(state);
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(state));
    out += buf;
  }
  return out;
}

class WalletRng {
 public:
  explicit WalletRng(std::uint64_t seed) : rng_(seed) {}

  double uniform(double lo, double hi) {
    if (hi <= lo) return lo;
    return std::uniform_real_distribution<double>(lo, hi)(rng_);
  }
  double uniform(const Range& r) { return uniform(r.lo, r.hi); }
  double log_uniform(const Range& r) { return std::exp(uniform(std::log(r.lo), std::log(r.hi))); }
  double pow10_uniform(const Range& r) { return std::pow(10.0, uniform(r)); }
  long long integer(const Range& r) {
    const auto lo = static_cast<long long>(std::llround(r.lo));
    const auto hi = static_cast<long long>(std::llround(r.hi));
    if (hi <= lo) return lo;
    return std::uniform_int_distribution<long long>(lo, hi)(rng_);
  }
  // Log-uniform over the integers [lo, hi]; activity counts are heavy-tailed.
  long long count(const Range& r) {
    const double lo = std::max(1.0, std::round(r.lo));
    const double hi = std::max(lo, std::round(r.hi));
    const double v = std::floor(std::exp(uniform(std::log(lo), std::log(hi + 1.0))));
    return static_cast<long long>(std::clamp(v, lo, hi));
  }
  std::size_t pick(const std::vector<double>& weights) {
    return std::discrete_distribution<std::size_t>(weights.begin(), weights.end())(rng_);
  }
  bool chance(double p) { return uniform(0.0, 1.0) < p; }

 private:
  std::mt19937_64 rng_;
};

std::vector<double> pool_weights_for(const ArchetypeSpec& spec, std::size_t pool_count) {
  if (spec.pool_weights.empty()) return std::vector<double>(pool_count, 1.0);
  return spec.pool_weights;
}

struct Draft {
  double day;
  std::int64_t extra_seconds;
  EventKind kind;
  std::size_t pool;
  double amount;
  bool reverse;  // swap direction: tokens[1] -> tokens[0]
  int hops;
};

// Rescales draft days so the whole history fits within 95% of the span, then
// places it at a random start offset.
std::vector<std::int64_t> place(std::vector<Draft>& drafts, WalletRng& rng, int span_days) {
  double end = 0.0;
  for (const auto& d : drafts) end = std::max(end, d.day);
  const double budget = 0.95 * span_days;
  const double scale = end > budget ? budget / end : 1.0;
  const double start = rng.uniform(0.0, span_days - end * scale - 1.0);
  std::vector<std::int64_t> ts;
  ts.reserve(drafts.size());
  for (const auto& d : drafts) {
    const double day = start + d.day * scale;
    ts.push_back(kCohortStartTs + static_cast<std::int64_t>(std::llround(day * kSecondsPerDay)) + d.extra_seconds);
  }
  return ts;
}

std::vector<Draft> draft_lp(const ArchetypeSpec& spec, WalletRng& rng, std::size_t pool_count) {
  const auto weights = pool_weights_for(spec, pool_count);
  const long long deposits = rng.count(spec.event_count);
  const double retention = std::clamp(rng.uniform(spec.retention), 0.0, 1.0);
  std::vector<Draft> drafts;
  double day = 0.0;
  for (long long i = 0; i < deposits; ++i) {
    const std::size_t pool = rng.pick(weights);
    const double amount = round_cents(rng.pow10_uniform(spec.amount_log10_usd));
    drafts.push_back({day, 0, EventKind::Deposit, pool, amount, false, 0});
    const double hold = spec.time_days.hi > 0.0 ? rng.log_uniform(spec.time_days) : 0.0;
    const double withdrawn = round_cents(amount * (1.0 - retention));
    if (withdrawn > 0.0) drafts.push_back({day + hold, 0, EventKind::Withdraw, pool, withdrawn, false, 0});
    if (spec.cadence_days.hi > 0.0) day += rng.log_uniform(spec.cadence_days);
  }
  return drafts;
}

std::vector<Draft> draft_swaps(const ArchetypeSpec& spec, WalletRng& rng, const std::vector<SynthPool>& pools) {
  // Pools are added in weighted random order until the token target is met.
  auto weights = pool_weights_for(spec, pools.size());
  const auto token_target = static_cast<std::size_t>(std::max(2LL, rng.integer(spec.token_set_size)));
  std::vector<std::size_t> chosen;
  std::set<std::string> tokens;
  while (tokens.size() < token_target) {
    if (std::all_of(weights.begin(), weights.end(), [](double w) { return w <= 0.0; })) break;
    const std::size_t p = rng.pick(weights);
    weights[p] = 0.0;
    chosen.push_back(p);
    tokens.insert(pools[p].tokens[0]);
    tokens.insert(pools[p].tokens[1]);
  }
  std::vector<double> chosen_weights;
  const auto base = pool_weights_for(spec, pools.size());
  for (std::size_t p : chosen) chosen_weights.push_back(std::max(base[p], 1e-3));

  const long long count = rng.count(spec.event_count);
  std::vector<Draft> drafts;
  double day = 0.0;
  while (static_cast<long long>(drafts.size()) < count) {
    const std::size_t pool = chosen[rng.pick(chosen_weights)];
    const double amount = round_cents(rng.pow10_uniform(spec.amount_log10_usd));
    const bool reverse = rng.chance(0.5);
    const int hops = 1 + static_cast<int>(rng.pick(spec.hop_weights));
    drafts.push_back({day, 0, EventKind::Swap, pool, amount, reverse, hops});
    if (static_cast<long long>(drafts.size()) < count && rng.chance(spec.wash_probability)) {
      const auto offset = static_cast<std::int64_t>(rng.uniform(60.0, 3000.0));
      const double back = round_cents(amount * rng.uniform(0.97, 1.0));
      drafts.push_back({day, offset, EventKind::Swap, pool, back, !reverse, hops});
    }
    day += spec.time_days.hi > 0.0 ? rng.log_uniform(spec.time_days) : 0.0;
  }
  return drafts;
}

void check_range(const Range& r, const char* what, std::string_view who, bool allow_negative = false) {
  if (!std::isfinite(r.lo) || !std::isfinite(r.hi) || r.hi < r.lo || (!allow_negative && r.lo < 0.0)) {
    throw Error(ErrorCode::InvalidMix, std::string(who) + ": invalid " + what + " range");
  }
}

json range_json(const Range& r) { return json::array({r.lo, r.hi}); }

Range range_from(const json& j, const char* key, Range fallback) {
  if (!j.contains(key)) return fallback;
  const auto& v = j.at(key);
  if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) {
    throw Error(ErrorCode::InvalidMix, std::string("mix field '") + key + "' must be [lo, hi]");
  }
  return Range{v[0].get<double>(), v[1].get<double>()};
}

}  // namespace

std::string_view to_string(Archetype a) noexcept { return kArchetypeNames[static_cast<std::size_t>(a)]; }

std::optional<Archetype> parse_archetype(std::string_view text) noexcept {
  for (std::size_t i = 0; i < kArchetypeNames.size(); ++i) {
    if (kArchetypeNames[i] == text) return static_cast<Archetype>(i);
  }
  return std::nullopt;
}

Role archetype_role(Archetype a) noexcept {
  switch (a) {
    case Archetype::DuskLp:
    case Archetype::MercenaryFarmer:
    case Archetype::SteadyLp:
    case Archetype::WhaleLp: return Role::Lp;
    default: return Role::Swap;
  }
}

bool is_dusk_archetype(Archetype a) noexcept { return a == Archetype::DuskLp || a == Archetype::DuskSwapper; }

std::vector<SynthPool> default_pool_universe() {
  auto pool = [](int i, int tier, double tvl, bool stable, const char* a, const char* b) {
    return SynthPool{PoolContext{hex_id(0x706f6f6cULL, static_cast<std::uint64_t>(i), 3).substr(0, 42), tier, tvl, stable},
                     {a, b}};
  };
  return {
      pool(0, 100, 4.0e8, true, "USDC", "USDT"),   pool(1, 500, 8.0e7, true, "DAI", "USDC"),
      pool(2, 500, 1.0e9, false, "WETH", "USDC"),  pool(3, 3000, 2.5e8, false, "WBTC", "WETH"),
      pool(4, 3000, 1.5e7, false, "UNI", "WETH"),  pool(5, 10000, 2.0e5, false, "PEPE", "WETH"),
  };
}

ArchetypeSpec default_archetype_spec(Archetype a) {
  ArchetypeSpec s;
  s.name = a;
  switch (a) {
    case Archetype::DuskLp:
      s.population_weight = 0.10;
      s.amount_log10_usd = {0.0, std::log10(9.99)};
      s.event_count = {1, 1};
      s.retention = {1.0, 1.0};
      break;
    case Archetype::MercenaryFarmer:
      s.population_weight = 0.18;
      s.amount_log10_usd = {2.4, 5.5};
      s.event_count = {3, 120};
      s.time_days = {0.05, 40.0};
      s.cadence_days = {0.1, 15.0};
      s.retention = {0.0, 0.3};
      s.pool_weights = {0.05, 0.05, 0.2, 0.2, 0.2, 0.3};
      break;
    case Archetype::SteadyLp:
      s.population_weight = 0.08;
      s.amount_log10_usd = {2.5, 5.7};
      s.event_count = {2, 6};
      s.time_days = {90.0, 900.0};
      s.cadence_days = {20.0, 150.0};
      s.retention = {0.4, 1.0};
      s.pool_weights = {0.3, 0.2, 0.3, 0.15, 0.05, 0.0};
      break;
    case Archetype::WhaleLp:
      s.population_weight = 0.14;
      s.amount_log10_usd = {4.8, 7.3};
      s.event_count = {2, 10};
      s.time_days = {10.0, 250.0};
      s.cadence_days = {3.0, 60.0};
      s.retention = {0.05, 0.55};
      s.pool_weights = {0.2, 0.1, 0.4, 0.3, 0.0, 0.0};
      break;
    case Archetype::DuskSwapper:
      s.population_weight = 0.10;
      s.amount_log10_usd = {-0.5, std::log10(49.99)};
      s.event_count = {1, 1};
      s.token_set_size = {2, 2};
      break;
    case Archetype::RetailSwapper:
      s.population_weight = 0.28;
      s.amount_log10_usd = {1.0, 4.1};
      s.event_count = {2, 60};
      s.time_days = {0.3, 45.0};
      s.token_set_size = {2, 5};
      s.hop_weights = {0.7, 0.25, 0.05};
      s.wash_probability = 0.03;
      break;
    case Archetype::PowerTrader:
      s.population_weight = 0.05;
      s.amount_log10_usd = {2.3, 5.5};
      s.event_count = {4, 1000};
      s.time_days = {0.3, 20.0};
      s.token_set_size = {3, 8};
      s.hop_weights = {0.6, 0.25, 0.15};
      break;
    case Archetype::WashTrader:
      s.population_weight = 0.07;
      s.amount_log10_usd = {0.3, 1.65};
      s.event_count = {10, 400};
      s.wash_probability = 0.95;
      s.pool_weights = {0.3, 0.2, 0.3, 0.1, 0.05, 0.05};
      break;
  }
  return s;
}

std::vector<ArchetypeSpec> default_mix() {
  std::vector<ArchetypeSpec> mix;
  for (auto a : kAllArchetypes) mix.push_back(default_archetype_spec(a));
  return mix;
}

void validate_mix(const std::vector<ArchetypeSpec>& mix, std::size_t pool_count) {
  if (mix.empty()) throw Error(ErrorCode::InvalidMix, "mix is empty");
  if (pool_count == 0) throw Error(ErrorCode::InvalidMix, "pool universe is empty");
  double total = 0.0;
  std::set<Archetype> seen;
  for (const auto& s : mix) {
    const auto who = to_string(s.name);
    if (!seen.insert(s.name).second) throw Error(ErrorCode::InvalidMix, std::string(who) + " listed twice");
    if (!(s.population_weight >= 0.0)) throw Error(ErrorCode::InvalidMix, std::string(who) + ": negative weight");
    total += s.population_weight;
    check_range(s.amount_log10_usd, "amount_log10_usd", who, true);
    check_range(s.event_count, "event_count", who);
    if (s.event_count.hi < 1.0) throw Error(ErrorCode::InvalidMix, std::string(who) + ": event_count must reach 1");
    check_range(s.time_days, "time_days", who);
    check_range(s.cadence_days, "cadence_days", who);
    check_range(s.retention, "retention", who);
    if (s.retention.hi > 1.0) throw Error(ErrorCode::InvalidMix, std::string(who) + ": retention above 1");
    check_range(s.token_set_size, "token_set_size", who);
    if ((s.time_days.hi > 0.0 && s.time_days.lo <= 0.0) || (s.cadence_days.hi > 0.0 && s.cadence_days.lo <= 0.0)) {
      throw Error(ErrorCode::InvalidMix, std::string(who) + ": day ranges must be strictly positive or zero");
    }
    if (s.hop_weights.empty() ||
        std::any_of(s.hop_weights.begin(), s.hop_weights.end(), [](double w) { return !(w >= 0.0); }) ||
        std::accumulate(s.hop_weights.begin(), s.hop_weights.end(), 0.0) <= 0.0) {
      throw Error(ErrorCode::InvalidMix, std::string(who) + ": hop_weights must be non-negative with positive sum");
    }
    if (!(s.wash_probability >= 0.0 && s.wash_probability <= 1.0)) {
      throw Error(ErrorCode::InvalidMix, std::string(who) + ": wash_probability outside [0,1]");
    }
    if (!s.pool_weights.empty()) {
      if (s.pool_weights.size() != pool_count) {
        throw Error(ErrorCode::InvalidMix, std::string(who) + ": pool_weights length differs from pool universe");
      }
      if (std::any_of(s.pool_weights.begin(), s.pool_weights.end(), [](double w) { return !(w >= 0.0); }) ||
          std::accumulate(s.pool_weights.begin(), s.pool_weights.end(), 0.0) <= 0.0) {
        throw Error(ErrorCode::InvalidMix, std::string(who) + ": pool_weights must be non-negative with positive sum");
      }
    }
  }
  if (std::fabs(total - 1.0) > 1e-9) {
    throw Error(ErrorCode::InvalidMix, "population weights sum to " + std::to_string(total) + ", expected 1");
  }
}

std::vector<std::size_t> allocate_wallets(std::size_t n, const std::vector<ArchetypeSpec>& mix) {
  std::vector<std::size_t> counts(mix.size(), 0);
  std::vector<std::pair<double, std::size_t>> remainders;
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < mix.size(); ++i) {
    const double exact = mix[i].population_weight * static_cast<double>(n);
    counts[i] = static_cast<std::size_t>(std::floor(exact + 1e-9));
    assigned += counts[i];
    remainders.emplace_back(-(exact - static_cast<double>(counts[i])), i);
  }
  std::stable_sort(remainders.begin(), remainders.end());
  for (std::size_t k = 0; assigned < n && k < remainders.size(); ++k, ++assigned) ++counts[remainders[k].second];
  return counts;
}

EventLog generate_cohort(std::size_t n_wallets, const std::vector<ArchetypeSpec>& mix,
                         const std::vector<SynthPool>& pools, std::uint64_t seed, int span_days) {
  if (n_wallets == 0) throw Error(ErrorCode::InvalidArgument, "cohort needs at least one wallet");
  if (span_days < 2) throw Error(ErrorCode::InvalidArgument, "span_days must be at least 2");
  validate_mix(mix, pools.size());

  const auto counts = allocate_wallets(n_wallets, mix);
  std::vector<Event> events;
  for (std::size_t a = 0; a < mix.size(); ++a) {
    const ArchetypeSpec& spec = mix[a];
    const bool lp = archetype_role(spec.name) == Role::Lp;
    for (std::size_t i = 0; i < counts[a]; ++i) {
      char idx[16];
      std::snprintf(idx, sizeof idx, "%06zu", i);
      const std::string wallet = std::string(to_string(spec.name)) + "-" + idx;
      const std::uint64_t wallet_seed = keyed_seed(seed, wallet);
      WalletRng rng(wallet_seed);
      auto drafts = lp ? draft_lp(spec, rng, pools.size()) : draft_swaps(spec, rng, pools);
      const auto ts = place(drafts, rng, span_days);
      for (std::size_t k = 0; k < drafts.size(); ++k) {
        const Draft& d = drafts[k];
        const SynthPool& pool = pools[d.pool];
        Event e;
        e.kind = d.kind;
        e.wallet = wallet;
        e.tx_hash = hex_id(wallet_seed, k, 4);
        e.ts = ts[k];
        e.pool = pool.context;
        e.amount_usd = d.amount;
        if (d.kind == EventKind::Swap) {
          e.token_in = pool.tokens[d.reverse ? 1 : 0];
          e.token_out = pool.tokens[d.reverse ? 0 : 1];
          e.route_hops = d.hops;
        } else {
          e.tokens = pool.tokens;
          if (d.kind == EventKind::Withdraw) e.fees_collected_usd = round_cents(d.amount * 0.002);
        }
        events.push_back(std::move(e));
      }
    }
  }
  return EventLog(std::move(events));
}

std::optional<Archetype> archetype_of_wallet(std::string_view wallet) noexcept {
  const auto dash = wallet.find('-');
  if (dash == std::string_view::npos) return std::nullopt;
  return parse_archetype(wallet.substr(0, dash));
}

std::vector<std::pair<Archetype, Archetype>> expected_order(const std::vector<ArchetypeSpec>& mix) {
  static const std::vector<std::pair<Archetype, Archetype>> declared = {
      {Archetype::SteadyLp, Archetype::WhaleLp},
      {Archetype::WhaleLp, Archetype::MercenaryFarmer},
      {Archetype::SteadyLp, Archetype::MercenaryFarmer},
      {Archetype::PowerTrader, Archetype::RetailSwapper},
      {Archetype::RetailSwapper, Archetype::WashTrader},
      {Archetype::PowerTrader, Archetype::WashTrader},
  };
  std::set<Archetype> present;
  for (const auto& s : mix) {
    if (s.population_weight > 0.0) present.insert(s.name);
  }
  std::vector<std::pair<Archetype, Archetype>> out;
  for (const auto& pair : declared) {
    if (present.contains(pair.first) && present.contains(pair.second)) out.push_back(pair);
  }
  return out;
}

std::string cohort_manifest_json(std::size_t n_wallets, const std::vector<ArchetypeSpec>& mix,
                                 const std::vector<SynthPool>& pools, std::uint64_t seed, int span_days) {
  json archetypes = json::array();
  const auto counts = allocate_wallets(n_wallets, mix);
  for (std::size_t i = 0; i < mix.size(); ++i) {
    const auto& s = mix[i];
    archetypes.push_back({{"name", std::string(to_string(s.name))},
                          {"population_weight", s.population_weight},
                          {"wallets", counts[i]},
                          {"amount_log10_usd", range_json(s.amount_log10_usd)},
                          {"event_count", range_json(s.event_count)},
                          {"time_days", range_json(s.time_days)},
                          {"cadence_days", range_json(s.cadence_days)},
                          {"retention", range_json(s.retention)},
                          {"token_set_size", range_json(s.token_set_size)},
                          {"hop_weights", s.hop_weights},
                          {"wash_probability", s.wash_probability},
                          {"pool_weights", s.pool_weights}});
  }
  json pool_list = json::array();
  for (const auto& p : pools) {
    pool_list.push_back({{"pool", p.context.pool_id},
                         {"fee_tier_ppm", p.context.fee_tier_ppm},
                         {"pool_tvl_usd", p.context.tvl_usd},
                         {"is_stable_pair", p.context.is_stable_pair},
                         {"tokens", p.tokens}});
  }
  json j = {{"n_wallets", n_wallets},     {"seed", seed},
            {"span_days", span_days},     {"start_ts", kCohortStartTs},
            {"mix", archetypes},          {"pool_universe", pool_list}};
  return j.dump(2);
}

std::vector<ArchetypeSpec> parse_mix_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::InvalidMix, std::string("mix file is not valid JSON: ") + e.what());
  }
  const json* list = &j;
  if (j.is_object() && j.contains("archetypes")) list = &j["archetypes"];
  if (j.is_object() && j.contains("mix")) list = &j["mix"];
  if (!list->is_array()) throw Error(ErrorCode::InvalidMix, "mix must be an array of archetype specs");
  std::vector<ArchetypeSpec> mix;
  try {
    for (const auto& entry : *list) {
      auto name = parse_archetype(entry.at("name").get<std::string>());
      if (!name) throw Error(ErrorCode::InvalidMix, "unknown archetype '" + entry.at("name").get<std::string>() + "'");
      ArchetypeSpec s = default_archetype_spec(*name);
      s.population_weight = entry.value("population_weight", entry.value("weight", s.population_weight));
      s.amount_log10_usd = range_from(entry, "amount_log10_usd", s.amount_log10_usd);
      s.event_count = range_from(entry, "event_count", s.event_count);
      s.time_days = range_from(entry, "time_days", s.time_days);
      s.cadence_days = range_from(entry, "cadence_days", s.cadence_days);
      s.retention = range_from(entry, "retention", s.retention);
      s.token_set_size = range_from(entry, "token_set_size", s.token_set_size);
      if (entry.contains("hop_weights")) s.hop_weights = entry["hop_weights"].get<std::vector<double>>();
      s.wash_probability = entry.value("wash_probability", s.wash_probability);
      if (entry.contains("pool_weights")) s.pool_weights = entry["pool_weights"].get<std::vector<double>>();
      mix.push_back(std::move(s));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidMix, std::string("invalid mix entry: ") + e.what());
  }
  return mix;
}

}  // namespace zscore
