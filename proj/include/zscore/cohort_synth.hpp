#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "zscore/event_model.hpp"
#include "zscore/feature_engine.hpp"

namespace zscore {

enum class Archetype {
  DuskLp,
  MercenaryFarmer,
  SteadyLp,
  WhaleLp,
  DuskSwapper,
  RetailSwapper,
  PowerTrader,
  WashTrader,
};

inline constexpr std::array<Archetype, 8> kAllArchetypes = {
    Archetype::DuskLp,      Archetype::MercenaryFarmer, Archetype::SteadyLp,    Archetype::WhaleLp,
    Archetype::DuskSwapper, Archetype::RetailSwapper,   Archetype::PowerTrader, Archetype::WashTrader};

std::string_view to_string(Archetype a) noexcept;
std::optional<Archetype> parse_archetype(std::string_view text) noexcept;
Role archetype_role(Archetype a) noexcept;
bool is_dusk_archetype(Archetype a) noexcept;

struct Range {
  double lo = 0.0;
  double hi = 0.0;

  bool operator==(const Range&) const = default;
};

struct ArchetypeSpec {
  Archetype name = Archetype::RetailSwapper;
  double population_weight = 0.0;
  Range amount_log10_usd;   // per-event amount, log-uniform
  Range event_count;        // LP: deposits; swappers: swaps (wash legs included)
  Range time_days;          // LP: holding per deposit; swappers: gap between trades
  Range cadence_days;       // LP only: gap between consecutive deposits
  Range retention;          // LP only
  Range token_set_size;     // swappers only
  std::vector<double> hop_weights = {1.0};  // P(route_hops = 1, 2, ...)
  double wash_probability = 0.0;
  std::vector<double> pool_weights;  // over the pool universe; empty = uniform

  bool operator==(const ArchetypeSpec&) const = default;
};

struct SynthPool {
  PoolContext context;
  std::array<std::string, 2> tokens;
};

inline constexpr std::int64_t kCohortStartTs = 1620000000;
inline constexpr int kDefaultSpanDays = 1200;

std::vector<SynthPool> default_pool_universe();
ArchetypeSpec default_archetype_spec(Archetype a);
std::vector<ArchetypeSpec> default_mix();

// Throws Error(InvalidMix) for empty mixes, weights that do not sum to 1,
// negative or inverted ranges, or pool weights of the wrong length.
void validate_mix(const std::vector<ArchetypeSpec>& mix, std::size_t pool_count);

// Largest-remainder allocation of n wallets across the mix, in mix order.
std::vector<std::size_t> allocate_wallets(std::size_t n, const std::vector<ArchetypeSpec>& mix);

// Deterministic in all inputs. Wallet ids are "<Archetype>-<index>", a tag
// the scoring pipeline never reads. Throws Error(InvalidMix) or
// Error(InvalidArgument) (n == 0, span_days < 1).
EventLog generate_cohort(std::size_t n_wallets, const std::vector<ArchetypeSpec>& mix,
                         const std::vector<SynthPool>& pools, std::uint64_t seed,
                         int span_days = kDefaultSpanDays);

std::optional<Archetype> archetype_of_wallet(std::string_view wallet) noexcept;

// Declared ordinal contract (higher, lower) restricted to archetypes in the mix.
std::vector<std::pair<Archetype, Archetype>> expected_order(const std::vector<ArchetypeSpec>& mix);

std::string cohort_manifest_json(std::size_t n_wallets, const std::vector<ArchetypeSpec>& mix,
                                 const std::vector<SynthPool>& pools, std::uint64_t seed, int span_days);

// Mix files: {"archetypes": [{"name": "SteadyLp", "population_weight": 0.1, ...}]}.
// Omitted fields take the archetype's defaults.
std::vector<ArchetypeSpec> parse_mix_json(const std::string& text);

}  // namespace zscore
