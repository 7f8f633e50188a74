#pragma once

#include <array>
#include <map>
#include <string_view>

#include "zscore/event_model.hpp"

namespace zscore {

inline constexpr std::array<std::string_view, 7> kLpSubCategories = {
    "volume", "holding", "retention", "frequency", "age", "consistency", "pool_ctx"};
inline constexpr std::array<std::string_view, 7> kSwapSubCategories = {
    "volume", "count", "diversity", "temporal", "vol_exposure", "routing", "integrity"};

// Caps are indexed in the order of kLpSubCategories / kSwapSubCategories.
using CapTable = std::array<double, 7>;

struct BlueprintRefs {
  double lp_volume_ref_usd = 1e7;
  double holding_ref_days = 720.0;
  double freq_decay_per_month = 20.0;
  double age_ref_days = 365.0;
  double cv_clamp = 2.0;
  double tvl_ref_usd = 1e9;
  double swap_volume_ref_usd = 1e8;
  double count_ref = 1000.0;
  double diversity_ref_tokens = 8.0;
  double hops_ref = 2.0;
  std::map<int, double> fee_tier_score = {{100, 0.6}, {500, 1.0}, {3000, 0.8}, {10000, 0.5}};

  bool operator==(const BlueprintRefs&) const = default;
};

struct BlueprintConfig {
  CapTable lp_caps = {200, 250, 250, 100, 100, 50, 50};
  CapTable swap_caps = {250, 200, 150, 100, 100, 100, 100};
  BlueprintRefs refs;

  // Throws Error(Config) when caps do not sum to 1000, a ref is not strictly
  // positive, or a fee-tier score falls outside [0,1].
  void validate() const;

  bool operator==(const BlueprintConfig&) const = default;
};

inline double saturate(double x) noexcept { return x < 0.0 ? 0.0 : (x > 1.0 ? 1.0 : x); }

// 0.5 * saturated log-TVL share + 0.5 * fee-tier score. Throws
// Error(UnknownFeeTier) when the tier has no configured score.
double pool_context_factor(const PoolContext& pool, const BlueprintConfig& cfg);

}  // namespace zscore
