#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "zscore/blueprint_config.hpp"
#include "zscore/event_model.hpp"

namespace zscore {

enum class Role { Lp, Swap };

std::string_view to_string(Role role) noexcept;
std::optional<Role> parse_role(std::string_view text) noexcept;

inline constexpr double kSecondsPerDay = 86400.0;
inline constexpr double kDuskLpThresholdUsd = 10.0;
inline constexpr double kDuskSwapThresholdUsd = 50.0;
inline constexpr double kMicroSwapThresholdUsd = 50.0;
inline constexpr std::int64_t kWashWindowSeconds = 3600;

struct LpFeatures {
  std::string wallet;
  double total_deposit_usd = 0.0;
  double total_withdraw_usd = 0.0;
  std::int64_t deposit_count = 0;
  std::int64_t withdraw_count = 0;
  double deposit_freq_per_month = 0.0;
  double avg_holding_days = 0.0;
  double liquidity_retention = 0.0;
  double wallet_age_days = 0.0;
  double deposit_cv = 0.0;
  double pool_ctx_weight = 0.0;

  bool operator==(const LpFeatures&) const = default;
};

struct SwapFeatures {
  std::string wallet;
  double total_volume_usd = 0.0;
  std::int64_t swap_count = 0;
  std::int64_t unique_tokens = 0;
  double avg_inter_swap_days = 0.0;
  double volatility_exposure = 0.0;
  double avg_route_hops = 1.0;
  double micro_swap_ratio = 0.0;
  double wash_ratio = 0.0;
  double pool_ctx_weight = 0.0;

  bool operator==(const SwapFeatures&) const = default;
};

using LpFeatureMap = std::map<std::string, LpFeatures>;
using SwapFeatureMap = std::map<std::string, SwapFeatures>;

// Aggregates deposit/withdraw events per wallet. Holding time uses FIFO
// matching of withdrawn USD against earlier deposits within the same pool;
// unmatched deposit value is held until observation_end.
// Throws Error(InvalidWindow) when observation_end < log.max_ts().
LpFeatureMap extract_lp_features(const EventLog& log, std::int64_t observation_end,
                                 const BlueprintConfig& cfg = {});

// Aggregates swap events per wallet, including the one-hour round-trip wash rule.
SwapFeatureMap extract_swap_features(const EventLog& log, std::int64_t observation_end,
                                     const BlueprintConfig& cfg = {});

bool is_dusk(const LpFeatures& f) noexcept;
bool is_dusk(const SwapFeatures& f) noexcept;

template <class Features>
struct DuskFiltered {
  std::map<std::string, Features> kept;
  std::vector<std::string> dropped;
};

DuskFiltered<LpFeatures> filter_dusk(const LpFeatureMap& features);
DuskFiltered<SwapFeatures> filter_dusk(const SwapFeatureMap& features);

// Column names of the CSV export (wallet first, then fields in declaration order).
const std::vector<std::string>& feature_columns(Role role);

void write_features_csv(const LpFeatureMap& features, std::ostream& out);
void write_features_csv(const SwapFeatureMap& features, std::ostream& out);
LpFeatureMap read_lp_features_csv(std::istream& in);
SwapFeatureMap read_swap_features_csv(std::istream& in);

// Numeric inputs handed to the regressor. Heavy-tailed magnitudes (USD,
// counts, day spans, frequencies) are log1p-compressed; ratios pass through.
const std::vector<std::string>& model_input_names(Role role);
std::vector<double> model_inputs(const LpFeatures& f);
std::vector<double> model_inputs(const SwapFeatures& f);

}  // namespace zscore
