#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "zscore/blueprint_config.hpp"
#include "zscore/feature_engine.hpp"

namespace zscore {

struct ScoreBreakdown {
  std::string wallet;
  // (sub-category, points) in the role's declared category order.
  std::vector<std::pair<std::string, double>> sub_scores;
  double total = 0.0;

  double sub_score(std::string_view category) const;

  bool operator==(const ScoreBreakdown&) const = default;
};

using ScoreMap = std::map<std::string, ScoreBreakdown>;

ScoreBreakdown score_lp(const LpFeatures& f, const BlueprintConfig& cfg = {});
ScoreBreakdown score_swap(const SwapFeatures& f, const BlueprintConfig& cfg = {});

// Inter-swap gap credit: a trapezoid in log10(days), full between 1 and ~31.6 days.
double temporal_credit(double avg_inter_swap_days) noexcept;

ScoreMap score_all(const LpFeatureMap& features, const BlueprintConfig& cfg = {});
ScoreMap score_all(const SwapFeatureMap& features, const BlueprintConfig& cfg = {});

const std::vector<std::string>& score_columns(Role role);
void write_scores_csv(const ScoreMap& scores, Role role, std::ostream& out);
ScoreMap read_scores_csv(std::istream& in, Role role);

}  // namespace zscore
