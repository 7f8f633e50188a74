#include "zscore/blueprint_scorer.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>

#include "csv.hpp"
#include "zscore/error.hpp"

namespace zscore {

namespace {

double log_share(double value, double ref) {
  return saturate(std::log10(1.0 + value) / std::log10(1.0 + ref));
}

ScoreBreakdown assemble(const std::string& wallet,
                        const std::array<std::string_view, 7>& names,
                        const CapTable& caps, const std::array<double, 7>& fractions) {
  ScoreBreakdown out;
  out.wallet = wallet;
  out.sub_scores.reserve(names.size());
  for (std::size_t i = 0; i < names.size(); ++i) {
    const double points = std::clamp(caps[i] * fractions[i], 0.0, caps[i]);
    out.sub_scores.emplace_back(std::string(names[i]), points);
    out.total += points;
  }
  return out;
}

}  // namespace

void BlueprintConfig::validate() const {
  auto check_caps = [](const CapTable& caps, const char* which) {
    double sum = 0.0;
    for (double c : caps) {
      if (!(c >= 0.0)) throw Error(ErrorCode::Config, std::string(which) + " caps must be >= 0");
      sum += c;
    }
    if (std::fabs(sum - 1000.0) > 1e-9) {
      throw Error(ErrorCode::Config, std::string(which) + " caps sum to " + std::to_string(sum) +
                                         ", expected 1000");
    }
  };
  check_caps(lp_caps, "lp");
  check_caps(swap_caps, "swap");
  for (double r : {refs.lp_volume_ref_usd, refs.holding_ref_days, refs.freq_decay_per_month,
                   refs.age_ref_days, refs.cv_clamp, refs.tvl_ref_usd, refs.swap_volume_ref_usd,
                   refs.count_ref, refs.diversity_ref_tokens, refs.hops_ref}) {
    if (!(r > 0.0) || !std::isfinite(r)) {
      throw Error(ErrorCode::Config, "blueprint refs must be strictly positive");
    }
  }
  for (const auto& [tier, score] : refs.fee_tier_score) {
    if (!is_valid_fee_tier(tier)) {
      throw Error(ErrorCode::Config, "fee_tier_score has unknown tier " + std::to_string(tier));
    }
    if (!(score >= 0.0 && score <= 1.0)) {
      throw Error(ErrorCode::Config, "fee_tier_score values must lie in [0,1]");
    }
  }
}

double pool_context_factor(const PoolContext& pool, const BlueprintConfig& cfg) {
  auto it = cfg.refs.fee_tier_score.find(pool.fee_tier_ppm);
  if (it == cfg.refs.fee_tier_score.end()) {
    throw Error(ErrorCode::UnknownFeeTier,
                "no fee-tier score for tier " + std::to_string(pool.fee_tier_ppm));
  }
  return 0.5 * log_share(std::max(pool.tvl_usd, 0.0), cfg.refs.tvl_ref_usd) + 0.5 * it->second;
}

double ScoreBreakdown::sub_score(std::string_view category) const {
  for (const auto& [name, points] : sub_scores) {
    if (name == category) return points;
  }
  throw Error(ErrorCode::InvalidArgument, "unknown sub-category '" + std::string(category) + "'");
}

ScoreBreakdown score_lp(const LpFeatures& f, const BlueprintConfig& cfg) {
  const auto& r = cfg.refs;
  const std::array<double, 7> fractions = {
      log_share(f.total_deposit_usd, r.lp_volume_ref_usd),
      saturate(f.avg_holding_days / r.holding_ref_days),
      saturate(f.liquidity_retention),
      std::exp(-f.deposit_freq_per_month / r.freq_decay_per_month),
      saturate(f.wallet_age_days / r.age_ref_days),
      1.0 - saturate(f.deposit_cv / r.cv_clamp),
      saturate(f.pool_ctx_weight),
  };
  return assemble(f.wallet, kLpSubCategories, cfg.lp_caps, fractions);
}

double temporal_credit(double avg_inter_swap_days) noexcept {
  const double u = std::log10(std::max(avg_inter_swap_days, 1e-4));
  return std::clamp(std::min((u + 2.0) / 2.0, (2.56 - u) / 1.06), 0.0, 1.0);
}

ScoreBreakdown score_swap(const SwapFeatures& f, const BlueprintConfig& cfg) {
  const auto& r = cfg.refs;
  const std::array<double, 7> fractions = {
      log_share(f.total_volume_usd, r.swap_volume_ref_usd) *
          (0.5 + 0.5 * saturate(f.pool_ctx_weight)),
      log_share(static_cast<double>(f.swap_count), r.count_ref),
      saturate(static_cast<double>(f.unique_tokens) / r.diversity_ref_tokens),
      temporal_credit(f.avg_inter_swap_days),
      1.0 - 2.0 * std::fabs(f.volatility_exposure - 0.5),
      saturate((f.avg_route_hops - 1.0) / r.hops_ref),
      std::max(0.0, 1.0 - f.micro_swap_ratio - f.wash_ratio),
  };
  return assemble(f.wallet, kSwapSubCategories, cfg.swap_caps, fractions);
}

ScoreMap score_all(const LpFeatureMap& features, const BlueprintConfig& cfg) {
  ScoreMap out;
  for (const auto& [wallet, f] : features) out.emplace(wallet, score_lp(f, cfg));
  return out;
}

ScoreMap score_all(const SwapFeatureMap& features, const BlueprintConfig& cfg) {
  ScoreMap out;
  for (const auto& [wallet, f] : features) out.emplace(wallet, score_swap(f, cfg));
  return out;
}

const std::vector<std::string>& score_columns(Role role) {
  static const auto build = [](const std::array<std::string_view, 7>& names) {
    std::vector<std::string> cols = {"wallet"};
    for (auto n : names) cols.emplace_back(n);
    cols.emplace_back("total");
    return cols;
  };
  static const std::vector<std::string> lp = build(kLpSubCategories);
  static const std::vector<std::string> swap = build(kSwapSubCategories);
  return role == Role::Lp ? lp : swap;
}

void write_scores_csv(const ScoreMap& scores, Role role, std::ostream& out) {
  csv::write_row(out, score_columns(role));
  char buf[64];
  for (const auto& [wallet, s] : scores) {
    std::vector<std::string> row = {wallet};
    for (const auto& [name, points] : s.sub_scores) {
      std::snprintf(buf, sizeof buf, "%.6f", points);
      row.emplace_back(buf);
    }
    std::snprintf(buf, sizeof buf, "%.6f", s.total);
    row.emplace_back(buf);
    csv::write_row(out, row);
  }
}

ScoreMap read_scores_csv(std::istream& in, Role role) {
  const auto table = csv::read_table(in);
  const auto& cols = score_columns(role);
  if (table.header != cols) {
    throw Error(ErrorCode::MalformedRecord, "score CSV header does not match the " +
                                                std::string(to_string(role)) + " schema");
  }
  ScoreMap out;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& cells = table.rows[r];
    if (cells.size() != cols.size()) {
      throw Error(ErrorCode::MalformedRecord,
                  "line " + std::to_string(r + 2) + ": wrong column count");
    }
    ScoreBreakdown s;
    s.wallet = cells[0];
    std::vector<double> values;
    for (std::size_t c = 1; c < cells.size(); ++c) {
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(cells[c].data(), cells[c].data() + cells[c].size(), v);
      if (ec != std::errc() || ptr != cells[c].data() + cells[c].size()) {
        throw Error(ErrorCode::MalformedRecord,
                    "line " + std::to_string(r + 2) + ": bad number '" + cells[c] + "'");
      }
      values.push_back(v);
    }
    for (std::size_t c = 0; c + 1 < values.size(); ++c) s.sub_scores.emplace_back(cols[c + 1], values[c]);
    s.total = values.back();
    out.emplace(s.wallet, std::move(s));
  }
  return out;
}

}  // namespace zscore
