#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "zscore/feature_engine.hpp"

namespace zscore {

inline constexpr double kDefaultTolerance = 50.0;
inline constexpr double kHistogramLimit = 300.0;
inline constexpr double kHistogramWidth = 10.0;

// Fraction of |pred - target| <= tol. Throws Error(LengthMismatch) for unequal
// or empty inputs and Error(InvalidArgument) for tol < 0.
double tolerance_accuracy(std::span<const double> preds, std::span<const double> targets, double tol);

struct HistogramBin {
  double lo = 0.0;
  double hi = 0.0;
  std::size_t count = 0;

  bool operator==(const HistogramBin&) const = default;
};

struct ResidualStats {
  double mean = 0.0;
  double std = 0.0;  // population
  std::vector<HistogramBin> histogram;  // [lo, hi) bins of width 10 over [-300, 300)
  std::size_t below = 0;                // residual < -300
  std::size_t above = 0;                // residual >= 300
};

// residual = pred - target. Needs at least two pairs.
ResidualStats residual_stats(std::span<const double> preds, std::span<const double> targets);

struct BinRow {
  int score_lo = 0;
  int score_hi = 0;
  std::vector<std::pair<std::string, double>> metrics;  // role-specific table columns
  std::size_t wallet_count = 0;

  double metric(const std::string& name) const;
  bool operator==(const BinRow&) const = default;
};

// Table column names (score range first, wallet count last).
const std::vector<std::string>& bin_table_columns(Role role);

// Width-100 bins over [0,1000); scores of exactly 1000 fall in the top bin.
// Empty bins are omitted. Throws Error(MissingScore) for an unscored wallet.
std::vector<BinRow> bin_summary(const LpFeatureMap& features, const std::map<std::string, double>& scores);
std::vector<BinRow> bin_summary(const SwapFeatureMap& features, const std::map<std::string, double>& scores);

struct ResidualRow {
  std::string wallet;
  double target = 0.0;
  double pred = 0.0;
  double residual = 0.0;

  bool operator==(const ResidualRow&) const = default;
};

struct EvalReport {
  Role role = Role::Lp;
  std::size_t n_wallets = 0;
  double tolerance = kDefaultTolerance;
  double tol_accuracy = 0.0;
  double residual_mean = 0.0;
  double residual_std = 0.0;
  std::vector<HistogramBin> residual_histogram;
  std::size_t residual_below = 0;
  std::size_t residual_above = 0;
  std::vector<BinRow> bin_table;
  std::string binned_by = "predicted";
  std::vector<ResidualRow> rows;

  bool operator==(const EvalReport&) const = default;
};

// Assembles a report for every wallet in `features`: residuals against
// `targets`, bins by `predictions`. Throws Error(MissingScore).
EvalReport build_report(const LpFeatureMap& features, const std::map<std::string, double>& predictions,
                        const std::map<std::string, double>& targets, double tol = kDefaultTolerance);
EvalReport build_report(const SwapFeatureMap& features, const std::map<std::string, double>& predictions,
                        const std::map<std::string, double>& targets, double tol = kDefaultTolerance);

std::string report_to_json(const EvalReport& report);
EvalReport report_from_json(const std::string& text);

// Writes report.json, bins.csv and residuals.csv into `dir` (created if
// missing). Throws Error(EmptyReport) when n_wallets is 0, Error(Io) on write
// failure.
void emit_report(const EvalReport& report, const std::string& dir);

// Rank correlation with average ranks for ties.
double spearman(std::span<const double> a, std::span<const double> b);

}  // namespace zscore
