#pragma once

// Independent oracles shared by the unit and acceptance suites.

#include <algorithm>
#include <array>
#include <cmath>
#include <random>
#include <vector>

#include "zscore/feature_engine.hpp"
#include "zscore/neural_core.hpp"

namespace oracle {

using namespace zscore;

// Straight-line restatement of the scoring formulas, kept separate from the library.
inline double sat(double x) { return std::min(1.0, std::max(0.0, x)); }

inline std::array<double, 7> oracle_lp(const LpFeatures& f) {
  return {200 * sat(std::log10(1 + f.total_deposit_usd) / std::log10(1 + 1e7)),
          250 * sat(f.avg_holding_days / 720),
          250 * f.liquidity_retention,
          100 * std::exp(-f.deposit_freq_per_month / 20),
          100 * sat(f.wallet_age_days / 365),
          50 * (1 - sat(f.deposit_cv / 2)),
          50 * f.pool_ctx_weight};
}

inline std::array<double, 7> oracle_swap(const SwapFeatures& f) {
  const double u = std::log10(std::max(f.avg_inter_swap_days, 1e-4));
  return {250 * sat(std::log10(1 + f.total_volume_usd) / std::log10(1 + 1e8)) * (0.5 + 0.5 * f.pool_ctx_weight),
          200 * sat(std::log10(1 + static_cast<double>(f.swap_count)) / std::log10(1001.0)),
          150 * sat(static_cast<double>(f.unique_tokens) / 8),
          100 * std::clamp(std::min((u + 2) / 2, (2.56 - u) / 1.06), 0.0, 1.0),
          100 * (1 - 2 * std::abs(f.volatility_exposure - 0.5)),
          100 * sat((f.avg_route_hops - 1) / 2),
          std::max(0.0, 100 - 100 * f.micro_swap_ratio - 100 * f.wash_ratio)};
}

inline LpFeatures random_lp(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  LpFeatures f;
  f.total_deposit_usd = std::pow(10.0, 9 * u(rng));
  f.avg_holding_days = 2000 * u(rng);
  f.liquidity_retention = u(rng);
  f.deposit_freq_per_month = std::pow(10.0, 4 * u(rng) - 2);
  f.wallet_age_days = 1500 * u(rng);
  f.deposit_cv = 4 * u(rng);
  f.pool_ctx_weight = u(rng);
  return f;
}

inline SwapFeatures random_swap(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  SwapFeatures f;
  f.total_volume_usd = std::pow(10.0, 10 * u(rng));
  f.swap_count = 1 + static_cast<std::int64_t>(std::pow(10.0, 4 * u(rng)));
  f.unique_tokens = 2 + static_cast<std::int64_t>(12 * u(rng));
  f.avg_inter_swap_days = std::pow(10.0, 6 * u(rng) - 4);
  f.volatility_exposure = u(rng);
  f.avg_route_hops = 1 + 4 * u(rng);
  f.micro_swap_ratio = u(rng);
  f.wash_ratio = u(rng) * (1 - f.micro_swap_ratio);
  f.pool_ctx_weight = u(rng);
  return f;
}

inline constexpr double kH = 1e-5;
inline constexpr double kMaxRel = 1e-6;

inline Matrix random_matrix(Eigen::Index r, Eigen::Index c, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
  return m;
}

inline double rel_error(double analytic, double numeric) {
  const double denom = std::max(std::abs(analytic), std::abs(numeric));
  return denom == 0.0 ? 0.0 : std::abs(analytic - numeric) / denom;
}

// Central difference of f with respect to m(i), restoring m afterwards.
template <class F>
double central_diff(Matrix& m, Eigen::Index i, F&& f) {
  const double keep = m.data()[i];
  m.data()[i] = keep + kH;
  const double up = f();
  m.data()[i] = keep - kH;
  const double down = f();
  m.data()[i] = keep;
  return (up - down) / (2 * kH);
}

// Checks `count` random coordinates of `m` against the analytic gradient `g`.
template <class F>
double worst_coordinate(Matrix& m, const Matrix& g, int count, std::mt19937_64& rng, F&& f) {
  double worst = 0.0;
  for (int k = 0; k < count; ++k) {
    const auto i = static_cast<Eigen::Index>(rng() % static_cast<std::uint64_t>(m.size()));
    worst = std::max(worst, rel_error(g.data()[i], central_diff(m, i, f)));
  }
  return worst;
}

// Central differences at h=1e-5 carry ~1e-11 absolute round-off on an O(1)
// loss, so gradients much smaller than this floor cannot be resolved to 1e-6.
inline constexpr double kResolvableGradient = 1e-4;

// Like worst_coordinate, drawing only among entries with |g| >= floor.
// Returns the number of coordinates actually checked through `checked`.
template <class F>
double worst_resolvable_coordinate(Matrix& m, const Matrix& g, int count, std::mt19937_64& rng, F&& f,
                                   int& checked, double floor = kResolvableGradient) {
  std::vector<Eigen::Index> eligible;
  for (Eigen::Index i = 0; i < g.size(); ++i) {
    if (std::abs(g.data()[i]) >= floor) eligible.push_back(i);
  }
  double worst = 0.0;
  for (int k = 0; k < count && !eligible.empty(); ++k) {
    const auto i = eligible[rng() % eligible.size()];
    worst = std::max(worst, rel_error(g.data()[i], central_diff(m, i, f)));
    ++checked;
  }
  return worst;
}

inline double weighted_sum(const Matrix& y, const Matrix& r) { return (y.array() * r.array()).sum(); }

}  // namespace oracle
