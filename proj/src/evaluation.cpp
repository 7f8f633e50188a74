#include "zscore/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>

#include <json.hpp>

#include "csv.hpp"
#include "zscore/error.hpp"

namespace zscore {

namespace {

using nlohmann::json;

void check_lengths(std::span<const double> a, std::span<const double> b, std::size_t min_len) {
  if (a.size() != b.size() || a.size() < min_len) {
    throw Error(ErrorCode::LengthMismatch, "predictions (" + std::to_string(a.size()) + ") and targets (" +
                                               std::to_string(b.size()) + ") must have equal length >= " +
                                               std::to_string(min_len));
  }
}

std::size_t bin_index(double score) {
  if (!(score >= 0.0)) return 0;
  return std::min<std::size_t>(static_cast<std::size_t>(score / 100.0), 9);
}

double lookup(const std::map<std::string, double>& scores, const std::string& wallet) {
  auto it = scores.find(wallet);
  if (it == scores.end()) throw Error(ErrorCode::MissingScore, "no score for wallet " + wallet);
  return it->second;
}

template <class Map, class Metrics>
std::vector<BinRow> bin_impl(Role role, const Map& features, const std::map<std::string, double>& scores,
                             Metrics&& metrics) {
  const auto& cols = bin_table_columns(role);
  const std::size_t n_metrics = cols.size() - 2;
  std::array<std::vector<double>, 10> sums;
  std::array<std::size_t, 10> counts{};
  for (auto& s : sums) s.assign(n_metrics, 0.0);
  for (const auto& [wallet, f] : features) {
    const std::size_t b = bin_index(lookup(scores, wallet));
    const auto values = metrics(f);
    for (std::size_t i = 0; i < n_metrics; ++i) sums[b][i] += values[i];
    ++counts[b];
  }
  std::vector<BinRow> rows;
  for (std::size_t b = 0; b < 10; ++b) {
    if (counts[b] == 0) continue;
    BinRow row;
    row.score_lo = static_cast<int>(b) * 100;
    row.score_hi = row.score_lo + 100;
    row.wallet_count = counts[b];
    for (std::size_t i = 0; i < n_metrics; ++i) {
      row.metrics.emplace_back(cols[i + 1], sums[b][i] / static_cast<double>(counts[b]));
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

template <class Map>
EvalReport report_impl(Role role, const Map& features, const std::map<std::string, double>& predictions,
                       const std::map<std::string, double>& targets, double tol) {
  EvalReport r;
  r.role = role;
  r.n_wallets = features.size();
  r.tolerance = tol;
  std::vector<double> p, t;
  for (const auto& [wallet, f] : features) {
    ResidualRow row{wallet, lookup(targets, wallet), lookup(predictions, wallet), 0.0};
    row.residual = row.pred - row.target;
    p.push_back(row.pred);
    t.push_back(row.target);
    r.rows.push_back(std::move(row));
  }
  r.bin_table = bin_summary(features, predictions);
  if (r.n_wallets == 0) return r;
  r.tol_accuracy = tolerance_accuracy(p, t, tol);
  if (r.n_wallets >= 2) {
    const auto stats = residual_stats(p, t);
    r.residual_mean = stats.mean;
    r.residual_std = stats.std;
    r.residual_histogram = stats.histogram;
    r.residual_below = stats.below;
    r.residual_above = stats.above;
  }
  return r;
}

std::string fmt6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

}  // namespace

double tolerance_accuracy(std::span<const double> preds, std::span<const double> targets, double tol) {
  check_lengths(preds, targets, 1);
  if (!(tol >= 0.0)) throw Error(ErrorCode::InvalidArgument, "tolerance must be >= 0");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (std::fabs(preds[i] - targets[i]) <= tol) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(preds.size());
}

ResidualStats residual_stats(std::span<const double> preds, std::span<const double> targets) {
  check_lengths(preds, targets, 2);
  ResidualStats s;
  const std::size_t n_bins = static_cast<std::size_t>(2.0 * kHistogramLimit / kHistogramWidth);
  s.histogram.resize(n_bins);
  for (std::size_t i = 0; i < n_bins; ++i) {
    s.histogram[i].lo = -kHistogramLimit + kHistogramWidth * static_cast<double>(i);
    s.histogram[i].hi = s.histogram[i].lo + kHistogramWidth;
  }
  const double n = static_cast<double>(preds.size());
  std::vector<double> residuals(preds.size());
  for (std::size_t i = 0; i < preds.size(); ++i) residuals[i] = preds[i] - targets[i];
  for (double r : residuals) s.mean += r;
  s.mean /= n;
  double var = 0.0;
  for (double r : residuals) var += (r - s.mean) * (r - s.mean);
  s.std = std::sqrt(var / n);
  for (double r : residuals) {
    if (r < -kHistogramLimit) {
      ++s.below;
    } else if (r >= kHistogramLimit) {
      ++s.above;
    } else {
      auto idx = static_cast<std::size_t>(std::floor((r + kHistogramLimit) / kHistogramWidth));
      ++s.histogram[std::min(idx, n_bins - 1)].count;
    }
  }
  return s;
}

double BinRow::metric(const std::string& name) const {
  for (const auto& [k, v] : metrics) {
    if (k == name) return v;
  }
  throw Error(ErrorCode::InvalidArgument, "bin table has no column '" + name + "'");
}

const std::vector<std::string>& bin_table_columns(Role role) {
  static const std::vector<std::string> lp = {"Score Range",        "Avg Deposit ($)",     "Avg Withdraw ($)",
                                              "Avg Holding (days)", "Liquidity Remaining", "Deposit Frequency",
                                              "Wallet Count"};
  static const std::vector<std::string> swap = {"Score Bin",      "Avg Volume ($)",    "Avg Holding (days)",
                                                "Avg Swap Count", "Avg Unique Tokens", "Wallet Count"};
  return role == Role::Lp ? lp : swap;
}

std::vector<BinRow> bin_summary(const LpFeatureMap& features, const std::map<std::string, double>& scores) {
  return bin_impl(Role::Lp, features, scores, [](const LpFeatures& f) {
    return std::array<double, 5>{f.total_deposit_usd, f.total_withdraw_usd, f.avg_holding_days,
                                 f.liquidity_retention, f.deposit_freq_per_month};
  });
}

std::vector<BinRow> bin_summary(const SwapFeatureMap& features, const std::map<std::string, double>& scores) {
  return bin_impl(Role::Swap, features, scores, [](const SwapFeatures& f) {
    return std::array<double, 4>{f.total_volume_usd, f.avg_inter_swap_days, static_cast<double>(f.swap_count),
                                 static_cast<double>(f.unique_tokens)};
  });
}

EvalReport build_report(const LpFeatureMap& features, const std::map<std::string, double>& predictions,
                        const std::map<std::string, double>& targets, double tol) {
  return report_impl(Role::Lp, features, predictions, targets, tol);
}

EvalReport build_report(const SwapFeatureMap& features, const std::map<std::string, double>& predictions,
                        const std::map<std::string, double>& targets, double tol) {
  return report_impl(Role::Swap, features, predictions, targets, tol);
}

std::string report_to_json(const EvalReport& r) {
  json hist = json::array();
  for (const auto& b : r.residual_histogram) hist.push_back({{"lo", b.lo}, {"hi", b.hi}, {"count", b.count}});
  json bins = json::array();
  for (const auto& row : r.bin_table) {
    json metrics = json::array();
    for (const auto& [k, v] : row.metrics) metrics.push_back({{"name", k}, {"value", v}});
    bins.push_back({{"score_lo", row.score_lo},
                    {"score_hi", row.score_hi},
                    {"metrics", metrics},
                    {"wallet_count", row.wallet_count}});
  }
  json rows = json::array();
  for (const auto& row : r.rows) {
    rows.push_back({{"wallet", row.wallet}, {"target", row.target}, {"pred", row.pred}, {"residual", row.residual}});
  }
  json j = {{"role", std::string(to_string(r.role))},
            {"n_wallets", r.n_wallets},
            {"tolerance", r.tolerance},
            {"tol_accuracy", r.tol_accuracy},
            {"residual_mean", r.residual_mean},
            {"residual_std", r.residual_std},
            {"residual_histogram", hist},
            {"residual_below", r.residual_below},
            {"residual_above", r.residual_above},
            {"bin_table", bins},
            {"binned_by", r.binned_by},
            {"rows", rows}};
  return j.dump(2);
}

EvalReport report_from_json(const std::string& text) {
  EvalReport r;
  try {
    const json j = json::parse(text);
    auto role = parse_role(j.at("role").get<std::string>());
    if (!role) throw Error(ErrorCode::MalformedRecord, "report has an unknown role");
    r.role = *role;
    r.n_wallets = j.at("n_wallets").get<std::size_t>();
    r.tolerance = j.at("tolerance").get<double>();
    r.tol_accuracy = j.at("tol_accuracy").get<double>();
    r.residual_mean = j.at("residual_mean").get<double>();
    r.residual_std = j.at("residual_std").get<double>();
    for (const auto& b : j.at("residual_histogram")) {
      r.residual_histogram.push_back({b.at("lo").get<double>(), b.at("hi").get<double>(),
                                      b.at("count").get<std::size_t>()});
    }
    r.residual_below = j.at("residual_below").get<std::size_t>();
    r.residual_above = j.at("residual_above").get<std::size_t>();
    for (const auto& b : j.at("bin_table")) {
      BinRow row;
      row.score_lo = b.at("score_lo").get<int>();
      row.score_hi = b.at("score_hi").get<int>();
      row.wallet_count = b.at("wallet_count").get<std::size_t>();
      for (const auto& m : b.at("metrics")) {
        row.metrics.emplace_back(m.at("name").get<std::string>(), m.at("value").get<double>());
      }
      r.bin_table.push_back(std::move(row));
    }
    r.binned_by = j.at("binned_by").get<std::string>();
    for (const auto& row : j.at("rows")) {
      r.rows.push_back({row.at("wallet").get<std::string>(), row.at("target").get<double>(),
                        row.at("pred").get<double>(), row.at("residual").get<double>()});
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::MalformedRecord, std::string("invalid report JSON: ") + e.what());
  }
  return r;
}

void emit_report(const EvalReport& r, const std::string& dir) {
  if (r.n_wallets == 0) throw Error(ErrorCode::EmptyReport, "refusing to emit a report with no wallets");
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::Io, "cannot create report directory '" + dir + "': " + ec.message());
  const std::filesystem::path base(dir);

  auto open = [](const std::filesystem::path& p) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::Io, "cannot write '" + p.string() + "'");
    return out;
  };

  {
    auto out = open(base / "report.json");
    out << report_to_json(r) << '\n';
    if (!out) throw Error(ErrorCode::Io, "write failed for report.json");
  }
  {
    auto out = open(base / "bins.csv");
    csv::write_row(out, bin_table_columns(r.role));
    for (const auto& row : r.bin_table) {
      std::vector<std::string> cells = {"[" + std::to_string(row.score_lo) + ", " + std::to_string(row.score_hi) + ")"};
      for (const auto& [k, v] : row.metrics) cells.push_back(fmt6(v));
      cells.push_back(std::to_string(row.wallet_count));
      csv::write_row(out, cells);
    }
    if (!out) throw Error(ErrorCode::Io, "write failed for bins.csv");
  }
  {
    auto out = open(base / "residuals.csv");
    csv::write_row(out, {"wallet", "target", "pred", "residual"});
    for (const auto& row : r.rows) {
      csv::write_row(out, {row.wallet, fmt6(row.target), fmt6(row.pred), fmt6(row.residual)});
    }
    if (!out) throw Error(ErrorCode::Io, "write failed for residuals.csv");
  }
}

double spearman(std::span<const double> a, std::span<const double> b) {
  check_lengths(a, b, 2);
  auto ranks = [](std::span<const double> v) {
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t i, std::size_t j) { return v[i] < v[j]; });
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < idx.size();) {
      std::size_t j = i;
      while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
      const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
      for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
      i = j + 1;
    }
    return r;
  };
  const auto ra = ranks(a);
  const auto rb = ranks(b);
  const double n = static_cast<double>(ra.size());
  const double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / n;
  const double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / n;
  double cov = 0.0, va = 0.0, vb = 0.0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    cov += (ra[i] - ma) * (rb[i] - mb);
    va += (ra[i] - ma) * (ra[i] - ma);
    vb += (rb[i] - mb) * (rb[i] - mb);
  }
  if (va == 0.0 || vb == 0.0) return 0.0;
  return cov / std::sqrt(va * vb);
}

}  // namespace zscore
