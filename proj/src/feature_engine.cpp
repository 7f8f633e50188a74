#include "zscore/feature_engine.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <deque>
#include <istream>
#include <ostream>
#include <set>
#include <unordered_map>

#include "csv.hpp"
#include "zscore/error.hpp"

namespace zscore {

namespace {

void check_window(const EventLog& log, std::int64_t observation_end) {
  if (observation_end < log.max_ts()) {
    throw Error(ErrorCode::InvalidWindow,
                "observation_end " + std::to_string(observation_end) +
                    " precedes the latest event at " + std::to_string(log.max_ts()));
  }
}

double days_between(std::int64_t from, std::int64_t to) {
  return static_cast<double>(to - from) / kSecondsPerDay;
}

// Groups event indices by wallet, preserving log order within each wallet.
std::map<std::string, std::vector<const Event*>> group_by_wallet(const EventLog& log, bool swaps) {
  std::map<std::string, std::vector<const Event*>> groups;
  for (const auto& e : log.events()) {
    if ((e.kind == EventKind::Swap) == swaps) groups[e.wallet].push_back(&e);
  }
  return groups;
}

struct Lot {
  std::int64_t ts;
  double remaining;
};

LpFeatures lp_features_for(const std::string& wallet, const std::vector<const Event*>& events,
                           std::int64_t observation_end, const BlueprintConfig& cfg) {
  LpFeatures f;
  f.wallet = wallet;

  std::map<std::string, std::deque<Lot>> lots;
  std::vector<double> deposits;
  double held_usd = 0.0;
  double held_usd_days = 0.0;
  double ctx_weighted = 0.0;
  double ctx_plain = 0.0;

  for (const Event* e : events) {
    const double factor = pool_context_factor(e->pool, cfg);
    ctx_plain += factor;
    if (e->kind == EventKind::Deposit) {
      ++f.deposit_count;
      f.total_deposit_usd += e->amount_usd;
      deposits.push_back(e->amount_usd);
      ctx_weighted += e->amount_usd * factor;
      lots[e->pool.pool_id].push_back(Lot{e->ts, e->amount_usd});
    } else {
      ++f.withdraw_count;
      f.total_withdraw_usd += e->amount_usd;
      auto& queue = lots[e->pool.pool_id];
      double need = e->amount_usd;
      while (need > 0.0 && !queue.empty()) {
        Lot& front = queue.front();
        const double take = std::min(need, front.remaining);
        held_usd += take;
        held_usd_days += take * days_between(front.ts, e->ts);
        front.remaining -= take;
        need -= take;
        if (front.remaining <= 0.0) queue.pop_front();
      }
    }
  }
  for (const auto& [pool, queue] : lots) {
    for (const Lot& lot : queue) {
      held_usd += lot.remaining;
      held_usd_days += lot.remaining * days_between(lot.ts, observation_end);
    }
  }

  const std::int64_t first = events.front()->ts;
  const std::int64_t last = events.back()->ts;
  const double span_days = days_between(first, last);
  f.deposit_freq_per_month =
      static_cast<double>(f.deposit_count) / std::max(1.0 / 30.0, span_days / 30.0);
  f.avg_holding_days = held_usd > 0.0 ? held_usd_days / held_usd : 0.0;
  if (f.total_deposit_usd > 0.0) {
    f.liquidity_retention = saturate(1.0 - f.total_withdraw_usd / f.total_deposit_usd);
  } else {
    f.liquidity_retention = f.total_withdraw_usd > 0.0 ? 0.0 : 1.0;
  }
  f.wallet_age_days = days_between(first, observation_end);

  if (deposits.size() >= 2) {
    const double n = static_cast<double>(deposits.size());
    double mean = 0.0;
    for (double d : deposits) mean += d;
    mean /= n;
    if (mean > 0.0) {
      double var = 0.0;
      for (double d : deposits) var += (d - mean) * (d - mean);
      f.deposit_cv = std::sqrt(var / n) / mean;
    }
  }
  f.pool_ctx_weight = f.total_deposit_usd > 0.0
                          ? ctx_weighted / f.total_deposit_usd
                          : ctx_plain / static_cast<double>(events.size());
  f.pool_ctx_weight = saturate(f.pool_ctx_weight);
  return f;
}

SwapFeatures swap_features_for(const std::string& wallet, const std::vector<const Event*>& swaps,
                               std::int64_t observation_end, const BlueprintConfig& cfg) {
  SwapFeatures f;
  f.wallet = wallet;
  f.swap_count = static_cast<std::int64_t>(swaps.size());

  std::set<std::string> tokens;
  double volatile_volume = 0.0;
  std::int64_t volatile_count = 0;
  std::int64_t hops = 0;
  std::int64_t micro = 0;
  double ctx_weighted = 0.0;
  double ctx_plain = 0.0;
  for (const Event* e : swaps) {
    f.total_volume_usd += e->amount_usd;
    tokens.insert(*e->token_in);
    tokens.insert(*e->token_out);
    if (!e->pool.is_stable_pair) {
      volatile_volume += e->amount_usd;
      ++volatile_count;
    }
    hops += *e->route_hops;
    if (e->amount_usd < kMicroSwapThresholdUsd) ++micro;
    const double factor = pool_context_factor(e->pool, cfg);
    ctx_weighted += e->amount_usd * factor;
    ctx_plain += factor;
  }

  // Round trips: swap j reverses an earlier, still unpaired swap i in the same
  // pool within the window. Both legs are consumed; only j counts as wash.
  std::vector<bool> paired(swaps.size(), false);
  std::int64_t wash = 0;
  for (std::size_t j = 1; j < swaps.size(); ++j) {
    const Event& second = *swaps[j];
    std::size_t i = j;
    while (i > 0 && second.ts - swaps[i - 1]->ts <= kWashWindowSeconds) --i;
    for (; i < j; ++i) {
      const Event& first = *swaps[i];
      if (paired[i] || first.pool.pool_id != second.pool.pool_id) continue;
      if (*first.token_in == *second.token_out && *first.token_out == *second.token_in) {
        paired[i] = true;
        paired[j] = true;
        ++wash;
        break;
      }
    }
  }

  const double n = static_cast<double>(f.swap_count);
  f.unique_tokens = static_cast<std::int64_t>(tokens.size());
  if (swaps.size() >= 2) {
    f.avg_inter_swap_days = days_between(swaps.front()->ts, swaps.back()->ts) / (n - 1.0);
  } else {
    f.avg_inter_swap_days = days_between(swaps.front()->ts, observation_end);
  }
  f.volatility_exposure = f.total_volume_usd > 0.0 ? volatile_volume / f.total_volume_usd
                                                   : static_cast<double>(volatile_count) / n;
  f.volatility_exposure = saturate(f.volatility_exposure);
  f.avg_route_hops = static_cast<double>(hops) / n;
  f.micro_swap_ratio = static_cast<double>(micro) / n;
  f.wash_ratio = static_cast<double>(wash) / n;
  f.pool_ctx_weight =
      saturate(f.total_volume_usd > 0.0 ? ctx_weighted / f.total_volume_usd : ctx_plain / n);
  return f;
}

std::string fixed6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

double to_double(const std::string& s, std::size_t line_no) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw Error(ErrorCode::MalformedRecord,
                "line " + std::to_string(line_no) + ": bad number '" + s + "'");
  }
  return v;
}

std::int64_t to_int(const std::string& s, std::size_t line_no) {
  std::int64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw Error(ErrorCode::MalformedRecord,
                "line " + std::to_string(line_no) + ": bad integer '" + s + "'");
  }
  return v;
}

template <class Row>
std::vector<Row> read_rows(std::istream& in, Role role) {
  auto table = csv::read_table(in);
  if (table.header != feature_columns(role)) {
    throw Error(ErrorCode::MalformedRecord, "feature CSV header does not match the " +
                                                std::string(to_string(role)) + " schema");
  }
  std::vector<Row> rows;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& cells = table.rows[r];
    const std::size_t line = r + 2;
    if (cells.size() != table.header.size()) {
      throw Error(ErrorCode::MalformedRecord, "line " + std::to_string(line) + ": wrong column count");
    }
    Row f;
    f.wallet = cells[0];
    if constexpr (std::is_same_v<Row, LpFeatures>) {
      f.total_deposit_usd = to_double(cells[1], line);
      f.total_withdraw_usd = to_double(cells[2], line);
      f.deposit_count = to_int(cells[3], line);
      f.withdraw_count = to_int(cells[4], line);
      f.deposit_freq_per_month = to_double(cells[5], line);
      f.avg_holding_days = to_double(cells[6], line);
      f.liquidity_retention = to_double(cells[7], line);
      f.wallet_age_days = to_double(cells[8], line);
      f.deposit_cv = to_double(cells[9], line);
      f.pool_ctx_weight = to_double(cells[10], line);
    } else {
      f.total_volume_usd = to_double(cells[1], line);
      f.swap_count = to_int(cells[2], line);
      f.unique_tokens = to_int(cells[3], line);
      f.avg_inter_swap_days = to_double(cells[4], line);
      f.volatility_exposure = to_double(cells[5], line);
      f.avg_route_hops = to_double(cells[6], line);
      f.micro_swap_ratio = to_double(cells[7], line);
      f.wash_ratio = to_double(cells[8], line);
      f.pool_ctx_weight = to_double(cells[9], line);
    }
    rows.push_back(std::move(f));
  }
  return rows;
}

}  // namespace

std::string_view to_string(Role role) noexcept { return role == Role::Lp ? "lp" : "swap"; }

std::optional<Role> parse_role(std::string_view text) noexcept {
  if (text == "lp" || text == "LP") return Role::Lp;
  if (text == "swap" || text == "Swap") return Role::Swap;
  return std::nullopt;
}

LpFeatureMap extract_lp_features(const EventLog& log, std::int64_t observation_end,
                                 const BlueprintConfig& cfg) {
  check_window(log, observation_end);
  LpFeatureMap out;
  for (const auto& [wallet, events] : group_by_wallet(log, false)) {
    out.emplace(wallet, lp_features_for(wallet, events, observation_end, cfg));
  }
  return out;
}

SwapFeatureMap extract_swap_features(const EventLog& log, std::int64_t observation_end,
                                     const BlueprintConfig& cfg) {
  check_window(log, observation_end);
  SwapFeatureMap out;
  for (const auto& [wallet, swaps] : group_by_wallet(log, true)) {
    out.emplace(wallet, swap_features_for(wallet, swaps, observation_end, cfg));
  }
  return out;
}

bool is_dusk(const LpFeatures& f) noexcept {
  return f.deposit_count + f.withdraw_count == 1 && f.total_deposit_usd < kDuskLpThresholdUsd;
}

bool is_dusk(const SwapFeatures& f) noexcept {
  return f.swap_count == 1 && f.total_volume_usd < kDuskSwapThresholdUsd;
}

namespace {
template <class Features>
DuskFiltered<Features> filter_impl(const std::map<std::string, Features>& features) {
  DuskFiltered<Features> out;
  for (const auto& [wallet, f] : features) {
    if (is_dusk(f)) {
      out.dropped.push_back(wallet);
    } else {
      out.kept.emplace(wallet, f);
    }
  }
  return out;
}
}  // namespace

DuskFiltered<LpFeatures> filter_dusk(const LpFeatureMap& features) { return filter_impl(features); }
DuskFiltered<SwapFeatures> filter_dusk(const SwapFeatureMap& features) { return filter_impl(features); }

const std::vector<std::string>& feature_columns(Role role) {
  static const std::vector<std::string> lp = {
      "wallet",           "total_deposit_usd",   "total_withdraw_usd", "deposit_count",
      "withdraw_count",   "deposit_freq_per_month", "avg_holding_days", "liquidity_retention",
      "wallet_age_days",  "deposit_cv",          "pool_ctx_weight"};
  static const std::vector<std::string> swap = {
      "wallet",          "total_volume_usd",    "swap_count",       "unique_tokens",
      "avg_inter_swap_days", "volatility_exposure", "avg_route_hops", "micro_swap_ratio",
      "wash_ratio",      "pool_ctx_weight"};
  return role == Role::Lp ? lp : swap;
}

void write_features_csv(const LpFeatureMap& features, std::ostream& out) {
  csv::write_row(out, feature_columns(Role::Lp));
  for (const auto& [wallet, f] : features) {
    csv::write_row(out, {f.wallet, fixed6(f.total_deposit_usd), fixed6(f.total_withdraw_usd),
                         std::to_string(f.deposit_count), std::to_string(f.withdraw_count),
                         fixed6(f.deposit_freq_per_month), fixed6(f.avg_holding_days),
                         fixed6(f.liquidity_retention), fixed6(f.wallet_age_days),
                         fixed6(f.deposit_cv), fixed6(f.pool_ctx_weight)});
  }
}

void write_features_csv(const SwapFeatureMap& features, std::ostream& out) {
  csv::write_row(out, feature_columns(Role::Swap));
  for (const auto& [wallet, f] : features) {
    csv::write_row(out, {f.wallet, fixed6(f.total_volume_usd), std::to_string(f.swap_count),
                         std::to_string(f.unique_tokens), fixed6(f.avg_inter_swap_days),
                         fixed6(f.volatility_exposure), fixed6(f.avg_route_hops),
                         fixed6(f.micro_swap_ratio), fixed6(f.wash_ratio),
                         fixed6(f.pool_ctx_weight)});
  }
}

LpFeatureMap read_lp_features_csv(std::istream& in) {
  LpFeatureMap out;
  for (auto& f : read_rows<LpFeatures>(in, Role::Lp)) out.emplace(f.wallet, std::move(f));
  return out;
}

SwapFeatureMap read_swap_features_csv(std::istream& in) {
  SwapFeatureMap out;
  for (auto& f : read_rows<SwapFeatures>(in, Role::Swap)) out.emplace(f.wallet, std::move(f));
  return out;
}

const std::vector<std::string>& model_input_names(Role role) {
  static const std::vector<std::string> lp = {
      "log1p_total_deposit_usd", "log1p_total_withdraw_usd", "log1p_deposit_count",
      "log1p_withdraw_count",    "log1p_deposit_freq_per_month", "log1p_avg_holding_days",
      "liquidity_retention",     "log1p_wallet_age_days",   "deposit_cv",
      "pool_ctx_weight"};
  static const std::vector<std::string> swap = {
      "log1p_total_volume_usd", "log1p_swap_count",   "unique_tokens",
      "log1p_avg_inter_swap_days", "volatility_exposure", "avg_route_hops",
      "micro_swap_ratio",       "wash_ratio",         "pool_ctx_weight"};
  return role == Role::Lp ? lp : swap;
}

std::vector<double> model_inputs(const LpFeatures& f) {
  return {std::log1p(f.total_deposit_usd),
          std::log1p(f.total_withdraw_usd),
          std::log1p(static_cast<double>(f.deposit_count)),
          std::log1p(static_cast<double>(f.withdraw_count)),
          std::log1p(f.deposit_freq_per_month),
          std::log1p(f.avg_holding_days),
          f.liquidity_retention,
          std::log1p(f.wallet_age_days),
          f.deposit_cv,
          f.pool_ctx_weight};
}

std::vector<double> model_inputs(const SwapFeatures& f) {
  return {std::log1p(f.total_volume_usd),
          std::log1p(static_cast<double>(f.swap_count)),
          static_cast<double>(f.unique_tokens),
          std::log1p(f.avg_inter_swap_days),
          f.volatility_exposure,
          f.avg_route_hops,
          f.micro_swap_ratio,
          f.wash_ratio,
          f.pool_ctx_weight};
}

}  // namespace zscore
