#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>

#include "zscore/event_model.hpp"

namespace testutil {

inline zscore::PoolContext pool(const std::string& id = "0xpool", int tier = 500, double tvl = 1e8,
                                bool stable = false) {
  return zscore::PoolContext{id, tier, tvl, stable};
}

inline zscore::Event deposit(const std::string& wallet, std::int64_t ts, double usd,
                             const zscore::PoolContext& p = pool(), const std::string& tx = "") {
  zscore::Event e;
  e.kind = zscore::EventKind::Deposit;
  e.wallet = wallet;
  e.tx_hash = tx.empty() ? "0xd" + wallet + std::to_string(ts) : tx;
  e.ts = ts;
  e.pool = p;
  e.amount_usd = usd;
  e.tokens = std::array<std::string, 2>{"WETH", "USDC"};
  return e;
}

inline zscore::Event withdraw(const std::string& wallet, std::int64_t ts, double usd,
                              const zscore::PoolContext& p = pool(), const std::string& tx = "") {
  zscore::Event e = deposit(wallet, ts, usd, p, tx.empty() ? "0xw" + wallet + std::to_string(ts) : tx);
  e.kind = zscore::EventKind::Withdraw;
  return e;
}

inline zscore::Event swap(const std::string& wallet, std::int64_t ts, double usd, const std::string& in = "WETH",
                          const std::string& out = "USDC", int hops = 1, const zscore::PoolContext& p = pool(),
                          const std::string& tx = "") {
  zscore::Event e;
  e.kind = zscore::EventKind::Swap;
  e.wallet = wallet;
  e.tx_hash = tx.empty() ? "0xs" + wallet + std::to_string(ts) + in : tx;
  e.ts = ts;
  e.pool = p;
  e.amount_usd = usd;
  e.token_in = in;
  e.token_out = out;
  e.route_hops = hops;
  return e;
}

inline constexpr std::int64_t kT0 = 1'700'000'000;
inline constexpr std::int64_t kDay = 86'400;

// Fresh, empty scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("zscore_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace testutil
