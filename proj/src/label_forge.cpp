#include "zscore/label_forge.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <random>

#include "csv.hpp"
#include "zscore/error.hpp"
#include "zscore/hashing.hpp"

namespace zscore {

namespace {

constexpr std::uint64_t kLabelStream = 0x6c6162656c730001ULL;
constexpr std::uint64_t kSplitStream = 0x73706c6974730002ULL;

template <class Map>
LabeledDataset build_impl(Role role, const Map& features, const LabelMap& labels,
                          const SplitMap& split, std::uint64_t seed) {
  LabeledDataset ds;
  ds.role = role;
  ds.feature_names = model_input_names(role);
  ds.seed = seed;
  for (const auto& [wallet, f] : features) {
    auto label = labels.find(wallet);
    auto part = split.find(wallet);
    if (label == labels.end()) {
      throw Error(ErrorCode::MissingScore, "no label for wallet " + wallet);
    }
    if (part == split.end()) {
      throw Error(ErrorCode::InvalidArgument, "wallet " + wallet + " has no split assignment");
    }
    ds.rows.push_back(LabeledRow{wallet, model_inputs(f), label->second});
    ds.split.emplace(wallet, part->second);
  }
  return ds;
}

}  // namespace

const char* to_string(Split split) noexcept { return split == Split::Train ? "train" : "val"; }

double noisy_label(double blueprint_total, double sigma, std::uint64_t seed, const std::string& wallet) {
  if (!(sigma >= 0.0)) throw Error(ErrorCode::InvalidArgument, "sigma must be >= 0");
  double value = blueprint_total;
  if (sigma > 0.0) {
    std::mt19937_64 rng(keyed_seed(mix_keys(seed, kLabelStream), wallet));
    std::normal_distribution<double> noise(0.0, sigma);
    value += noise(rng);
  }
  return std::clamp(value, 0.0, 1000.0);
}

LabelMap make_labels(const ScoreMap& scores, double sigma, std::uint64_t seed) {
  if (!(sigma >= 0.0)) throw Error(ErrorCode::InvalidArgument, "sigma must be >= 0");
  LabelMap out;
  for (const auto& [wallet, s] : scores) out.emplace(wallet, noisy_label(s.total, sigma, seed, wallet));
  return out;
}

SplitMap split_wallets(const std::vector<std::string>& wallets, double val_fraction, std::uint64_t seed) {
  if (wallets.empty()) throw Error(ErrorCode::EmptyInput, "cannot split an empty wallet list");
  if (!(val_fraction > 0.0 && val_fraction < 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "val_fraction must lie strictly between 0 and 1");
  }
  std::vector<std::pair<std::uint64_t, std::string>> keyed;
  keyed.reserve(wallets.size());
  const std::uint64_t stream = mix_keys(seed, kSplitStream);
  for (const auto& w : wallets) keyed.emplace_back(keyed_seed(stream, w), w);
  std::sort(keyed.begin(), keyed.end());
  keyed.erase(std::unique(keyed.begin(), keyed.end()), keyed.end());

  const auto n = static_cast<long long>(keyed.size());
  long long n_val = std::llround(val_fraction * static_cast<double>(n));
  if (n >= 2) n_val = std::clamp(n_val, 1LL, n - 1);

  SplitMap out;
  for (long long i = 0; i < n; ++i) {
    out.emplace(keyed[static_cast<std::size_t>(i)].second, i < n_val ? Split::Val : Split::Train);
  }
  return out;
}

std::vector<const LabeledRow*> LabeledDataset::rows_in(Split which) const {
  std::vector<const LabeledRow*> out;
  for (const auto& row : rows) {
    if (split.at(row.wallet) == which) out.push_back(&row);
  }
  return out;
}

LabeledDataset build_dataset(const LpFeatureMap& features, const LabelMap& labels,
                             const SplitMap& split, std::uint64_t seed) {
  return build_impl(Role::Lp, features, labels, split, seed);
}

LabeledDataset build_dataset(const SwapFeatureMap& features, const LabelMap& labels,
                             const SplitMap& split, std::uint64_t seed) {
  return build_impl(Role::Swap, features, labels, split, seed);
}

void write_dataset_csv(const LabeledDataset& ds, std::ostream& out) {
  std::vector<std::string> header = {"wallet"};
  header.insert(header.end(), ds.feature_names.begin(), ds.feature_names.end());
  header.emplace_back("target");
  header.emplace_back("split");
  csv::write_row(out, header);
  char buf[64];
  for (const auto& row : ds.rows) {
    std::vector<std::string> cells = {row.wallet};
    for (double v : row.features) {
      std::snprintf(buf, sizeof buf, "%.6f", v);
      cells.emplace_back(buf);
    }
    std::snprintf(buf, sizeof buf, "%.6f", row.target);
    cells.emplace_back(buf);
    cells.emplace_back(to_string(ds.split.at(row.wallet)));
    csv::write_row(out, cells);
  }
}

}  // namespace zscore
