#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "zscore/blueprint_scorer.hpp"
#include "zscore/feature_engine.hpp"

namespace zscore {

enum class Split { Train, Val };

const char* to_string(Split split) noexcept;

using LabelMap = std::map<std::string, double>;
using SplitMap = std::map<std::string, Split>;

// Blueprint total plus Gaussian noise, clamped to [0,1000]. The noise for a
// wallet depends only on (seed, wallet id), never on iteration order.
double noisy_label(double blueprint_total, double sigma, std::uint64_t seed, const std::string& wallet);
LabelMap make_labels(const ScoreMap& scores, double sigma, std::uint64_t seed);

// Seed-keyed wallet partition with round(val_fraction * n) validation wallets
// (at least one of each split when n >= 2). Throws Error(EmptyInput) for an
// empty list and Error(InvalidArgument) unless 0 < val_fraction < 1.
SplitMap split_wallets(const std::vector<std::string>& wallets, double val_fraction, std::uint64_t seed);

struct LabeledRow {
  std::string wallet;
  std::vector<double> features;
  double target = 0.0;
};

struct LabeledDataset {
  Role role = Role::Lp;
  std::vector<std::string> feature_names;
  std::vector<LabeledRow> rows;  // sorted by wallet
  SplitMap split;
  std::uint64_t seed = 0;

  std::vector<const LabeledRow*> rows_in(Split which) const;
};

LabeledDataset build_dataset(const LpFeatureMap& features, const LabelMap& labels,
                             const SplitMap& split, std::uint64_t seed);
LabeledDataset build_dataset(const SwapFeatureMap& features, const LabelMap& labels,
                             const SplitMap& split, std::uint64_t seed);

// wallet, feature columns..., target, split
void write_dataset_csv(const LabeledDataset& dataset, std::ostream& out);

}  // namespace zscore
