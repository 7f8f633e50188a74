#pragma once

#include <cstdint>
#include <fstream>
#include <functional>
#include <iosfwd>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include "zscore/blueprint_scorer.hpp"
#include "zscore/checkpoint.hpp"
#include "zscore/evaluation.hpp"
#include "zscore/event_model.hpp"
#include "zscore/feature_engine.hpp"
#include "zscore/label_forge.hpp"
#include "zscore/neural_core.hpp"
#include "zscore/run_config.hpp"

namespace zscore {

// Role-erased per-wallet feature table.
using FeatureSet = std::variant<LpFeatureMap, SwapFeatureMap>;
using PredictionMap = std::map<std::string, double>;

Role role_of(const FeatureSet& features) noexcept;
std::size_t wallet_count(const FeatureSet& features) noexcept;
std::vector<std::string> wallets_of(const FeatureSet& features);

// observation_end == 0 resolves to the latest event timestamp.
FeatureSet extract_features(const EventLog& log, Role role, std::int64_t observation_end,
                            const BlueprintConfig& cfg = {});

struct DuskSplit {
  FeatureSet kept;
  std::vector<std::string> dropped;
};
DuskSplit filter_dusk(const FeatureSet& features);

// Keeps only the named wallets; unknown names are ignored.
FeatureSet select_wallets(const FeatureSet& features, const std::vector<std::string>& wallets);

void write_features_csv(const FeatureSet& features, std::ostream& out);
FeatureSet read_features_csv(std::istream& in, Role role);

ScoreMap score_features(const FeatureSet& features, const BlueprintConfig& cfg = {});

// Noisy labels from the blueprint totals plus the wallet-level split.
// Throws Error(MissingScore) for a wallet without a score.
LabeledDataset build_labeled_dataset(const FeatureSet& features, const ScoreMap& scores, const RunConfig& cfg);

Checkpoint make_checkpoint(const TrainResult& result, const TrainConfig& train_config, Role role);

// Throws Error(ShapeMismatch) when the checkpoint was trained for another role.
PredictionMap predict_features(const Checkpoint& checkpoint, const FeatureSet& features);

// Residuals against the blueprint totals, bins by prediction.
EvalReport evaluate_predictions(const FeatureSet& features, const PredictionMap& predictions,
                                const ScoreMap& targets, double tol = kDefaultTolerance);

void write_predictions_csv(const PredictionMap& predictions, std::ostream& out);
PredictionMap read_predictions_csv(std::istream& in);
void write_history_csv(const TrainingHistory& history, std::ostream& out);
void write_wallet_list(const std::vector<std::string>& wallets, std::ostream& out);

struct PipelineResult {
  std::size_t wallets_kept = 0;
  std::size_t wallets_dropped = 0;
  TrainingHistory history;
  EvalReport report;
};

// ingest -> featurize -> dusk filter -> blueprint -> labels -> split -> train
// -> predict(val) -> evaluate. Every intermediate artifact is written to
// out_dir. Errors are rethrown with the failing stage as a message prefix.
PipelineResult run_pipeline(const EventLog& log, const RunConfig& cfg, const std::string& out_dir,
                            const TrainOptions& options = {});

// Opens a file for writing, creating parent directories. Throws Error(Io).
std::ofstream open_output(const std::string& path);
std::ifstream open_input(const std::string& path);

}  // namespace zscore
