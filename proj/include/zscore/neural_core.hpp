#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "zscore/label_forge.hpp"

namespace zscore {

// Activations are laid out feature-major: one column per sample.
using Matrix = Eigen::MatrixXd;
using RowVector = Eigen::RowVectorXd;
using ColVector = Eigen::VectorXd;

struct ModelConfig {
  std::size_t input_dim = 0;
  std::vector<std::pair<std::size_t, std::size_t>> block_dims = {
      {1024, 1024}, {1024, 512}, {512, 512}, {512, 256}};
  std::array<std::size_t, 3> head_dims = {256, 64, 1};
  double dropout_p = 0.1;
  double ln_epsilon = 1e-5;
  std::uint64_t seed = 42;

  std::size_t projection_dim() const { return block_dims.front().first; }

  // Throws Error(Config) unless widths chain from the projection through
  // every block into the head and the head ends in a scalar.
  void validate() const;

  bool operator==(const ModelConfig&) const = default;
};

struct TrainConfig {
  double lr = 5e-4;
  double weight_decay = 1e-4;
  int max_epochs = 500;
  int batch_size = 256;
  double plateau_factor = 0.5;
  int plateau_patience = 10;
  double min_lr = 1e-6;
  int early_stop_patience = 30;
  double min_improvement = 1e-6;
  double target_scale = 1000.0;
  std::string loss = "mse";
  std::uint64_t seed = 42;

  void validate() const;

  bool operator==(const TrainConfig&) const = default;
};

// Per-feature z-score statistics, fit on training rows only.
struct Normalizer {
  ColVector mean;
  ColVector std;

  // raw: samples x features. Returns features x samples, ready for forward().
  Matrix transform(const Matrix& raw) const;

  bool operator==(const Normalizer& o) const { return mean == o.mean && std == o.std; }
};

inline constexpr double kStdFloor = 1e-8;

// raw: samples x features. Population std, floored at kStdFloor.
// Throws Error(InsufficientData) for fewer than two rows.
Normalizer fit_normalizer(const Matrix& train_rows);

struct Tensor {
  std::string name;
  Matrix value;
  bool decayed = true;  // false for layer-norm gain/shift
};

struct LinearSlot {
  std::size_t weight = 0;
  std::size_t bias = 0;
};

struct BlockSlot {
  LinearSlot fc1;
  LinearSlot fc2;
  std::size_t norm_gain = 0;
  std::size_t norm_shift = 0;
  std::optional<std::size_t> shortcut;
};

struct ParamLayout {
  LinearSlot input;
  std::vector<BlockSlot> blocks;
  LinearSlot head_fc1;
  std::size_t head_norm_gain = 0;
  std::size_t head_norm_shift = 0;
  LinearSlot head_fc2;
};

class ModelParams {
 public:
  ModelParams() = default;

  // Fan-in scaled uniform init U(-1/sqrt(fan_in), 1/sqrt(fan_in)) for linear
  // weights and biases; layer-norm gain 1, shift 0. Deterministic in cfg.seed.
  static ModelParams initialize(const ModelConfig& cfg);

  const ModelConfig& config() const noexcept { return config_; }
  const ParamLayout& layout() const noexcept { return layout_; }
  const std::vector<Tensor>& tensors() const noexcept { return tensors_; }
  std::vector<Tensor>& mutable_tensors() noexcept {
    ++version_;
    return tensors_;
  }
  const Matrix& tensor(std::size_t slot) const { return tensors_[slot].value; }
  std::size_t parameter_count() const noexcept;

  // Bumped on every mutable access; caches from older versions are stale.
  std::uint64_t version() const noexcept { return version_; }

  Normalizer normalizer;
  double target_scale = 1000.0;

 private:
  friend ModelParams assemble_params(const ModelConfig&, std::vector<Tensor>);
  ModelConfig config_;
  ParamLayout layout_;
  std::vector<Tensor> tensors_;
  std::uint64_t version_ = 0;
};

// Builds params with the canonical layout from named tensors (used by the
// checkpoint loader). Throws Error(ShapeMismatch) on any shape disagreement.
ModelParams assemble_params(const ModelConfig& cfg, std::vector<Tensor> tensors);

// Gradient per tensor, in the same order and shapes as ModelParams::tensors().
using ParamGrads = std::vector<Matrix>;

ParamGrads zero_grads(const ModelParams& params);

struct RunMode {
  bool training = false;
  std::uint64_t seed = 0;
  std::uint64_t step = 0;
  // Position of column 0 within the full batch; keeps dropout masks
  // independent of how a batch is sharded.
  std::size_t sample_offset = 0;

  static RunMode eval() { return {}; }
  static RunMode train(std::uint64_t seed, std::uint64_t step, std::size_t sample_offset = 0) {
    return RunMode{true, seed, step, sample_offset};
  }
};

// Elementary layers, exposed for isolated testing.
namespace layers {

Matrix linear(const Matrix& weight, const Matrix& bias, const Matrix& x);

struct LinearGrads {
  Matrix d_weight;
  Matrix d_bias;
  Matrix d_x;
};
LinearGrads linear_backward(const Matrix& weight, const Matrix& x, const Matrix& d_y);

Matrix silu(const Matrix& z);
Matrix silu_backward(const Matrix& z, const Matrix& d_y);

struct LayerNormCache {
  Matrix x_hat;
  RowVector inv_std;
};
Matrix layer_norm(const Matrix& x, const Matrix& gain, const Matrix& shift, double eps,
                  LayerNormCache& cache);

struct LayerNormGrads {
  Matrix d_x;
  Matrix d_gain;
  Matrix d_shift;
};
LayerNormGrads layer_norm_backward(const LayerNormCache& cache, const Matrix& gain, const Matrix& d_y);

// Inverted-dropout mask: entries are 0 or 1/(1-p), keyed by
// (seed, step, layer, sample position, unit).
Matrix dropout_mask(Eigen::Index rows, Eigen::Index cols, double p, std::uint64_t seed,
                    std::uint64_t step, std::uint64_t layer, std::size_t sample_offset);

}  // namespace layers

class ForwardCache {
 public:
  ForwardCache() = default;
  ForwardCache(ForwardCache&&) noexcept = default;
  ForwardCache& operator=(ForwardCache&&) noexcept = default;
  ForwardCache(const ForwardCache&) = delete;
  ForwardCache& operator=(const ForwardCache&) = delete;

 private:
  friend struct ForwardResult forward(const ModelParams&, const Matrix&, const RunMode&);
  friend void backward_into(const ModelParams&, ForwardCache&, const RowVector&, ParamGrads&);

  struct Block {
    Matrix input;
    Matrix fc1_pre;
    Matrix fc1_act;
    layers::LayerNormCache norm;
    Matrix mask;  // empty when dropout is inactive
  };

  const ModelParams* owner_ = nullptr;
  std::uint64_t version_ = 0;
  bool consumed_ = true;
  Matrix x_;
  Matrix proj_pre_;
  std::vector<Block> blocks_;
  Matrix head_input_;
  layers::LayerNormCache head_norm_;
  Matrix head_norm_out_;
  Matrix head_act_;
};

struct ForwardResult {
  RowVector prediction;  // one entry per column of x, in target_scale units
  ForwardCache cache;
};

// x: input_dim x batch, already normalized. Throws Error(ShapeMismatch).
ForwardResult forward(const ModelParams& params, const Matrix& x, const RunMode& mode);

// Reverse-mode gradients of sum_j d_pred[j] * prediction[j]. Pass
// d_pred = dLoss/dPrediction (already divided by the batch size for a mean
// loss). Throws Error(StaleCache) when the cache was already consumed or the
// parameters changed since the forward pass.
ParamGrads backward(const ModelParams& params, ForwardCache& cache, const RowVector& d_pred);

// Same as backward(), writing into `grads` and reusing its storage when the
// shapes already match.
void backward_into(const ModelParams& params, ForwardCache& cache, const RowVector& d_pred, ParamGrads& grads);

struct AdamWState {
  std::vector<Matrix> m;
  std::vector<Matrix> v;
  std::uint64_t step = 0;
};

inline constexpr double kAdamBeta1 = 0.9;
inline constexpr double kAdamBeta2 = 0.999;
inline constexpr double kAdamEpsilon = 1e-8;

AdamWState make_adamw_state(const ModelParams& params);

// theta <- theta * (1 - lr*wd) - lr * m_hat / (sqrt(v_hat) + eps); the decay
// term applies only to tensors flagged `decayed` (linear weights and biases).
void adamw_step(ModelParams& params, const ParamGrads& grads, AdamWState& state, double lr,
                double weight_decay);

struct EpochRecord {
  int epoch = 0;
  double train_mse = 0.0;
  double val_mse = 0.0;
  double lr = 0.0;
};

struct TrainingHistory {
  std::vector<EpochRecord> epochs;
  int best_epoch = 0;
  double best_val_mse = 0.0;
  bool early_stopped = false;
};

struct TrainOptions {
  // Worker threads for batch shards; 0 picks hardware concurrency. Results do
  // not depend on this value.
  unsigned threads = 0;
  std::function<void(const EpochRecord&)> on_epoch;
};

struct TrainResult {
  ModelParams params;  // parameters of the best-validation epoch
  TrainingHistory history;
};

// Gradient shards per minibatch. Fixed so the reduction order never depends
// on the thread count.
inline constexpr std::size_t kBatchShards = 4;

// Throws Error(EmptySplit) when either split has no rows.
TrainResult train(const LabeledDataset& dataset, ModelConfig model_config, const TrainConfig& train_config,
                  const TrainOptions& options = {});

// Mean squared error of target/target_scale over rows (samples x features, raw).
double evaluate_mse(const ModelParams& params, const Matrix& raw_rows, const ColVector& targets);

// raw: samples x features. Unclamped predictions in score units.
ColVector predict_raw(const ModelParams& params, const Matrix& raw_rows);

// Same as predict_raw, clamped to [0,1000].
ColVector predict(const ModelParams& params, const Matrix& raw_rows);

// Stacks dataset rows of the given split into (samples x features, targets).
std::pair<Matrix, ColVector> stack_rows(const std::vector<const LabeledRow*>& rows);

}  // namespace zscore
