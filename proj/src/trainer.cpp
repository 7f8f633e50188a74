#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <thread>

#include "zscore/error.hpp"
#include "zscore/hashing.hpp"
#include "zscore/neural_core.hpp"

namespace zscore {

namespace {

constexpr Eigen::Index kEvalChunk = 512;

struct ShardOutput {
  ParamGrads grads;
  double squared_error = 0.0;
};

// Fixed-shape pairwise reduction over the first `width` shards, in place:
// ((g0 + g1) + (g2 + g3)). The sum lands in shards[0].
const ParamGrads& tree_sum(std::vector<ShardOutput>& shards, std::size_t width) {
  while (width > 1) {
    const std::size_t half = (width + 1) / 2;
    for (std::size_t i = 0; i + half < width; ++i) {
      auto& dst = shards[i].grads;
      const auto& src = shards[i + half].grads;
      for (std::size_t t = 0; t < dst.size(); ++t) dst[t] += src[t];
    }
    width = half;
  }
  return shards.front().grads;
}

template <class Fn>
void run_shards(std::size_t count, unsigned threads, Fn&& fn) {
  if (threads <= 1 || count <= 1) {
    for (std::size_t s = 0; s < count; ++s) fn(s);
    return;
  }
  const std::size_t workers = std::min<std::size_t>(threads, count);
  std::vector<std::thread> pool;
  pool.reserve(workers - 1);
  for (std::size_t w = 1; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t s = w; s < count; s += workers) fn(s);
    });
  }
  for (std::size_t s = 0; s < count; s += workers) fn(s);
  for (auto& t : pool) t.join();
}

double mse_normalized(const ModelParams& params, const Matrix& x, const RowVector& targets) {
  double sum = 0.0;
  for (Eigen::Index start = 0; start < x.cols(); start += kEvalChunk) {
    const Eigen::Index n = std::min(kEvalChunk, x.cols() - start);
    const auto out = forward(params, x.middleCols(start, n), RunMode::eval());
    sum += (out.prediction - targets.segment(start, n)).squaredNorm();
  }
  return sum / static_cast<double>(x.cols());
}

}  // namespace

std::pair<Matrix, ColVector> stack_rows(const std::vector<const LabeledRow*>& rows) {
  if (rows.empty()) return {Matrix(0, 0), ColVector(0)};
  const auto dim = static_cast<Eigen::Index>(rows.front()->features.size());
  Matrix x(static_cast<Eigen::Index>(rows.size()), dim);
  ColVector y(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (static_cast<Eigen::Index>(rows[i]->features.size()) != dim) {
      throw Error(ErrorCode::ShapeMismatch, "ragged feature rows");
    }
    for (Eigen::Index c = 0; c < dim; ++c) x(static_cast<Eigen::Index>(i), c) = rows[i]->features[c];
    y(static_cast<Eigen::Index>(i)) = rows[i]->target;
  }
  return {std::move(x), std::move(y)};
}

ColVector predict_raw(const ModelParams& params, const Matrix& raw_rows) {
  if (params.normalizer.mean.size() == 0) {
    throw Error(ErrorCode::InvalidArgument, "model has no normalizer statistics");
  }
  const Matrix x = params.normalizer.transform(raw_rows);
  ColVector out(x.cols());
  for (Eigen::Index start = 0; start < x.cols(); start += kEvalChunk) {
    const Eigen::Index n = std::min(kEvalChunk, x.cols() - start);
    const auto res = forward(params, x.middleCols(start, n), RunMode::eval());
    out.segment(start, n) = res.prediction.transpose() * params.target_scale;
  }
  return out;
}

ColVector predict(const ModelParams& params, const Matrix& raw_rows) {
  return predict_raw(params, raw_rows).cwiseMax(0.0).cwiseMin(1000.0);
}

double evaluate_mse(const ModelParams& params, const Matrix& raw_rows, const ColVector& targets) {
  if (raw_rows.rows() != targets.size()) {
    throw Error(ErrorCode::LengthMismatch, "rows and targets differ in length");
  }
  const Matrix x = params.normalizer.transform(raw_rows);
  return mse_normalized(params, x, targets.transpose() / params.target_scale);
}

TrainResult train(const LabeledDataset& dataset, ModelConfig model_config, const TrainConfig& tc,
                  const TrainOptions& options) {
  tc.validate();
  const auto train_rows = dataset.rows_in(Split::Train);
  const auto val_rows = dataset.rows_in(Split::Val);
  if (train_rows.empty() || val_rows.empty()) {
    throw Error(ErrorCode::EmptySplit, "training needs non-empty train and validation splits");
  }
  auto [train_raw, train_targets] = stack_rows(train_rows);
  auto [val_raw, val_targets] = stack_rows(val_rows);
  const auto feature_dim = static_cast<std::size_t>(train_raw.cols());
  if (model_config.input_dim == 0) model_config.input_dim = feature_dim;
  if (model_config.input_dim != feature_dim) {
    throw Error(ErrorCode::ShapeMismatch, "model input_dim " + std::to_string(model_config.input_dim) +
                                              " does not match " + std::to_string(feature_dim) + " features");
  }

  ModelParams params = ModelParams::initialize(model_config);
  params.normalizer = fit_normalizer(train_raw);
  params.target_scale = tc.target_scale;

  const Matrix x_train = params.normalizer.transform(train_raw);
  const RowVector t_train = train_targets.transpose() / tc.target_scale;
  const Matrix x_val = params.normalizer.transform(val_raw);
  const RowVector t_val = val_targets.transpose() / tc.target_scale;
  const auto n_train = static_cast<std::size_t>(x_train.cols());
  const auto in_dim = x_train.rows();

  const unsigned threads =
      options.threads ? options.threads : std::max(1u, std::thread::hardware_concurrency());

  AdamWState state = make_adamw_state(params);
  TrainResult result;
  result.params = params;
  auto& history = result.history;

  double lr = tc.lr;
  double best_train = std::numeric_limits<double>::infinity();
  double best_val = std::numeric_limits<double>::infinity();
  int plateau_bad = 0;
  int stop_bad = 0;
  std::uint64_t step = 0;
  std::vector<std::size_t> order(n_train);
  std::vector<ShardOutput> outputs(kBatchShards);  // gradient buffers reused across steps

  for (int epoch = 1; epoch <= tc.max_epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::mt19937_64 shuffle_rng(mix_keys(mix_keys(tc.seed, 0x73687566ULL), static_cast<std::uint64_t>(epoch)));
    std::shuffle(order.begin(), order.end(), shuffle_rng);

    double squared_error = 0.0;
    const auto batch = static_cast<std::size_t>(tc.batch_size);
    for (std::size_t start = 0; start < n_train; start += batch) {
      const std::size_t bs = std::min(batch, n_train - start);
      ++step;
      const std::size_t shards = std::min(kBatchShards, bs);
      run_shards(shards, threads, [&](std::size_t s) {
        const std::size_t lo = s * bs / shards;
        const std::size_t hi = (s + 1) * bs / shards;
        const auto cols = static_cast<Eigen::Index>(hi - lo);
        Matrix xb(in_dim, cols);
        RowVector tb(cols);
        for (Eigen::Index j = 0; j < cols; ++j) {
          const auto idx = static_cast<Eigen::Index>(order[start + lo + static_cast<std::size_t>(j)]);
          xb.col(j) = x_train.col(idx);
          tb(j) = t_train(idx);
        }
        auto fwd = forward(params, xb, RunMode::train(tc.seed, step, lo));
        const RowVector diff = fwd.prediction - tb;
        outputs[s].squared_error = diff.squaredNorm();
        backward_into(params, fwd.cache, diff * (2.0 / static_cast<double>(bs)), outputs[s].grads);
      });
      for (std::size_t s = 0; s < shards; ++s) squared_error += outputs[s].squared_error;
      const ParamGrads& grads = tree_sum(outputs, shards);
      adamw_step(params, grads, state, lr, tc.weight_decay);
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_mse = squared_error / static_cast<double>(n_train);
    rec.val_mse = mse_normalized(params, x_val, t_val);
    rec.lr = lr;
    history.epochs.push_back(rec);
    if (options.on_epoch) options.on_epoch(rec);

    if (rec.train_mse < best_train - tc.min_improvement) {
      best_train = rec.train_mse;
      plateau_bad = 0;
    } else if (++plateau_bad >= tc.plateau_patience) {
      lr = std::max(lr * tc.plateau_factor, tc.min_lr);
      plateau_bad = 0;
    }

    if (rec.val_mse < best_val - tc.min_improvement) {
      best_val = rec.val_mse;
      history.best_epoch = epoch;
      history.best_val_mse = rec.val_mse;
      result.params = params;
      stop_bad = 0;
    } else if (++stop_bad >= tc.early_stop_patience) {
      history.early_stopped = true;
      break;
    }
  }
  return result;
}

}  // namespace zscore
