#include <cmath>
#include <random>

#include "zscore/error.hpp"
#include "zscore/hashing.hpp"
#include "zscore/neural_core.hpp"

namespace zscore {

void ModelConfig::validate() const {
  auto fail = [](const std::string& msg) { throw Error(ErrorCode::Config, "model config: " + msg); };
  if (input_dim == 0) fail("input_dim must be positive");
  if (block_dims.empty()) fail("at least one residual block is required");
  for (std::size_t i = 0; i < block_dims.size(); ++i) {
    if (block_dims[i].first == 0 || block_dims[i].second == 0) fail("block widths must be positive");
    if (i + 1 < block_dims.size() && block_dims[i].second != block_dims[i + 1].first) {
      fail("block " + std::to_string(i) + " output does not feed block " + std::to_string(i + 1));
    }
  }
  if (block_dims.back().second != head_dims[0]) fail("last block output must equal head input");
  if (head_dims[1] == 0) fail("head hidden width must be positive");
  if (head_dims[2] != 1) fail("head must end in a single output");
  if (!(dropout_p >= 0.0 && dropout_p < 1.0)) fail("dropout_p must lie in [0,1)");
  if (!(ln_epsilon > 0.0)) fail("ln_epsilon must be positive");
}

void TrainConfig::validate() const {
  auto fail = [](const std::string& msg) { throw Error(ErrorCode::Config, "train config: " + msg); };
  if (!(lr > 0.0)) fail("lr must be > 0");
  if (!(weight_decay >= 0.0)) fail("weight_decay must be >= 0");
  if (max_epochs < 1) fail("max_epochs must be >= 1");
  if (batch_size < 1) fail("batch_size must be >= 1");
  if (!(plateau_factor > 0.0 && plateau_factor < 1.0)) fail("plateau_factor must lie in (0,1)");
  if (plateau_patience < 1) fail("plateau_patience must be >= 1");
  if (!(min_lr >= 0.0)) fail("min_lr must be >= 0");
  if (early_stop_patience < 1) fail("early_stop_patience must be >= 1");
  if (!(min_improvement >= 0.0)) fail("min_improvement must be >= 0");
  if (!(target_scale > 0.0)) fail("target_scale must be > 0");
  if (loss != "mse") fail("only the mse loss is supported");
}

Matrix Normalizer::transform(const Matrix& raw) const {
  if (raw.cols() != mean.size()) {
    throw Error(ErrorCode::ShapeMismatch, "expected " + std::to_string(mean.size()) +
                                              " features, got " + std::to_string(raw.cols()));
  }
  Matrix out = raw.transpose();
  out.colwise() -= mean;
  out.array().colwise() /= std.array();
  return out;
}

Normalizer fit_normalizer(const Matrix& train_rows) {
  if (train_rows.rows() < 2) {
    throw Error(ErrorCode::InsufficientData, "normalizer needs at least two training rows");
  }
  Normalizer n;
  const double count = static_cast<double>(train_rows.rows());
  n.mean = train_rows.colwise().sum().transpose() / count;
  n.std.resize(train_rows.cols());
  for (Eigen::Index c = 0; c < train_rows.cols(); ++c) {
    const double var = (train_rows.col(c).array() - n.mean(c)).square().sum() / count;
    n.std(c) = std::max(std::sqrt(var), kStdFloor);
  }
  return n;
}

namespace {

struct TensorSpec {
  std::string name;
  Eigen::Index rows;
  Eigen::Index cols;
  enum class Init { Uniform, Ones, Zeros } init;
  Eigen::Index fan_in;
};

// Canonical tensor order. The layout indices below mirror it.
std::vector<TensorSpec> tensor_specs(const ModelConfig& cfg, ParamLayout& layout) {
  std::vector<TensorSpec> specs;
  auto add = [&](std::string name, std::size_t rows, std::size_t cols, TensorSpec::Init init,
                 std::size_t fan_in) {
    specs.push_back({std::move(name), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols),
                     init, static_cast<Eigen::Index>(fan_in)});
    return specs.size() - 1;
  };
  auto add_linear = [&](const std::string& prefix, std::size_t in, std::size_t out) {
    LinearSlot slot;
    slot.weight = add(prefix + ".weight", out, in, TensorSpec::Init::Uniform, in);
    slot.bias = add(prefix + ".bias", out, 1, TensorSpec::Init::Uniform, in);
    return slot;
  };

  layout = ParamLayout{};
  layout.input = add_linear("input", cfg.input_dim, cfg.projection_dim());
  for (std::size_t b = 0; b < cfg.block_dims.size(); ++b) {
    const auto [in, out] = cfg.block_dims[b];
    const std::string prefix = "blocks." + std::to_string(b);
    BlockSlot slot;
    slot.fc1 = add_linear(prefix + ".fc1", in, out);
    slot.fc2 = add_linear(prefix + ".fc2", out, out);
    slot.norm_gain = add(prefix + ".norm.gain", out, 1, TensorSpec::Init::Ones, 0);
    slot.norm_shift = add(prefix + ".norm.shift", out, 1, TensorSpec::Init::Zeros, 0);
    if (in != out) slot.shortcut = add(prefix + ".shortcut.weight", out, in, TensorSpec::Init::Uniform, in);
    layout.blocks.push_back(slot);
  }
  layout.head_fc1 = add_linear("head.fc1", cfg.head_dims[0], cfg.head_dims[1]);
  layout.head_norm_gain = add("head.norm.gain", cfg.head_dims[1], 1, TensorSpec::Init::Ones, 0);
  layout.head_norm_shift = add("head.norm.shift", cfg.head_dims[1], 1, TensorSpec::Init::Zeros, 0);
  layout.head_fc2 = add_linear("head.fc2", cfg.head_dims[1], cfg.head_dims[2]);
  return specs;
}

bool is_norm_param(const std::string& name) { return name.find(".norm.") != std::string::npos; }

}  // namespace

ModelParams ModelParams::initialize(const ModelConfig& cfg) {
  cfg.validate();
  ParamLayout layout;
  const auto specs = tensor_specs(cfg, layout);
  std::mt19937_64 rng(mix_keys(cfg.seed, 0x696e6974ULL));
  std::vector<Tensor> tensors;
  tensors.reserve(specs.size());
  for (const auto& spec : specs) {
    Tensor t{spec.name, Matrix(spec.rows, spec.cols), !is_norm_param(spec.name)};
    switch (spec.init) {
      case TensorSpec::Init::Ones: t.value.setOnes(); break;
      case TensorSpec::Init::Zeros: t.value.setZero(); break;
      case TensorSpec::Init::Uniform: {
        const double bound = std::sqrt(1.0 / static_cast<double>(spec.fan_in));
        std::uniform_real_distribution<double> dist(-bound, bound);
        // Row-major fill order so the draw sequence matches the checkpoint layout.
        for (Eigen::Index r = 0; r < spec.rows; ++r) {
          for (Eigen::Index c = 0; c < spec.cols; ++c) t.value(r, c) = dist(rng);
        }
        break;
      }
    }
    tensors.push_back(std::move(t));
  }
  return assemble_params(cfg, std::move(tensors));
}

ModelParams assemble_params(const ModelConfig& cfg, std::vector<Tensor> tensors) {
  cfg.validate();
  ModelParams p;
  const auto specs = tensor_specs(cfg, p.layout_);
  if (specs.size() != tensors.size()) {
    throw Error(ErrorCode::ShapeMismatch, "expected " + std::to_string(specs.size()) + " tensors, got " +
                                              std::to_string(tensors.size()));
  }
  for (std::size_t i = 0; i < specs.size(); ++i) {
    if (tensors[i].name != specs[i].name || tensors[i].value.rows() != specs[i].rows ||
        tensors[i].value.cols() != specs[i].cols) {
      throw Error(ErrorCode::ShapeMismatch, "tensor " + std::to_string(i) + " ('" + tensors[i].name +
                                                "') does not match expected '" + specs[i].name + "' " +
                                                std::to_string(specs[i].rows) + "x" +
                                                std::to_string(specs[i].cols));
    }
    tensors[i].decayed = !is_norm_param(specs[i].name);
  }
  p.config_ = cfg;
  p.tensors_ = std::move(tensors);
  return p;
}

std::size_t ModelParams::parameter_count() const noexcept {
  std::size_t n = 0;
  for (const auto& t : tensors_) n += static_cast<std::size_t>(t.value.size());
  return n;
}

ParamGrads zero_grads(const ModelParams& params) {
  ParamGrads g;
  g.reserve(params.tensors().size());
  for (const auto& t : params.tensors()) g.push_back(Matrix::Zero(t.value.rows(), t.value.cols()));
  return g;
}

namespace layers {

Matrix linear(const Matrix& weight, const Matrix& bias, const Matrix& x) {
  Matrix y(weight.rows(), x.cols());
  y.noalias() = weight * x;
  y.colwise() += bias.col(0);
  return y;
}

LinearGrads linear_backward(const Matrix& weight, const Matrix& x, const Matrix& d_y) {
  LinearGrads g;
  g.d_weight.noalias() = d_y * x.transpose();
  g.d_bias = d_y.rowwise().sum();
  g.d_x.noalias() = weight.transpose() * d_y;
  return g;
}

Matrix silu(const Matrix& z) {
  return (z.array() / (1.0 + (-z.array()).exp())).matrix();
}

Matrix silu_backward(const Matrix& z, const Matrix& d_y) {
  const Eigen::ArrayXXd s = 1.0 / (1.0 + (-z.array()).exp());
  return (d_y.array() * s * (1.0 + z.array() * (1.0 - s))).matrix();
}

Matrix layer_norm(const Matrix& x, const Matrix& gain, const Matrix& shift, double eps,
                  LayerNormCache& cache) {
  const double n = static_cast<double>(x.rows());
  const RowVector mean = x.colwise().sum() / n;
  cache.x_hat = x.rowwise() - mean;
  const RowVector var = cache.x_hat.array().square().colwise().sum() / n;
  cache.inv_std = (var.array() + eps).rsqrt();
  cache.x_hat.array().rowwise() *= cache.inv_std.array();
  Matrix y = cache.x_hat;
  y.array().colwise() *= gain.col(0).array();
  y.colwise() += shift.col(0);
  return y;
}

LayerNormGrads layer_norm_backward(const LayerNormCache& cache, const Matrix& gain, const Matrix& d_y) {
  LayerNormGrads g;
  const double n = static_cast<double>(d_y.rows());
  g.d_gain = (d_y.array() * cache.x_hat.array()).rowwise().sum().matrix();
  g.d_shift = d_y.rowwise().sum();
  Eigen::ArrayXXd d_xhat = d_y.array().colwise() * gain.col(0).array();
  const Eigen::ArrayXXd mean_d = d_xhat.colwise().sum() / n;
  const Eigen::ArrayXXd mean_dx = (d_xhat * cache.x_hat.array()).colwise().sum() / n;
  d_xhat.rowwise() -= mean_d.row(0);
  d_xhat -= cache.x_hat.array().rowwise() * mean_dx.row(0);
  d_xhat.rowwise() *= cache.inv_std.array();
  g.d_x = d_xhat.matrix();
  return g;
}

Matrix dropout_mask(Eigen::Index rows, Eigen::Index cols, double p, std::uint64_t seed,
                    std::uint64_t step, std::uint64_t layer, std::size_t sample_offset) {
  Matrix mask(rows, cols);
  const double keep_scale = 1.0 / (1.0 - p);
  const std::uint64_t key = mix_keys(mix_keys(seed, step), layer + 0x64726f70ULL);
  for (Eigen::Index c = 0; c < cols; ++c) {
    const std::uint64_t col_key =
        mix_keys(key, static_cast<std::uint64_t>(sample_offset) + static_cast<std::uint64_t>(c));
    for (Eigen::Index r = 0; r < rows; ++r) {
      const double u = unit_interval(splitmix64(col_key + static_cast<std::uint64_t>(r)));
      mask(r, c) = u < p ? 0.0 : keep_scale;
    }
  }
  return mask;
}

}  // namespace layers

ForwardResult forward(const ModelParams& params, const Matrix& x, const RunMode& mode) {
  const auto& cfg = params.config();
  const auto& layout = params.layout();
  if (static_cast<std::size_t>(x.rows()) != cfg.input_dim) {
    throw Error(ErrorCode::ShapeMismatch, "forward expects " + std::to_string(cfg.input_dim) +
                                              " input rows, got " + std::to_string(x.rows()));
  }
  const bool dropout = mode.training && cfg.dropout_p > 0.0;

  ForwardResult result;
  ForwardCache& c = result.cache;
  c.owner_ = &params;
  c.version_ = params.version();
  c.consumed_ = false;
  c.x_ = x;
  c.proj_pre_ = layers::linear(params.tensor(layout.input.weight), params.tensor(layout.input.bias), x);
  Matrix h = layers::silu(c.proj_pre_);

  c.blocks_.resize(layout.blocks.size());
  for (std::size_t b = 0; b < layout.blocks.size(); ++b) {
    const BlockSlot& slot = layout.blocks[b];
    ForwardCache::Block& bc = c.blocks_[b];
    bc.input = std::move(h);
    bc.fc1_pre = layers::linear(params.tensor(slot.fc1.weight), params.tensor(slot.fc1.bias), bc.input);
    bc.fc1_act = layers::silu(bc.fc1_pre);
    Matrix sum = layers::linear(params.tensor(slot.fc2.weight), params.tensor(slot.fc2.bias), bc.fc1_act);
    if (slot.shortcut) {
      sum.noalias() += params.tensor(*slot.shortcut) * bc.input;
    } else {
      sum += bc.input;
    }
    h = layers::layer_norm(sum, params.tensor(slot.norm_gain), params.tensor(slot.norm_shift),
                           cfg.ln_epsilon, bc.norm);
    if (dropout) {
      bc.mask = layers::dropout_mask(h.rows(), h.cols(), cfg.dropout_p, mode.seed, mode.step, b,
                                     mode.sample_offset);
      h.array() *= bc.mask.array();
    } else {
      bc.mask.resize(0, 0);
    }
  }

  c.head_input_ = std::move(h);
  const Matrix head_pre = layers::linear(params.tensor(layout.head_fc1.weight),
                                         params.tensor(layout.head_fc1.bias), c.head_input_);
  c.head_norm_out_ = layers::layer_norm(head_pre, params.tensor(layout.head_norm_gain),
                                        params.tensor(layout.head_norm_shift), cfg.ln_epsilon,
                                        c.head_norm_);
  c.head_act_ = layers::silu(c.head_norm_out_);
  const Matrix y = layers::linear(params.tensor(layout.head_fc2.weight),
                                  params.tensor(layout.head_fc2.bias), c.head_act_);
  result.prediction = y.row(0);
  return result;
}

ParamGrads backward(const ModelParams& params, ForwardCache& c, const RowVector& d_pred) {
  ParamGrads g;
  backward_into(params, c, d_pred, g);
  return g;
}

namespace {

// d_weight and d_bias straight into the gradient slots; returns d_x.
Matrix linear_backward_into(const Matrix& weight, const Matrix& x, const Matrix& d_y, Matrix& d_weight,
                            Matrix& d_bias) {
  d_weight.noalias() = d_y * x.transpose();
  d_bias.noalias() = d_y.rowwise().sum();
  Matrix d_x(weight.cols(), d_y.cols());
  d_x.noalias() = weight.transpose() * d_y;
  return d_x;
}

}  // namespace

void backward_into(const ModelParams& params, ForwardCache& c, const RowVector& d_pred, ParamGrads& g) {
  if (c.consumed_ || c.owner_ != &params || c.version_ != params.version()) {
    throw Error(ErrorCode::StaleCache, "forward cache is stale or already consumed");
  }
  if (d_pred.size() != c.x_.cols()) {
    throw Error(ErrorCode::ShapeMismatch, "upstream gradient length does not match the batch");
  }
  c.consumed_ = true;
  const auto& layout = params.layout();
  g.resize(params.tensors().size());

  const Matrix d_y = d_pred;
  const Matrix d_head_act = linear_backward_into(params.tensor(layout.head_fc2.weight), c.head_act_, d_y,
                                                 g[layout.head_fc2.weight], g[layout.head_fc2.bias]);
  const Matrix d_norm_out = layers::silu_backward(c.head_norm_out_, d_head_act);
  auto head_norm = layers::layer_norm_backward(c.head_norm_, params.tensor(layout.head_norm_gain), d_norm_out);
  g[layout.head_norm_gain] = std::move(head_norm.d_gain);
  g[layout.head_norm_shift] = std::move(head_norm.d_shift);
  Matrix d_h = linear_backward_into(params.tensor(layout.head_fc1.weight), c.head_input_, head_norm.d_x,
                                    g[layout.head_fc1.weight], g[layout.head_fc1.bias]);

  for (std::size_t b = layout.blocks.size(); b-- > 0;) {
    const BlockSlot& slot = layout.blocks[b];
    ForwardCache::Block& bc = c.blocks_[b];
    if (bc.mask.size() > 0) d_h.array() *= bc.mask.array();
    auto norm = layers::layer_norm_backward(bc.norm, params.tensor(slot.norm_gain), d_h);
    g[slot.norm_gain] = std::move(norm.d_gain);
    g[slot.norm_shift] = std::move(norm.d_shift);
    const Matrix& d_sum = norm.d_x;

    const Matrix d_fc1_act =
        linear_backward_into(params.tensor(slot.fc2.weight), bc.fc1_act, d_sum, g[slot.fc2.weight], g[slot.fc2.bias]);
    const Matrix d_fc1_pre = layers::silu_backward(bc.fc1_pre, d_fc1_act);
    d_h = linear_backward_into(params.tensor(slot.fc1.weight), bc.input, d_fc1_pre, g[slot.fc1.weight],
                               g[slot.fc1.bias]);
    if (slot.shortcut) {
      g[*slot.shortcut].noalias() = d_sum * bc.input.transpose();
      d_h.noalias() += params.tensor(*slot.shortcut).transpose() * d_sum;
    } else {
      d_h += d_sum;
    }
  }

  const Matrix d_proj_pre = layers::silu_backward(c.proj_pre_, d_h);
  g[layout.input.weight].noalias() = d_proj_pre * c.x_.transpose();
  g[layout.input.bias].noalias() = d_proj_pre.rowwise().sum();
}

AdamWState make_adamw_state(const ModelParams& params) {
  AdamWState s;
  s.m = zero_grads(params);
  s.v = zero_grads(params);
  return s;
}

void adamw_step(ModelParams& params, const ParamGrads& grads, AdamWState& state, double lr,
                double weight_decay) {
  if (grads.size() != params.tensors().size() || state.m.size() != grads.size()) {
    throw Error(ErrorCode::ShapeMismatch, "gradient set does not match the parameters");
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double bias1 = 1.0 - std::pow(kAdamBeta1, t);
  const double bias2 = 1.0 - std::pow(kAdamBeta2, t);
  auto& tensors = params.mutable_tensors();
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    if (grads[i].size() != tensors[i].value.size()) {
      throw Error(ErrorCode::ShapeMismatch, "gradient shape differs for " + tensors[i].name);
    }
    // chunked so m, v and theta are updated while still in cache
    constexpr Eigen::Index kChunk = 2048;
    const double decay = tensors[i].decayed ? 1.0 - lr * weight_decay : 1.0;
    const Eigen::Index n = tensors[i].value.size();
    for (Eigen::Index lo = 0; lo < n; lo += kChunk) {
      const Eigen::Index len = std::min(kChunk, n - lo);
      Eigen::Map<Eigen::ArrayXd> theta(tensors[i].value.data() + lo, len);
      Eigen::Map<const Eigen::ArrayXd> g(grads[i].data() + lo, len);
      Eigen::Map<Eigen::ArrayXd> m(state.m[i].data() + lo, len);
      Eigen::Map<Eigen::ArrayXd> v(state.v[i].data() + lo, len);
      m = kAdamBeta1 * m + (1.0 - kAdamBeta1) * g;
      v = kAdamBeta2 * v + (1.0 - kAdamBeta2) * g.square();
      theta = theta * decay - lr * (m / bias1) / ((v / bias2).sqrt() + kAdamEpsilon);
    }
  }
}

}  // namespace zscore
