#include "affkit/net.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <numeric>

#include "affkit/errors.hpp"
#include "affkit/rng.hpp"

namespace affkit {

namespace {

constexpr char kCheckpointMagic[8] = {'A', 'F', 'F', 'K', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kCheckpointVersion = 1;

Matrix linear_forward(const Matrix& input, const LinearLayer& layer) {
  Matrix out = matmul_nt(input, layer.weight);
  for (std::size_t i = 0; i < out.rows(); ++i) {
    auto row = out.row(i);
    for (std::size_t j = 0; j < out.cols(); ++j) {
      row[j] += layer.bias[j];
    }
  }
  return out;
}

std::vector<double> column_sums(const Matrix& m) {
  std::vector<double> sums(m.cols(), 0.0);
  for (std::size_t i = 0; i < m.rows(); ++i) {
    auto row = m.row(i);
    for (std::size_t j = 0; j < m.cols(); ++j) {
      sums[j] += row[j];
    }
  }
  return sums;
}

double stable_sigmoid(double z) {
  if (z >= 0.0) {
    return 1.0 / (1.0 + std::exp(-z));
  }
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double softplus(double z) {
  // log(1 + exp(z)) without overflow.
  if (z > 0.0) return z + std::log1p(std::exp(-z));
  return std::log1p(std::exp(z));
}

void require_same_shape(const Matrix& a, const Matrix& b, const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw Error(ErrorCode::ShapeMismatch, std::string(what) + ": shapes differ");
  }
}

}  // namespace

void ModelSpec::validate() const {
  if (input_dim < 1) {
    throw Error(ErrorCode::BadConfig, "model input_dim must be >= 1");
  }
  if (trunk_dims.empty()) {
    throw Error(ErrorCode::BadConfig, "model trunk_dims must be non-empty");
  }
  for (auto dim : trunk_dims) {
    if (dim < 1) throw Error(ErrorCode::BadConfig, "trunk dims must be >= 1");
  }
}

void TrainConfig::validate() const {
  if (learning_rate <= 0.0) throw Error(ErrorCode::BadConfig, "learning_rate must be > 0");
  if (momentum < 0.0) throw Error(ErrorCode::BadConfig, "momentum must be >= 0");
  if (batch_size < 1) throw Error(ErrorCode::BadConfig, "batch_size must be >= 1");
  if (epochs < 1) throw Error(ErrorCode::BadConfig, "epochs must be >= 1");
  if (lambda_expr < 0.0 || lambda_au < 0.0 || lambda_va < 0.0) {
    throw Error(ErrorCode::BadConfig, "loss weights must be >= 0");
  }
  if (lambda_expr == 0.0 && lambda_au == 0.0 && lambda_va == 0.0) {
    throw Error(ErrorCode::BadConfig, "at least one loss weight must be > 0");
  }
  if (scheduler) {
    if (scheduler->factor <= 0.0 || scheduler->factor >= 1.0) {
      throw Error(ErrorCode::BadConfig, "scheduler factor must be in (0, 1)");
    }
    if (scheduler->patience < 1) {
      throw Error(ErrorCode::BadConfig, "scheduler patience must be >= 1");
    }
  }
  if (!expr_class_weights.empty() && expr_class_weights.size() != kExprClassCount) {
    throw Error(ErrorCode::WrongArity, "expr_class_weights must have 8 entries");
  }
  if (!au_pos_weights.empty() && au_pos_weights.size() != kAuCount) {
    throw Error(ErrorCode::WrongArity, "au_pos_weights must have 12 entries");
  }
}

ModelParams init_params(const ModelSpec& spec, std::uint64_t seed) {
  spec.validate();
  Rng rng(seed);
  auto he_linear = [&rng](std::size_t out, std::size_t in) {
    LinearLayer layer;
    layer.weight = Matrix(out, in);
    const double scale = std::sqrt(2.0 / static_cast<double>(in));
    for (double& w : layer.weight.data()) {
      w = rng.normal() * scale;
    }
    layer.bias.assign(out, 0.0);
    return layer;
  };

  ModelParams params;
  params.spec = spec;
  std::size_t in = spec.input_dim;
  for (std::size_t out : spec.trunk_dims) {
    params.trunk.push_back(he_linear(out, in));
    if (spec.use_batchnorm) {
      BatchNormLayer norm;
      norm.gamma.assign(out, 1.0);
      norm.beta.assign(out, 0.0);
      norm.running_mean.assign(out, 0.0);
      norm.running_var.assign(out, 1.0);
      params.norms.push_back(std::move(norm));
    }
    in = out;
  }
  params.expr_head = he_linear(kExprClassCount, in);
  params.au_head = he_linear(kAuCount, in);
  params.va_head = he_linear(kVaDims, in);
  return params;
}

TaskOutputs forward(const ModelParams& params, const Matrix& batch, RunMode mode,
                    ForwardCache* cache) {
  params.spec.validate();
  if (batch.cols() != params.spec.input_dim) {
    throw Error(ErrorCode::ShapeMismatch, "batch width does not match input_dim");
  }
  if (batch.rows() < 1) {
    throw Error(ErrorCode::ShapeMismatch, "empty batch");
  }
  if (params.spec.use_batchnorm && mode == RunMode::Train && batch.rows() < 2) {
    throw Error(ErrorCode::BatchTooSmall,
                "batchnorm in train mode needs at least 2 samples");
  }
  if (params.spec.use_batchnorm && params.norms.size() != params.trunk.size()) {
    throw Error(ErrorCode::BadConfig, "one batchnorm layer per trunk layer required");
  }

  if (cache) {
    cache->input = batch;
    cache->stages.clear();
    cache->batch_rows = batch.rows();
    cache->mode = mode;
  }

  const double n = static_cast<double>(batch.rows());
  Matrix current = batch;
  for (std::size_t layer = 0; layer < params.trunk.size(); ++layer) {
    Matrix z = linear_forward(current, params.trunk[layer]);
    ForwardCache::Stage stage;
    Matrix pre_activation;
    if (params.spec.use_batchnorm) {
      const auto& norm = params.norms[layer];
      const std::size_t width = z.cols();
      std::vector<double> mean(width, 0.0);
      std::vector<double> var(width, 0.0);
      if (mode == RunMode::Train) {
        mean = column_sums(z);
        for (double& m : mean) m /= n;
        for (std::size_t i = 0; i < z.rows(); ++i) {
          auto row = z.row(i);
          for (std::size_t j = 0; j < width; ++j) {
            const double d = row[j] - mean[j];
            var[j] += d * d;
          }
        }
        for (double& v : var) v /= n;
      } else {
        mean = norm.running_mean;
        var = norm.running_var;
      }
      Matrix normalized(z.rows(), width);
      pre_activation = Matrix(z.rows(), width);
      for (std::size_t i = 0; i < z.rows(); ++i) {
        auto zr = z.row(i);
        auto nr = normalized.row(i);
        auto pr = pre_activation.row(i);
        for (std::size_t j = 0; j < width; ++j) {
          nr[j] = (zr[j] - mean[j]) / std::sqrt(var[j] + kBatchNormEps);
          pr[j] = norm.gamma[j] * nr[j] + norm.beta[j];
        }
      }
      if (cache) {
        stage.batch_mean = std::move(mean);
        stage.batch_var = std::move(var);
        stage.normalized = std::move(normalized);
      }
    } else {
      pre_activation = z;
    }

    Matrix activated = pre_activation;
    for (double& v : activated.data()) {
      if (v < 0.0) v = 0.0;
    }
    if (cache) {
      stage.linear_out = std::move(z);
      stage.activated = activated;
      cache->stages.push_back(std::move(stage));
    }
    current = std::move(activated);
  }

  TaskOutputs outputs;
  outputs.expr_logits = linear_forward(current, params.expr_head);
  outputs.au_logits = linear_forward(current, params.au_head);
  outputs.va_pred = linear_forward(current, params.va_head);
  return outputs;
}

void update_running_stats(ModelParams& params, const ForwardCache& cache) {
  if (!params.spec.use_batchnorm) return;
  if (cache.stages.size() != params.norms.size() || cache.mode != RunMode::Train) {
    throw Error(ErrorCode::StaleCache, "cache does not match a train-mode forward");
  }
  for (std::size_t layer = 0; layer < params.norms.size(); ++layer) {
    auto& norm = params.norms[layer];
    const auto& stage = cache.stages[layer];
    if (stage.batch_mean.size() != norm.running_mean.size()) {
      throw Error(ErrorCode::StaleCache, "cache does not match the model");
    }
    for (std::size_t j = 0; j < norm.running_mean.size(); ++j) {
      norm.running_mean[j] = (1.0 - kBatchNormMomentum) * norm.running_mean[j] +
                             kBatchNormMomentum * stage.batch_mean[j];
      norm.running_var[j] = (1.0 - kBatchNormMomentum) * norm.running_var[j] +
                            kBatchNormMomentum * stage.batch_var[j];
    }
  }
}

ParamGrads zero_grads_like(const ModelParams& params) {
  ParamGrads grads;
  for (const auto& layer : params.trunk) {
    grads.trunk.push_back(
        {Matrix(layer.weight.rows(), layer.weight.cols()),
         std::vector<double>(layer.bias.size(), 0.0)});
  }
  for (const auto& norm : params.norms) {
    grads.norms.push_back({std::vector<double>(norm.gamma.size(), 0.0),
                           std::vector<double>(norm.beta.size(), 0.0)});
  }
  auto zero_linear = [](const LinearLayer& layer) {
    return LinearGrads{Matrix(layer.weight.rows(), layer.weight.cols()),
                       std::vector<double>(layer.bias.size(), 0.0)};
  };
  grads.expr_head = zero_linear(params.expr_head);
  grads.au_head = zero_linear(params.au_head);
  grads.va_head = zero_linear(params.va_head);
  return grads;
}

ParamGrads backward(const ModelParams& params, const ForwardCache& cache,
                    const HeadGrads& head_grads) {
  if (cache.stages.size() != params.trunk.size() || cache.batch_rows == 0) {
    throw Error(ErrorCode::StaleCache, "forward cache does not match the model");
  }
  if (cache.mode != RunMode::Train) {
    throw Error(ErrorCode::StaleCache, "backward needs a train-mode forward cache");
  }
  const std::size_t n_rows = cache.batch_rows;
  auto check_head = [&](const Matrix& grad, std::size_t width, const char* name) {
    if (grad.rows() != n_rows || grad.cols() != width) {
      throw Error(ErrorCode::StaleCache,
                  std::string("head gradient shape mismatch for ") + name);
    }
  };
  check_head(head_grads.expr, kExprClassCount, "expr");
  check_head(head_grads.au, kAuCount, "au");
  check_head(head_grads.va, kVaDims, "va");

  ParamGrads grads = zero_grads_like(params);
  const Matrix& trunk_out = cache.stages.back().activated;

  auto head_backward = [&](const Matrix& dlogits, const LinearLayer& head,
                           LinearGrads& head_grad) {
    head_grad.weight = matmul_tn(dlogits, trunk_out);
    head_grad.bias = column_sums(dlogits);
    return matmul(dlogits, head.weight);
  };
  Matrix d_current = head_backward(head_grads.expr, params.expr_head, grads.expr_head);
  {
    Matrix d_au = head_backward(head_grads.au, params.au_head, grads.au_head);
    Matrix d_va = head_backward(head_grads.va, params.va_head, grads.va_head);
    for (std::size_t i = 0; i < d_current.data().size(); ++i) {
      d_current.data()[i] += d_au.data()[i] + d_va.data()[i];
    }
  }

  const double n = static_cast<double>(n_rows);
  for (std::size_t layer = params.trunk.size(); layer-- > 0;) {
    const auto& stage = cache.stages[layer];
    // ReLU mask: activated > 0 iff the pre-activation was positive.
    Matrix d_pre = d_current;
    for (std::size_t i = 0; i < d_pre.data().size(); ++i) {
      if (stage.activated.data()[i] <= 0.0) d_pre.data()[i] = 0.0;
    }

    if (params.spec.use_batchnorm) {
      const auto& norm = params.norms[layer];
      const std::size_t width = d_pre.cols();
      if (stage.batch_var.size() != width || stage.normalized.rows() != n_rows) {
        throw Error(ErrorCode::StaleCache,
                    "cache is missing train-mode batchnorm statistics");
      }
      std::vector<double> sum_dy(width, 0.0);
      std::vector<double> sum_dy_xhat(width, 0.0);
      for (std::size_t i = 0; i < n_rows; ++i) {
        auto dy = d_pre.row(i);
        auto xhat = stage.normalized.row(i);
        for (std::size_t j = 0; j < width; ++j) {
          sum_dy[j] += dy[j];
          sum_dy_xhat[j] += dy[j] * xhat[j];
        }
      }
      grads.norms[layer].beta = sum_dy;
      grads.norms[layer].gamma = sum_dy_xhat;

      Matrix d_z(n_rows, width);
      for (std::size_t i = 0; i < n_rows; ++i) {
        auto dy = d_pre.row(i);
        auto xhat = stage.normalized.row(i);
        auto dz = d_z.row(i);
        for (std::size_t j = 0; j < width; ++j) {
          const double inv_std = 1.0 / std::sqrt(stage.batch_var[j] + kBatchNormEps);
          dz[j] = norm.gamma[j] * inv_std *
                  (dy[j] - sum_dy[j] / n - xhat[j] * (sum_dy_xhat[j] / n));
        }
      }
      d_pre = std::move(d_z);
    }

    const Matrix& input = layer == 0 ? cache.input : cache.stages[layer - 1].activated;
    grads.trunk[layer].weight = matmul_tn(d_pre, input);
    grads.trunk[layer].bias = column_sums(d_pre);
    if (layer > 0) {
      d_current = matmul(d_pre, params.trunk[layer].weight);
    }
  }
  return grads;
}

LossResult softmax_cross_entropy(const Matrix& logits, std::span<const int> targets,
                                 std::span<const double> weights) {
  if (logits.rows() != targets.size()) {
    throw Error(ErrorCode::LengthMismatch, "one target class per logit row required");
  }
  if (logits.rows() == 0) {
    throw Error(ErrorCode::ShapeMismatch, "empty logits");
  }
  if (!weights.empty() && weights.size() != logits.cols()) {
    throw Error(ErrorCode::WrongArity, "one weight per class required");
  }
  const std::size_t k = logits.cols();
  for (int t : targets) {
    if (t < 0 || t >= static_cast<int>(k)) {
      throw Error(ErrorCode::ClassOutOfRange, "target class out of range");
    }
  }

  LossResult result;
  result.grad = Matrix(logits.rows(), k);
  double weight_total = 0.0;
  double loss_sum = 0.0;
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    auto row = logits.row(i);
    const double max_logit = *std::max_element(row.begin(), row.end());
    double sum_exp = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      sum_exp += std::exp(row[j] - max_logit);
    }
    const double log_z = max_logit + std::log(sum_exp);
    const std::size_t target = static_cast<std::size_t>(targets[i]);
    const double w = weights.empty() ? 1.0 : weights[target];
    weight_total += w;
    loss_sum += -w * (row[target] - log_z);
    auto grad_row = result.grad.row(i);
    for (std::size_t j = 0; j < k; ++j) {
      const double p = std::exp(row[j] - log_z);
      grad_row[j] = w * (p - (j == target ? 1.0 : 0.0));
    }
  }
  result.value = loss_sum / weight_total;
  for (double& g : result.grad.data()) {
    g /= weight_total;
  }
  return result;
}

LossResult weighted_bce_with_logits(const Matrix& logits, const Matrix& targets,
                                    std::span<const double> pos_weights) {
  require_same_shape(logits, targets, "weighted_bce_with_logits");
  if (logits.rows() == 0) {
    throw Error(ErrorCode::ShapeMismatch, "empty logits");
  }
  if (!pos_weights.empty() && pos_weights.size() != logits.cols()) {
    throw Error(ErrorCode::WrongArity, "one positive weight per column required");
  }
  const double count = static_cast<double>(logits.size());
  LossResult result;
  result.grad = Matrix(logits.rows(), logits.cols());
  double loss_sum = 0.0;
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    auto z = logits.row(i);
    auto t = targets.row(i);
    auto g = result.grad.row(i);
    for (std::size_t j = 0; j < logits.cols(); ++j) {
      if (t[j] != 0.0 && t[j] != 1.0) {
        throw Error(ErrorCode::OutOfRange, "targets must be 0 or 1");
      }
      const double pw = pos_weights.empty() ? 1.0 : pos_weights[j];
      const double sig = stable_sigmoid(z[j]);
      loss_sum += pw * t[j] * softplus(-z[j]) + (1.0 - t[j]) * softplus(z[j]);
      g[j] = (pw * t[j] * (sig - 1.0) + (1.0 - t[j]) * sig) / count;
    }
  }
  result.value = loss_sum / count;
  return result;
}

LossResult mse_loss(const Matrix& pred, const Matrix& target) {
  require_same_shape(pred, target, "mse_loss");
  if (pred.rows() == 0) {
    throw Error(ErrorCode::ShapeMismatch, "empty predictions");
  }
  const double count = static_cast<double>(pred.size());
  LossResult result;
  result.grad = Matrix(pred.rows(), pred.cols());
  double loss_sum = 0.0;
  for (std::size_t i = 0; i < pred.data().size(); ++i) {
    const double d = pred.data()[i] - target.data()[i];
    loss_sum += d * d;
    result.grad.data()[i] = 2.0 * d / count;
  }
  result.value = loss_sum / count;
  return result;
}

namespace {

std::vector<std::size_t> mask_indices(const std::vector<std::uint8_t>& mask) {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (mask[i]) idx.push_back(i);
  }
  return idx;
}

Matrix gather_rows(const Matrix& m, const std::vector<std::size_t>& idx) {
  Matrix out(idx.size(), m.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    auto src = m.row(idx[i]);
    auto dst = out.row(i);
    std::copy(src.begin(), src.end(), dst.begin());
  }
  return out;
}

void scatter_rows_scaled(Matrix& dst, const Matrix& src,
                         const std::vector<std::size_t>& idx, double scale) {
  for (std::size_t i = 0; i < idx.size(); ++i) {
    auto s = src.row(i);
    auto d = dst.row(idx[i]);
    for (std::size_t j = 0; j < dst.cols(); ++j) {
      d[j] = scale * s[j];
    }
  }
}

}  // namespace

CombinedLoss combined_loss(const TaskOutputs& outputs, const MultiTaskLabels& labels,
                           const TrainConfig& cfg) {
  const std::size_t n = outputs.expr_logits.rows();
  if (outputs.au_logits.rows() != n || outputs.va_pred.rows() != n) {
    throw Error(ErrorCode::ShapeMismatch, "task outputs disagree on batch size");
  }
  auto mask_or_empty = [n](const std::vector<std::uint8_t>& mask,
                           const char* name) -> std::vector<std::size_t> {
    if (mask.empty()) return {};
    if (mask.size() != n) {
      throw Error(ErrorCode::ShapeMismatch,
                  std::string(name) + " mask does not match the batch size");
    }
    return mask_indices(mask);
  };
  const auto expr_idx = mask_or_empty(labels.expr_mask, "expr");
  const auto au_idx = mask_or_empty(labels.au_mask, "au");
  const auto va_idx = mask_or_empty(labels.va_mask, "va");
  if (expr_idx.empty() && au_idx.empty() && va_idx.empty()) {
    throw Error(ErrorCode::AllMasksEmpty, "no task has any masked sample");
  }

  CombinedLoss combined;
  combined.head_grads.expr = Matrix(n, kExprClassCount);
  combined.head_grads.au = Matrix(n, kAuCount);
  combined.head_grads.va = Matrix(n, kVaDims);

  if (!expr_idx.empty()) {
    if (labels.expr.size() != n) {
      throw Error(ErrorCode::ShapeMismatch, "expr labels do not match the batch size");
    }
    std::vector<int> targets(expr_idx.size());
    for (std::size_t i = 0; i < expr_idx.size(); ++i) {
      targets[i] = labels.expr[expr_idx[i]];
    }
    auto sub = gather_rows(outputs.expr_logits, expr_idx);
    auto loss = softmax_cross_entropy(sub, targets, cfg.expr_class_weights);
    combined.expr_loss = loss.value;
    if (cfg.lambda_expr != 0.0) {
      scatter_rows_scaled(combined.head_grads.expr, loss.grad, expr_idx,
                          cfg.lambda_expr);
    }
  }
  if (!au_idx.empty()) {
    if (labels.au.rows() != n || labels.au.cols() != kAuCount) {
      throw Error(ErrorCode::ShapeMismatch, "au labels do not match the batch");
    }
    auto sub = gather_rows(outputs.au_logits, au_idx);
    auto sub_targets = gather_rows(labels.au, au_idx);
    auto loss = cfg.au_loss == AuLossKind::WeightedBce
                    ? weighted_bce_with_logits(sub, sub_targets, cfg.au_pos_weights)
                    : mse_loss(sub, sub_targets);
    combined.au_loss = loss.value;
    if (cfg.lambda_au != 0.0) {
      scatter_rows_scaled(combined.head_grads.au, loss.grad, au_idx, cfg.lambda_au);
    }
  }
  if (!va_idx.empty()) {
    if (labels.va.rows() != n || labels.va.cols() != kVaDims) {
      throw Error(ErrorCode::ShapeMismatch, "va labels do not match the batch");
    }
    auto sub = gather_rows(outputs.va_pred, va_idx);
    auto sub_targets = gather_rows(labels.va, va_idx);
    auto loss = mse_loss(sub, sub_targets);
    combined.va_loss = loss.value;
    if (cfg.lambda_va != 0.0) {
      scatter_rows_scaled(combined.head_grads.va, loss.grad, va_idx, cfg.lambda_va);
    }
  }

  combined.total = cfg.lambda_expr * combined.expr_loss +
                   cfg.lambda_au * combined.au_loss + cfg.lambda_va * combined.va_loss;
  return combined;
}

std::vector<std::span<double>> trainable_views(ModelParams& params) {
  std::vector<std::span<double>> views;
  for (std::size_t i = 0; i < params.trunk.size(); ++i) {
    views.emplace_back(params.trunk[i].weight.data());
    views.emplace_back(params.trunk[i].bias);
    if (params.spec.use_batchnorm) {
      views.emplace_back(params.norms[i].gamma);
      views.emplace_back(params.norms[i].beta);
    }
  }
  for (LinearLayer* head : {&params.expr_head, &params.au_head, &params.va_head}) {
    views.emplace_back(head->weight.data());
    views.emplace_back(head->bias);
  }
  return views;
}

std::vector<std::span<const double>> trainable_views(const ModelParams& params) {
  auto views = trainable_views(const_cast<ModelParams&>(params));
  return {views.begin(), views.end()};
}

std::vector<std::span<double>> grad_views(ParamGrads& grads) {
  std::vector<std::span<double>> views;
  const bool has_norms = !grads.norms.empty();
  for (std::size_t i = 0; i < grads.trunk.size(); ++i) {
    views.emplace_back(grads.trunk[i].weight.data());
    views.emplace_back(grads.trunk[i].bias);
    if (has_norms) {
      views.emplace_back(grads.norms[i].gamma);
      views.emplace_back(grads.norms[i].beta);
    }
  }
  for (LinearGrads* head : {&grads.expr_head, &grads.au_head, &grads.va_head}) {
    views.emplace_back(head->weight.data());
    views.emplace_back(head->bias);
  }
  return views;
}

std::vector<std::span<const double>> grad_views(const ParamGrads& grads) {
  auto views = grad_views(const_cast<ParamGrads&>(grads));
  return {views.begin(), views.end()};
}

OptimizerState init_optimizer_state(const ModelParams& params) {
  OptimizerState state;
  for (auto view : trainable_views(params)) {
    state.first_moment.emplace_back(view.size(), 0.0);
    state.second_moment.emplace_back(view.size(), 0.0);
  }
  return state;
}

namespace {

void check_state(const ModelParams& params, const ParamGrads& grads,
                 OptimizerState& state) {
  auto pviews = trainable_views(params);
  auto gviews = grad_views(grads);
  if (pviews.size() != gviews.size()) {
    throw Error(ErrorCode::ShapeMismatch, "gradients do not match the parameters");
  }
  for (std::size_t i = 0; i < pviews.size(); ++i) {
    if (pviews[i].size() != gviews[i].size()) {
      throw Error(ErrorCode::ShapeMismatch, "gradients do not match the parameters");
    }
  }
  if (state.first_moment.empty()) {
    OptimizerState fresh = init_optimizer_state(params);
    state.first_moment = std::move(fresh.first_moment);
    state.second_moment = std::move(fresh.second_moment);
  }
}

}  // namespace

void sgd_step(ModelParams& params, const ParamGrads& grads, const TrainConfig& cfg,
              OptimizerState& state, double lr) {
  check_state(params, grads, state);
  auto pviews = trainable_views(params);
  auto gviews = grad_views(grads);
  for (std::size_t i = 0; i < pviews.size(); ++i) {
    auto& buffer = state.first_moment[i];
    for (std::size_t j = 0; j < pviews[i].size(); ++j) {
      buffer[j] = cfg.momentum * buffer[j] + gviews[i][j];
      pviews[i][j] -= lr * buffer[j];
    }
  }
  ++state.step_count;
}

void adam_step(ModelParams& params, const ParamGrads& grads, const TrainConfig& cfg,
               OptimizerState& state, double lr) {
  check_state(params, grads, state);
  auto pviews = trainable_views(params);
  auto gviews = grad_views(grads);
  ++state.step_count;
  const double t = static_cast<double>(state.step_count);
  const double bias1 = 1.0 - std::pow(cfg.adam_beta1, t);
  const double bias2 = 1.0 - std::pow(cfg.adam_beta2, t);
  for (std::size_t i = 0; i < pviews.size(); ++i) {
    auto& m = state.first_moment[i];
    auto& v = state.second_moment[i];
    for (std::size_t j = 0; j < pviews[i].size(); ++j) {
      const double g = gviews[i][j];
      m[j] = cfg.adam_beta1 * m[j] + (1.0 - cfg.adam_beta1) * g;
      v[j] = cfg.adam_beta2 * v[j] + (1.0 - cfg.adam_beta2) * g * g;
      const double m_hat = m[j] / bias1;
      const double v_hat = v[j] / bias2;
      pviews[i][j] -= lr * m_hat / (std::sqrt(v_hat) + cfg.adam_eps);
    }
  }
}

void optimizer_step(ModelParams& params, const ParamGrads& grads,
                    const TrainConfig& cfg, OptimizerState& state, double lr) {
  if (cfg.optimizer == OptimizerKind::Sgd) {
    sgd_step(params, grads, cfg, state, lr);
  } else {
    adam_step(params, grads, cfg, state, lr);
  }
}

PlateauScheduler::PlateauScheduler(const PlateauConfig& cfg, double initial_lr)
    : cfg_(cfg), lr_(initial_lr),
      best_loss_(std::numeric_limits<double>::infinity()) {}

double PlateauScheduler::step(double val_loss) {
  if (val_loss < best_loss_) {
    best_loss_ = val_loss;
    bad_epochs_ = 0;
  } else if (++bad_epochs_ >= cfg_.patience) {
    lr_ = std::max(lr_ * cfg_.factor, cfg_.min_lr);
    bad_epochs_ = 0;
  }
  return lr_;
}

ParamGrads numerical_gradient(const std::function<double(const ModelParams&)>& loss_fn,
                              const ModelParams& params, double eps) {
  if (eps <= 0.0) {
    throw Error(ErrorCode::BadConfig, "eps must be > 0");
  }
  ModelParams work = params;
  ParamGrads grads = zero_grads_like(params);
  auto pviews = trainable_views(work);
  auto gviews = grad_views(grads);
  for (std::size_t i = 0; i < pviews.size(); ++i) {
    for (std::size_t j = 0; j < pviews[i].size(); ++j) {
      const double original = pviews[i][j];
      pviews[i][j] = original + eps;
      const double up = loss_fn(work);
      pviews[i][j] = original - eps;
      const double down = loss_fn(work);
      pviews[i][j] = original;
      gviews[i][j] = (up - down) / (2.0 * eps);
    }
  }
  return grads;
}

// --- checkpoint io -----------------------------------------------------------

namespace {

void write_u64(std::ostream& out, std::uint64_t value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(value));
}

void write_doubles(std::ostream& out, std::span<const double> values) {
  write_u64(out, values.size());
  out.write(reinterpret_cast<const char*>(values.data()),
            static_cast<std::streamsize>(values.size() * sizeof(double)));
}

std::uint64_t read_u64(std::istream& in) {
  std::uint64_t value = 0;
  in.read(reinterpret_cast<char*>(&value), sizeof(value));
  if (!in) throw Error(ErrorCode::IoError, "truncated checkpoint");
  return value;
}

std::vector<double> read_doubles(std::istream& in) {
  const std::uint64_t count = read_u64(in);
  std::vector<double> values(count);
  in.read(reinterpret_cast<char*>(values.data()),
          static_cast<std::streamsize>(count * sizeof(double)));
  if (!in) throw Error(ErrorCode::IoError, "truncated checkpoint");
  return values;
}

void read_into(std::istream& in, std::span<double> dst) {
  auto values = read_doubles(in);
  if (values.size() != dst.size()) {
    throw Error(ErrorCode::IoError, "checkpoint array size mismatch");
  }
  std::copy(values.begin(), values.end(), dst.begin());
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path());
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write checkpoint: " + path.string());
  out.write(kCheckpointMagic, sizeof(kCheckpointMagic));
  const std::uint32_t version = kCheckpointVersion;
  out.write(reinterpret_cast<const char*>(&version), sizeof(version));

  const auto& spec = ckpt.params.spec;
  write_u64(out, spec.input_dim);
  write_u64(out, spec.trunk_dims.size());
  for (auto dim : spec.trunk_dims) write_u64(out, dim);
  write_u64(out, spec.use_batchnorm ? 1 : 0);

  for (auto view : trainable_views(ckpt.params)) {
    write_doubles(out, view);
  }
  for (const auto& norm : ckpt.params.norms) {
    write_doubles(out, norm.running_mean);
    write_doubles(out, norm.running_var);
  }

  write_u64(out, ckpt.optimizer.first_moment.size());
  for (const auto& m : ckpt.optimizer.first_moment) write_doubles(out, m);
  write_u64(out, ckpt.optimizer.second_moment.size());
  for (const auto& v : ckpt.optimizer.second_moment) write_doubles(out, v);
  write_u64(out, ckpt.optimizer.step_count);
  write_u64(out, ckpt.epoch);
  if (!out) throw Error(ErrorCode::IoError, "failed writing checkpoint");
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open checkpoint: " + path.string());
  char magic[sizeof(kCheckpointMagic)] = {};
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kCheckpointMagic, sizeof(magic)) != 0) {
    throw Error(ErrorCode::IoError, "not an affkit checkpoint: " + path.string());
  }
  std::uint32_t version = 0;
  in.read(reinterpret_cast<char*>(&version), sizeof(version));
  if (!in || version != kCheckpointVersion) {
    throw Error(ErrorCode::IoError, "unsupported checkpoint version");
  }

  ModelSpec spec;
  spec.input_dim = read_u64(in);
  const std::uint64_t n_trunk = read_u64(in);
  for (std::uint64_t i = 0; i < n_trunk; ++i) {
    spec.trunk_dims.push_back(read_u64(in));
  }
  spec.use_batchnorm = read_u64(in) != 0;

  Checkpoint ckpt;
  ckpt.params = init_params(spec, 0);
  for (auto view : trainable_views(ckpt.params)) {
    read_into(in, view);
  }
  for (auto& norm : ckpt.params.norms) {
    read_into(in, norm.running_mean);
    read_into(in, norm.running_var);
  }

  const std::uint64_t n_first = read_u64(in);
  for (std::uint64_t i = 0; i < n_first; ++i) {
    ckpt.optimizer.first_moment.push_back(read_doubles(in));
  }
  const std::uint64_t n_second = read_u64(in);
  for (std::uint64_t i = 0; i < n_second; ++i) {
    ckpt.optimizer.second_moment.push_back(read_doubles(in));
  }
  ckpt.optimizer.step_count = read_u64(in);
  ckpt.epoch = read_u64(in);
  return ckpt;
}

}  // namespace affkit
