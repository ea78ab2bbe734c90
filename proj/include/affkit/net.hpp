#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "affkit/matrix.hpp"
#include "affkit/tasks.hpp"

namespace affkit {

inline constexpr double kBatchNormEps = 1e-5;
inline constexpr double kBatchNormMomentum = 0.1;

// Shared fully connected trunk plus the three fixed-width task heads
// (expression 8, action units 12, valence-arousal 2).
struct ModelSpec {
  std::size_t input_dim = 0;
  std::vector<std::size_t> trunk_dims;
  bool use_batchnorm = false;

  void validate() const;
  bool operator==(const ModelSpec&) const = default;
};

struct LinearLayer {
  Matrix weight;  // out x in
  std::vector<double> bias;

  bool operator==(const LinearLayer&) const = default;
};

struct BatchNormLayer {
  std::vector<double> gamma;
  std::vector<double> beta;
  std::vector<double> running_mean;
  std::vector<double> running_var;

  bool operator==(const BatchNormLayer&) const = default;
};

struct ModelParams {
  ModelSpec spec;
  std::vector<LinearLayer> trunk;
  std::vector<BatchNormLayer> norms;  // one per trunk layer when enabled
  LinearLayer expr_head;
  LinearLayer au_head;
  LinearLayer va_head;

  bool operator==(const ModelParams&) const = default;
};

// He-scaled weights (std = sqrt(2/fan_in)), zero biases, identity batchnorm.
// A fixed seed yields bitwise identical parameters.
ModelParams init_params(const ModelSpec& spec, std::uint64_t seed);

struct TaskOutputs {
  Matrix expr_logits;  // N x 8
  Matrix au_logits;    // N x 12
  Matrix va_pred;      // N x 2
};

enum class RunMode { Train, Eval };

// Intermediates kept by a train-mode forward pass for backward().
struct ForwardCache {
  struct Stage {
    Matrix linear_out;
    std::vector<double> batch_mean;  // batchnorm only
    std::vector<double> batch_var;   // population variance
    Matrix normalized;               // x-hat, batchnorm only
    Matrix activated;
  };
  Matrix input;
  std::vector<Stage> stages;
  std::size_t batch_rows = 0;
  RunMode mode = RunMode::Eval;
};

// Trunk applied once, every head applied to the shared trunk output.
// Batchnorm uses batch statistics in train mode and running statistics in
// eval mode; running statistics are only changed by update_running_stats.
TaskOutputs forward(const ModelParams& params, const Matrix& batch, RunMode mode,
                    ForwardCache* cache = nullptr);

// Folds the cached batch statistics into the running estimates:
// running <- (1 - momentum) * running + momentum * batch.
void update_running_stats(ModelParams& params, const ForwardCache& cache);

struct LinearGrads {
  Matrix weight;
  std::vector<double> bias;
};

struct NormGrads {
  std::vector<double> gamma;
  std::vector<double> beta;
};

struct ParamGrads {
  std::vector<LinearGrads> trunk;
  std::vector<NormGrads> norms;
  LinearGrads expr_head;
  LinearGrads au_head;
  LinearGrads va_head;
};

ParamGrads zero_grads_like(const ModelParams& params);

struct HeadGrads {
  Matrix expr;  // d loss / d expr logits
  Matrix au;
  Matrix va;
};

// Backpropagates the three head gradients through the shared trunk; the
// trunk gradient is the sum of the heads' contributions.
ParamGrads backward(const ModelParams& params, const ForwardCache& cache,
                    const HeadGrads& head_grads);

// --- losses -----------------------------------------------------------------

struct LossResult {
  double value = 0.0;
  Matrix grad;  // d value / d logits (or predictions)
};

// Weighted mean of -w_t * log softmax(logits)_t, normalized by the summed
// weights (plain mean when no weights). Stabilized by max subtraction.
LossResult softmax_cross_entropy(const Matrix& logits, std::span<const int> targets,
                                 std::span<const double> weights = {});

// Element-wise stabilized binary cross-entropy with optional per-column
// positive-class weights, mean-reduced over all N*C entries.
LossResult weighted_bce_with_logits(const Matrix& logits, const Matrix& targets,
                                    std::span<const double> pos_weights = {});

// Mean over all N*D squared errors; grad = 2*(pred - target)/(N*D).
LossResult mse_loss(const Matrix& pred, const Matrix& target);

// --- training configuration --------------------------------------------------

enum class OptimizerKind { Sgd, Adam };
enum class AuLossKind { Mse, WeightedBce };

struct PlateauConfig {
  double factor = 0.1;
  std::size_t patience = 2;
  double min_lr = 1e-6;
};

struct TrainConfig {
  OptimizerKind optimizer = OptimizerKind::Adam;
  double learning_rate = 1e-3;
  double momentum = 0.0;  // SGD
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  std::size_t batch_size = 64;
  std::size_t epochs = 1;
  std::uint64_t seed = 42;
  std::optional<PlateauConfig> scheduler;
  double lambda_expr = 0.0;
  double lambda_au = 0.0;
  double lambda_va = 0.0;
  AuLossKind au_loss = AuLossKind::Mse;
  std::vector<double> expr_class_weights;  // empty = unweighted
  std::vector<double> au_pos_weights;      // empty = unweighted

  void validate() const;
};

// --- combined multi-task loss -------------------------------------------------

struct MultiTaskLabels {
  std::vector<int> expr;                 // N (ignored where unmasked)
  Matrix au;                             // N x 12
  Matrix va;                             // N x 2
  std::vector<std::uint8_t> expr_mask;   // N
  std::vector<std::uint8_t> au_mask;
  std::vector<std::uint8_t> va_mask;
};

struct CombinedLoss {
  double total = 0.0;      // lambda-weighted sum
  double expr_loss = 0.0;  // raw per-task means over their masked samples
  double au_loss = 0.0;
  double va_loss = 0.0;
  HeadGrads head_grads;    // already scaled by the lambdas
};

// Each task's loss is averaged over its masked samples only; a task with no
// masked samples contributes zero loss and zero gradient.
CombinedLoss combined_loss(const TaskOutputs& outputs, const MultiTaskLabels& labels,
                           const TrainConfig& cfg);

// --- optimizers ----------------------------------------------------------------

struct OptimizerState {
  std::vector<std::vector<double>> first_moment;   // SGD momentum or Adam m
  std::vector<std::vector<double>> second_moment;  // Adam v
  std::uint64_t step_count = 0;
};

OptimizerState init_optimizer_state(const ModelParams& params);

// v <- momentum*v + g; p <- p - lr*v
void sgd_step(ModelParams& params, const ParamGrads& grads, const TrainConfig& cfg,
              OptimizerState& state, double lr);

// Bias-corrected Adam with (beta1, beta2, eps) from the config.
void adam_step(ModelParams& params, const ParamGrads& grads, const TrainConfig& cfg,
               OptimizerState& state, double lr);

void optimizer_step(ModelParams& params, const ParamGrads& grads,
                    const TrainConfig& cfg, OptimizerState& state, double lr);

// --- learning-rate scheduling ---------------------------------------------------

// Multiplies the learning rate by `factor` once the validation loss has gone
// `patience` consecutive epochs without a strict improvement.
class PlateauScheduler {
 public:
  PlateauScheduler(const PlateauConfig& cfg, double initial_lr);

  // Feed one epoch's validation loss; returns the learning rate to use next.
  double step(double val_loss);
  double lr() const { return lr_; }

 private:
  PlateauConfig cfg_;
  double lr_;
  double best_loss_;
  std::size_t bad_epochs_ = 0;
};

// --- verification -----------------------------------------------------------------

// Central finite differences over every trainable scalar (weights, biases,
// batchnorm gamma/beta). The callback must be deterministic.
ParamGrads numerical_gradient(const std::function<double(const ModelParams&)>& loss_fn,
                              const ModelParams& params, double eps);

// Flat views over the trainable arrays, in a fixed order shared with the
// optimizer state and the checkpoint format.
std::vector<std::span<double>> trainable_views(ModelParams& params);
std::vector<std::span<const double>> trainable_views(const ModelParams& params);
std::vector<std::span<double>> grad_views(ParamGrads& grads);
std::vector<std::span<const double>> grad_views(const ParamGrads& grads);

// --- checkpointing -----------------------------------------------------------------

struct Checkpoint {
  ModelParams params;
  OptimizerState optimizer;
  std::uint64_t epoch = 0;
};

// Versioned binary format; round-trips bitwise.
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace affkit
