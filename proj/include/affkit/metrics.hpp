#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "affkit/annotations.hpp"
#include "affkit/matrix.hpp"
#include "affkit/tasks.hpp"

namespace affkit {

// Product-moment correlation. Returns 0 when either sequence is constant.
double pearson(std::span<const double> x, std::span<const double> y);

// Concordance correlation coefficient with population (1/N) moments:
//   2*cov / (var_pred + var_target + (mean_pred - mean_target)^2).
// A zero denominator yields 0, except when both sequences are the same
// constant, which is perfect concordance (1).
double ccc(std::span<const double> pred, std::span<const double> target);

// Challenge score for valence-arousal: the mean of the two CCCs.
double score_va(double ccc_valence, double ccc_arousal);

class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(std::size_t num_classes)
      : num_classes_(num_classes), counts_(num_classes * num_classes, 0) {}

  std::size_t num_classes() const { return num_classes_; }
  std::int64_t& at(std::size_t target, std::size_t pred) {
    return counts_[target * num_classes_ + pred];
  }
  std::int64_t at(std::size_t target, std::size_t pred) const {
    return counts_[target * num_classes_ + pred];
  }
  std::int64_t total() const;

 private:
  std::size_t num_classes_;
  std::vector<std::int64_t> counts_;
};

ConfusionMatrix confusion(std::span<const int> pred, std::span<const int> target,
                          std::size_t num_classes);

// Per-class F1 with the 0/0 -> 0 convention for precision, recall, and F1.
std::vector<double> per_class_f1(const ConfusionMatrix& cm);

// Challenge score for expression recognition: mean of the 8 per-class F1s.
double score_expr(std::span<const double> per_class_f1);

// Per-column binary F1 over N x C {0,1} grids (positive class = 1).
std::vector<double> multilabel_f1(const Matrix& pred, const Matrix& target);

// Challenge score for AU detection: mean of the 12 per-AU F1s.
double score_au(std::span<const double> per_au_f1);

// Inverse-frequency weights w_c = total / (K * max(counts_c, 1)); balanced
// counts give unit weights.
std::vector<double> class_weights(std::span<const std::size_t> counts,
                                  std::size_t total);

struct MetricsReport {
  TaskKind task = TaskKind::Va;
  std::size_t scored_frames = 0;
  std::vector<double> per_class_f1;  // EXPR/AU only
  double macro_f1 = 0.0;             // EXPR/AU only
  double ccc_valence = 0.0;          // VA only
  double ccc_arousal = 0.0;          // VA only
  double challenge_score = 0.0;

  std::string to_json() const;
  std::string to_text() const;
};

// In-memory report builders; evaluate_predictions and the training harness
// both reduce to these.
MetricsReport report_va(std::span<const double> pred_valence,
                        std::span<const double> pred_arousal,
                        std::span<const double> target_valence,
                        std::span<const double> target_arousal);
MetricsReport report_expr(std::span<const int> pred, std::span<const int> target);
MetricsReport report_au(const Matrix& pred, const Matrix& target);

// Scores a prediction CSV (video_id,frame,<payload>) against the valid
// records of `gt`. Every valid ground-truth frame must be predicted.
MetricsReport evaluate_predictions(const std::filesystem::path& pred_file,
                                   const Manifest& gt, TaskKind task);

}  // namespace affkit
