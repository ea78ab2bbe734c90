#include "affkit/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

#include "affkit/errors.hpp"
#include "affkit/text.hpp"

namespace affkit {

namespace {

void require_pair(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) {
    throw Error(ErrorCode::LengthMismatch,
                "sequence lengths differ: " + std::to_string(x.size()) + " vs " +
                    std::to_string(y.size()));
  }
  if (x.size() < 2) {
    throw Error(ErrorCode::TooFewSamples, "need at least 2 samples");
  }
}

double mean_of(std::span<const double> x) {
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

}  // namespace

double pearson(std::span<const double> x, std::span<const double> y) {
  require_pair(x, y);
  const double mx = mean_of(x);
  const double my = mean_of(y);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double ccc(std::span<const double> pred, std::span<const double> target) {
  require_pair(pred, target);
  const double n = static_cast<double>(pred.size());
  const double mp = mean_of(pred);
  const double mt = mean_of(target);
  double cov = 0.0, var_p = 0.0, var_t = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double dp = pred[i] - mp;
    const double dt = target[i] - mt;
    cov += dp * dt;
    var_p += dp * dp;
    var_t += dt * dt;
  }
  cov /= n;
  var_p /= n;
  var_t /= n;
  const double mean_gap = mp - mt;
  const double denom = var_p + var_t + mean_gap * mean_gap;
  if (denom == 0.0) {
    // Both sequences are the same constant.
    return 1.0;
  }
  return std::clamp(2.0 * cov / denom, -1.0, 1.0);
}

double score_va(double ccc_valence, double ccc_arousal) {
  return (ccc_valence + ccc_arousal) / 2.0;
}

std::int64_t ConfusionMatrix::total() const {
  return std::accumulate(counts_.begin(), counts_.end(), std::int64_t{0});
}

ConfusionMatrix confusion(std::span<const int> pred, std::span<const int> target,
                          std::size_t num_classes) {
  if (pred.size() != target.size()) {
    throw Error(ErrorCode::LengthMismatch,
                "prediction and target lengths differ: " + std::to_string(pred.size()) +
                    " vs " + std::to_string(target.size()));
  }
  ConfusionMatrix cm(num_classes);
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (pred[i] < 0 || pred[i] >= static_cast<int>(num_classes) || target[i] < 0 ||
        target[i] >= static_cast<int>(num_classes)) {
      throw Error(ErrorCode::ClassOutOfRange,
                  "class id out of range at sample " + std::to_string(i));
    }
    ++cm.at(static_cast<std::size_t>(target[i]), static_cast<std::size_t>(pred[i]));
  }
  return cm;
}

namespace {

double binary_f1(std::int64_t tp, std::int64_t fp, std::int64_t fn) {
  const double precision = (tp + fp) == 0 ? 0.0
                                          : static_cast<double>(tp) /
                                                static_cast<double>(tp + fp);
  const double recall = (tp + fn) == 0 ? 0.0
                                       : static_cast<double>(tp) /
                                             static_cast<double>(tp + fn);
  if (precision + recall == 0.0) return 0.0;
  return 2.0 * precision * recall / (precision + recall);
}

}  // namespace

std::vector<double> per_class_f1(const ConfusionMatrix& cm) {
  const std::size_t k = cm.num_classes();
  std::vector<double> f1(k, 0.0);
  for (std::size_t c = 0; c < k; ++c) {
    const std::int64_t tp = cm.at(c, c);
    std::int64_t fp = 0, fn = 0;
    for (std::size_t other = 0; other < k; ++other) {
      if (other == c) continue;
      fp += cm.at(other, c);
      fn += cm.at(c, other);
    }
    f1[c] = binary_f1(tp, fp, fn);
  }
  return f1;
}

namespace {

double mean_with_arity(std::span<const double> values, std::size_t arity,
                       const char* what) {
  if (values.size() != arity) {
    throw Error(ErrorCode::WrongArity, std::string(what) + ": expected " +
                                           std::to_string(arity) + " values, got " +
                                           std::to_string(values.size()));
  }
  return mean_of(values);
}

}  // namespace

double score_expr(std::span<const double> per_class_f1) {
  return mean_with_arity(per_class_f1, kExprClassCount, "score_expr");
}

std::vector<double> multilabel_f1(const Matrix& pred, const Matrix& target) {
  if (pred.rows() != target.rows() || pred.cols() != target.cols()) {
    throw Error(ErrorCode::ShapeMismatch, "multilabel_f1: grids have different shapes");
  }
  const std::size_t cols = pred.cols();
  std::vector<double> f1(cols, 0.0);
  for (std::size_t c = 0; c < cols; ++c) {
    std::int64_t tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < pred.rows(); ++i) {
      const double p = pred(i, c);
      const double t = target(i, c);
      if ((p != 0.0 && p != 1.0) || (t != 0.0 && t != 1.0)) {
        throw Error(ErrorCode::OutOfRange, "multilabel_f1: entries must be 0 or 1");
      }
      if (p == 1.0 && t == 1.0) ++tp;
      else if (p == 1.0 && t == 0.0) ++fp;
      else if (p == 0.0 && t == 1.0) ++fn;
    }
    f1[c] = binary_f1(tp, fp, fn);
  }
  return f1;
}

double score_au(std::span<const double> per_au_f1) {
  return mean_with_arity(per_au_f1, kAuCount, "score_au");
}

std::vector<double> class_weights(std::span<const std::size_t> counts,
                                  std::size_t total) {
  const double k = static_cast<double>(counts.size());
  std::vector<double> weights(counts.size(), 0.0);
  for (std::size_t c = 0; c < counts.size(); ++c) {
    weights[c] = static_cast<double>(total) /
                 (k * static_cast<double>(std::max<std::size_t>(counts[c], 1)));
  }
  return weights;
}

MetricsReport report_va(std::span<const double> pred_valence,
                        std::span<const double> pred_arousal,
                        std::span<const double> target_valence,
                        std::span<const double> target_arousal) {
  MetricsReport report;
  report.task = TaskKind::Va;
  report.scored_frames = pred_valence.size();
  report.ccc_valence = ccc(pred_valence, target_valence);
  report.ccc_arousal = ccc(pred_arousal, target_arousal);
  report.challenge_score = score_va(report.ccc_valence, report.ccc_arousal);
  return report;
}

MetricsReport report_expr(std::span<const int> pred, std::span<const int> target) {
  MetricsReport report;
  report.task = TaskKind::Expr;
  report.scored_frames = pred.size();
  report.per_class_f1 = per_class_f1(confusion(pred, target, kExprClassCount));
  report.macro_f1 = score_expr(report.per_class_f1);
  report.challenge_score = report.macro_f1;
  return report;
}

MetricsReport report_au(const Matrix& pred, const Matrix& target) {
  if (pred.cols() != kAuCount) {
    throw Error(ErrorCode::ShapeMismatch, "report_au: expected 12 columns");
  }
  MetricsReport report;
  report.task = TaskKind::Au;
  report.scored_frames = pred.rows();
  report.per_class_f1 = multilabel_f1(pred, target);
  report.macro_f1 = score_au(report.per_class_f1);
  report.challenge_score = report.macro_f1;
  return report;
}

std::string MetricsReport::to_json() const {
  nlohmann::json j;
  j["task"] = std::string(task_name(task));
  j["scored_frames"] = scored_frames;
  j["challenge_score"] = challenge_score;
  if (task == TaskKind::Va) {
    j["ccc_valence"] = ccc_valence;
    j["ccc_arousal"] = ccc_arousal;
  } else {
    nlohmann::json f1;
    const auto names = task == TaskKind::Expr
                           ? std::span<const std::string_view>(kExprClassNames)
                           : std::span<const std::string_view>(kAuNames);
    for (std::size_t i = 0; i < per_class_f1.size(); ++i) {
      f1[std::string(names[i])] = per_class_f1[i];
    }
    j["per_class_f1"] = f1;
    j["macro_f1"] = macro_f1;
  }
  return j.dump(2);
}

std::string MetricsReport::to_text() const {
  std::ostringstream out;
  if (task == TaskKind::Va) {
    out << "Metric         Value\n";
    out << "CCC Valence    " << format_fixed(ccc_valence, 4) << "\n";
    out << "CCC Arousal    " << format_fixed(ccc_arousal, 4) << "\n";
    out << "Average        " << format_fixed(challenge_score, 4) << "\n";
    return out.str();
  }
  const bool expr = task == TaskKind::Expr;
  out << (expr ? "Emotion        F1 Score\n" : "Action Unit    F1 Score\n");
  const auto names = expr ? std::span<const std::string_view>(kExprClassNames)
                          : std::span<const std::string_view>(kAuNames);
  for (std::size_t i = 0; i < per_class_f1.size(); ++i) {
    out << names[i] << std::string(15 - names[i].size(), ' ')
        << format_fixed(per_class_f1[i], 4) << "\n";
  }
  out << "Average        " << format_fixed(macro_f1, 4) << "\n";
  return out.str();
}

namespace {

struct PredictionRow {
  VaLabel va;
  ExprLabel expr;
  AuLabel au;
};

std::string pred_key(std::string_view video_id, int frame) {
  return std::string(video_id) + '\x1f' + std::to_string(frame);
}

}  // namespace

MetricsReport evaluate_predictions(const std::filesystem::path& pred_file,
                                   const Manifest& gt, TaskKind task) {
  if (gt.task.has_value() && *gt.task != task) {
    throw Error(ErrorCode::BadConfig,
                "ground-truth manifest task does not match the requested task");
  }
  const std::string text = read_text_file(pred_file);
  auto lines = split_lines(text);
  if (lines.empty() || !to_lower(trim(lines[0])).starts_with("video_id")) {
    throw ParseError(ErrorCode::MalformedPredictionRow, 1,
                     "missing prediction header: expected \"video_id,frame,...\"",
                     pred_file.filename().string());
  }
  const std::size_t payload_fields =
      task == TaskKind::Va ? 2 : (task == TaskKind::Expr ? 1 : kAuCount);

  std::unordered_map<std::string, PredictionRow> rows;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const std::size_t line_no = i + 1;
    auto fields = split(lines[i], ',');
    if (fields.size() != payload_fields + 2) {
      throw ParseError(ErrorCode::MalformedPredictionRow, line_no,
                       "malformed prediction row: expected " +
                           std::to_string(payload_fields + 2) + " fields, got " +
                           std::to_string(fields.size()),
                       pred_file.filename().string());
    }
    auto fail = [&](const std::string& why) -> ParseError {
      return ParseError(ErrorCode::MalformedPredictionRow, line_no,
                        "malformed prediction row: " + why,
                        pred_file.filename().string());
    };
    const std::string video(trim(fields[0]));
    auto frame = parse_int(fields[1]);
    if (video.empty() || !frame || *frame < 1) {
      throw fail("bad (video_id, frame) key");
    }
    PredictionRow row;
    switch (task) {
      case TaskKind::Va: {
        auto v = parse_double(fields[2]);
        auto a = parse_double(fields[3]);
        if (!v || !a || !std::isfinite(*v) || !std::isfinite(*a)) {
          throw fail("expected two finite reals");
        }
        row.va = {*v, *a};
        break;
      }
      case TaskKind::Expr: {
        auto c = parse_int(fields[2]);
        if (!c || *c < 0 || *c >= static_cast<long long>(kExprClassCount)) {
          throw fail("expected a class id in 0..7");
        }
        row.expr = {static_cast<int>(*c)};
        break;
      }
      case TaskKind::Au: {
        for (std::size_t k = 0; k < kAuCount; ++k) {
          auto b = parse_int(fields[2 + k]);
          if (!b || (*b != 0 && *b != 1)) {
            throw fail("expected 12 binary fields");
          }
          row.au.activations[k] = static_cast<std::int8_t>(*b);
        }
        break;
      }
    }
    if (!rows.emplace(pred_key(video, static_cast<int>(*frame)), row).second) {
      throw fail("duplicate prediction for " + video + " frame " +
                 std::to_string(*frame));
    }
  }

  std::vector<double> pv, pa, tv, ta;
  std::vector<int> pe, te;
  std::vector<const PredictionRow*> au_rows;
  std::vector<const AuLabel*> au_targets;
  for (const auto& record : gt.records) {
    if (!record.valid) continue;
    auto it = rows.find(pred_key(record.video_id, record.frame_index));
    if (it == rows.end()) {
      throw Error(ErrorCode::MissingPrediction,
                  "missing prediction for video " + record.video_id + " frame " +
                      std::to_string(record.frame_index));
    }
    switch (task) {
      case TaskKind::Va:
        pv.push_back(it->second.va.valence);
        pa.push_back(it->second.va.arousal);
        tv.push_back(record.va->valence);
        ta.push_back(record.va->arousal);
        break;
      case TaskKind::Expr:
        pe.push_back(it->second.expr.class_id);
        te.push_back(record.expr->class_id);
        break;
      case TaskKind::Au:
        au_rows.push_back(&it->second);
        au_targets.push_back(&*record.au);
        break;
    }
  }

  switch (task) {
    case TaskKind::Va:
      return report_va(pv, pa, tv, ta);
    case TaskKind::Expr:
      return report_expr(pe, te);
    case TaskKind::Au: {
      Matrix pred(au_rows.size(), kAuCount);
      Matrix target(au_rows.size(), kAuCount);
      for (std::size_t i = 0; i < au_rows.size(); ++i) {
        for (std::size_t k = 0; k < kAuCount; ++k) {
          pred(i, k) = au_rows[i]->au.activations[k];
          target(i, k) = au_targets[i]->activations[k];
        }
      }
      return report_au(pred, target);
    }
  }
  throw Error(ErrorCode::BadConfig, "unknown task");
}

}  // namespace affkit
