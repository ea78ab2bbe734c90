#include "affkit/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <set>
#include <sstream>

#include <json.hpp>

#include "affkit/errors.hpp"
#include "affkit/rng.hpp"
#include "affkit/text.hpp"

namespace affkit {

namespace {

// Seed of the latent-to-feature embedding. Fixed so the embedding is stable
// across dataset seeds; only the samples change.
constexpr std::uint64_t kEmbeddingSeed = 0xAFFC0DE5EEDULL;
constexpr std::size_t kLatentDim = kVaDims + kAuCount;  // 14

constexpr double kPi = 3.14159265358979323846;

}  // namespace

void SyntheticConfig::validate() const {
  if (n_train < 1 || n_val < 1) {
    throw Error(ErrorCode::BadConfig, "n_train and n_val must be >= 1");
  }
  if (feature_dim < kLatentDim) {
    throw Error(ErrorCode::BadConfig,
                "feature_dim must be >= 14 to embed the latent");
  }
  if (label_noise < 0.0 || label_noise > 1.0) {
    throw Error(ErrorCode::BadConfig, "label_noise must be in [0, 1]");
  }
  if (feature_noise_std < 0.0) {
    throw Error(ErrorCode::BadConfig, "feature_noise_std must be >= 0");
  }
  if (neutral_radius <= 0.0 || neutral_radius >= 1.0) {
    throw Error(ErrorCode::BadConfig, "neutral_radius must be in (0, 1)");
  }
  if (other_prob < 0.0 || other_prob > 1.0) {
    throw Error(ErrorCode::BadConfig, "other_prob must be in [0, 1]");
  }
}

SyntheticConfig SyntheticConfig::from_json_text(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::BadConfig, std::string("invalid synthetic config: ") + e.what());
  }
  SyntheticConfig cfg;
  cfg.n_train = j.value("n_train", cfg.n_train);
  cfg.n_val = j.value("n_val", cfg.n_val);
  cfg.feature_dim = j.value("feature_dim", cfg.feature_dim);
  cfg.label_noise = j.value("label_noise", cfg.label_noise);
  cfg.feature_noise_std = j.value("feature_noise_std", cfg.feature_noise_std);
  cfg.neutral_radius = j.value("neutral_radius", cfg.neutral_radius);
  cfg.other_prob = j.value("other_prob", cfg.other_prob);
  cfg.seed = j.value("seed", cfg.seed);
  cfg.validate();
  return cfg;
}

std::string SyntheticConfig::to_json_text() const {
  nlohmann::json j;
  j["n_train"] = n_train;
  j["n_val"] = n_val;
  j["feature_dim"] = feature_dim;
  j["label_noise"] = label_noise;
  j["feature_noise_std"] = feature_noise_std;
  j["neutral_radius"] = neutral_radius;
  j["other_prob"] = other_prob;
  j["seed"] = seed;
  return j.dump(2);
}

Matrix au_directions() {
  Matrix directions(kAuCount, 2);
  for (std::size_t k = 0; k < kAuCount; ++k) {
    const double angle = static_cast<double>(k) * kPi / 6.0;
    directions(k, 0) = std::cos(angle);
    directions(k, 1) = std::sin(angle);
  }
  return directions;
}

int expr_class_for(double valence, double arousal, double neutral_radius) {
  const double radius = std::hypot(valence, arousal);
  if (radius < neutral_radius) return 0;  // Neutral
  double angle = std::atan2(arousal, valence);
  if (angle < 0.0) angle += 2.0 * kPi;
  const double sector_width = kPi / 3.0;
  int sector = static_cast<int>(angle / sector_width);
  if (sector > 5) sector = 5;
  if (sector > 0 && angle == static_cast<double>(sector) * sector_width) {
    --sector;  // boundary angles belong to the lower sector
  }
  // Sector order starting at the positive-valence axis, counterclockwise:
  // Happiness, Surprise, Fear, Anger, Sadness, Disgust.
  static constexpr int kSectorClass[6] = {4, 6, 3, 1, 5, 2};
  return kSectorClass[sector];
}

SyntheticData generate_synthetic(const SyntheticConfig& cfg) {
  cfg.validate();

  Matrix embedding(cfg.feature_dim, kLatentDim);
  {
    Rng embed_rng(kEmbeddingSeed);
    const double scale = 1.0 / std::sqrt(static_cast<double>(kLatentDim));
    for (double& w : embedding.data()) {
      w = embed_rng.normal() * scale;
    }
  }
  const Matrix directions = au_directions();

  Rng rng(cfg.seed);
  auto generate_split = [&](std::size_t n) {
    Dataset set;
    set.features = Matrix(n, cfg.feature_dim);
    set.expr.resize(n);
    set.au = Matrix(n, kAuCount);
    set.va = Matrix(n, kVaDims);
    std::vector<double> latent(kLatentDim, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const double radius = std::sqrt(rng.uniform());
      const double angle = 2.0 * kPi * rng.uniform();
      const double v = radius * std::cos(angle);
      const double a = radius * std::sin(angle);
      set.va(i, 0) = v;
      set.va(i, 1) = a;

      int expr_label = expr_class_for(v, a, cfg.neutral_radius);
      const double u_other = rng.uniform();
      if (expr_label != 0 && u_other < cfg.other_prob) {
        expr_label = static_cast<int>(kExprClassCount) - 1;  // Other
      }

      latent[0] = v;
      latent[1] = a;
      for (std::size_t k = 0; k < kAuCount; ++k) {
        const double projection =
            directions(k, 0) * v + directions(k, 1) * a + kAuOffset;
        const double au_true = projection > 0.0 ? 1.0 : 0.0;
        latent[2 + k] = au_true;
        double au_label = au_true;
        if (rng.uniform() < cfg.label_noise) au_label = 1.0 - au_label;
        set.au(i, k) = au_label;
      }
      if (rng.uniform() < cfg.label_noise) {
        expr_label = static_cast<int>(rng.uniform_index(kExprClassCount));
      }
      set.expr[i] = expr_label;

      auto feature_row = set.features.row(i);
      for (std::size_t d = 0; d < cfg.feature_dim; ++d) {
        double value = 0.0;
        for (std::size_t l = 0; l < kLatentDim; ++l) {
          value += embedding(d, l) * latent[l];
        }
        if (cfg.feature_noise_std > 0.0) {
          value += rng.normal() * cfg.feature_noise_std;
        }
        feature_row[d] = value;
      }
    }
    return set;
  };

  SyntheticData data;
  data.train = generate_split(cfg.n_train);
  data.val = generate_split(cfg.n_val);
  return data;
}

std::string Dataset::to_csv() const {
  const std::size_t dim = features.cols();
  std::string out = "sample_id";
  for (std::size_t d = 0; d < dim; ++d) {
    out += ",f_" + std::to_string(d);
  }
  out += ",valence,arousal,expr";
  for (std::size_t k = 1; k <= kAuCount; ++k) {
    out += ",au_" + std::to_string(k);
  }
  out += '\n';
  for (std::size_t i = 0; i < size(); ++i) {
    out += std::to_string(i);
    for (std::size_t d = 0; d < dim; ++d) {
      out += ',';
      out += format_double(features(i, d));
    }
    out += ',';
    out += format_double(va(i, 0));
    out += ',';
    out += format_double(va(i, 1));
    out += ',';
    out += std::to_string(expr[i]);
    for (std::size_t k = 0; k < kAuCount; ++k) {
      out += ',';
      out += std::to_string(static_cast<int>(au(i, k)));
    }
    out += '\n';
  }
  return out;
}

Dataset Dataset::from_csv(const std::string& text) {
  auto lines = split_lines(text);
  if (lines.empty() || !trim(lines[0]).starts_with("sample_id")) {
    throw ParseError(ErrorCode::MissingHeader, 1,
                     "missing header: expected \"sample_id,f_0,...\"");
  }
  const std::size_t header_fields = split(lines[0], ',').size();
  if (header_fields < 1 + kLatentDim + 3) {
    throw ParseError(ErrorCode::WrongArity, 1, "header has too few columns");
  }
  const std::size_t dim = header_fields - 4 - kAuCount;
  const std::size_t n = lines.size() - 1;

  Dataset set;
  set.features = Matrix(n, dim);
  set.expr.resize(n);
  set.au = Matrix(n, kAuCount);
  set.va = Matrix(n, kVaDims);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t line_no = i + 2;
    auto fields = split(lines[i + 1], ',');
    if (fields.size() != header_fields) {
      throw ParseError(ErrorCode::WrongArity, line_no,
                       "row width does not match the header");
    }
    auto number = [&](std::size_t idx) {
      auto value = parse_double(fields[idx]);
      if (!value) {
        throw ParseError(ErrorCode::MalformedRow, line_no, "non-numeric field");
      }
      return *value;
    };
    for (std::size_t d = 0; d < dim; ++d) {
      set.features(i, d) = number(1 + d);
    }
    set.va(i, 0) = number(1 + dim);
    set.va(i, 1) = number(2 + dim);
    auto expr_value = parse_int(fields[3 + dim]);
    if (!expr_value || *expr_value < 0 ||
        *expr_value >= static_cast<long long>(kExprClassCount)) {
      throw ParseError(ErrorCode::OutOfRange, line_no, "expr class out of range");
    }
    set.expr[i] = static_cast<int>(*expr_value);
    for (std::size_t k = 0; k < kAuCount; ++k) {
      const double value = number(4 + dim + k);
      if (value != 0.0 && value != 1.0) {
        throw ParseError(ErrorCode::OutOfRange, line_no, "au flags must be 0 or 1");
      }
      set.au(i, k) = value;
    }
  }
  return set;
}

std::vector<std::string> preset_names() {
  return {"va-uni", "expr-uni", "au-uni", "mtl"};
}

ExperimentPreset make_preset(const std::string& name) {
  ExperimentPreset preset;
  preset.name = name;
  preset.model.trunk_dims = {64};
  preset.model.use_batchnorm = true;
  preset.train.batch_size = 64;
  preset.train.epochs = 200;
  preset.train.seed = 42;
  if (name == "va-uni") {
    preset.train.optimizer = OptimizerKind::Adam;
    preset.train.learning_rate = 1e-3;
    preset.train.scheduler = PlateauConfig{};
    preset.train.lambda_va = 1.0;
  } else if (name == "expr-uni") {
    preset.train.optimizer = OptimizerKind::Sgd;
    preset.train.learning_rate = 0.05;
    preset.train.momentum = 0.9;
    preset.train.lambda_expr = 1.0;
    preset.weight_expr_classes = true;
  } else if (name == "au-uni") {
    preset.train.optimizer = OptimizerKind::Adam;
    preset.train.learning_rate = 1e-3;
    preset.train.scheduler = PlateauConfig{};
    preset.train.lambda_au = 1.0;
    preset.train.au_loss = AuLossKind::WeightedBce;
    preset.weight_au_positives = true;
  } else if (name == "mtl") {
    preset.train.optimizer = OptimizerKind::Adam;
    preset.train.learning_rate = 1e-3;
    preset.train.lambda_expr = 1.0;
    preset.train.lambda_au = 1.0;
    preset.train.lambda_va = 1.0;
    preset.train.au_loss = AuLossKind::Mse;
  } else {
    throw Error(ErrorCode::BadConfig, "unknown preset: " + name);
  }
  return preset;
}

std::string epochs_to_csv(const std::vector<EpochRow>& epochs) {
  std::string out =
      "epoch,train_loss_expr,train_loss_au,train_loss_va,"
      "val_loss_expr,val_loss_au,val_loss_va,lr\n";
  for (const auto& row : epochs) {
    out += std::to_string(row.epoch);
    for (double value : {row.train_expr, row.train_au, row.train_va, row.val_expr,
                         row.val_au, row.val_va, row.lr}) {
      out += ',';
      out += format_double(value);
    }
    out += '\n';
  }
  return out;
}

namespace {

struct TaskLossAccumulator {
  double expr_sum = 0.0;
  double au_sum = 0.0;
  double va_sum = 0.0;
  double count = 0.0;

  void add(const CombinedLoss& loss, std::size_t batch_size) {
    const double n = static_cast<double>(batch_size);
    expr_sum += loss.expr_loss * n;
    au_sum += loss.au_loss * n;
    va_sum += loss.va_loss * n;
    count += n;
  }
  double expr() const { return count == 0.0 ? 0.0 : expr_sum / count; }
  double au() const { return count == 0.0 ? 0.0 : au_sum / count; }
  double va() const { return count == 0.0 ? 0.0 : va_sum / count; }
};

Matrix gather_features(const Dataset& set, std::span<const std::size_t> idx) {
  Matrix batch(idx.size(), set.features.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    auto src = set.features.row(idx[i]);
    std::copy(src.begin(), src.end(), batch.row(i).begin());
  }
  return batch;
}

MultiTaskLabels gather_labels(const Dataset& set, std::span<const std::size_t> idx) {
  MultiTaskLabels labels;
  const std::size_t n = idx.size();
  labels.expr.resize(n);
  labels.au = Matrix(n, kAuCount);
  labels.va = Matrix(n, kVaDims);
  labels.expr_mask.assign(n, 1);
  labels.au_mask.assign(n, 1);
  labels.va_mask.assign(n, 1);
  for (std::size_t i = 0; i < n; ++i) {
    labels.expr[i] = set.expr[idx[i]];
    auto au_src = set.au.row(idx[i]);
    std::copy(au_src.begin(), au_src.end(), labels.au.row(i).begin());
    auto va_src = set.va.row(idx[i]);
    std::copy(va_src.begin(), va_src.end(), labels.va.row(i).begin());
  }
  return labels;
}

std::vector<std::size_t> iota_indices(std::size_t n) {
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  return idx;
}

}  // namespace

PresetResult run_preset(const ExperimentPreset& preset, const SyntheticData& data,
                        double subset_fraction) {
  const auto start = std::chrono::steady_clock::now();
  if (subset_fraction > 1.0) {
    throw Error(ErrorCode::BadConfig, "subset_fraction must be in (0, 1]");
  }
  const std::size_t n_train = data.train.size();
  const std::size_t n_subset = !(subset_fraction > 0.0)
                                   ? 0
                                   : static_cast<std::size_t>(
                                         std::llround(subset_fraction *
                                                      static_cast<double>(n_train)));
  if (n_subset == 0) {
    throw Error(ErrorCode::EmptySubset, "subset of the training split is empty");
  }

  TrainConfig cfg = preset.train;
  ModelSpec spec = preset.model;
  spec.input_dim = data.train.features.cols();
  cfg.validate();
  spec.validate();

  Rng rng(cfg.seed);
  std::vector<std::size_t> subset = rng.sample_without_replacement(n_subset, n_train);

  if (preset.weight_expr_classes) {
    std::array<std::size_t, kExprClassCount> counts{};
    for (auto i : subset) ++counts[static_cast<std::size_t>(data.train.expr[i])];
    cfg.expr_class_weights = class_weights(counts, subset.size());
  }
  if (preset.weight_au_positives) {
    std::array<std::size_t, kAuCount> positives{};
    for (auto i : subset) {
      for (std::size_t k = 0; k < kAuCount; ++k) {
        if (data.train.au(i, k) == 1.0) ++positives[k];
      }
    }
    cfg.au_pos_weights = class_weights(positives, subset.size());
  }

  ModelParams params = init_params(spec, cfg.seed);
  OptimizerState opt_state = init_optimizer_state(params);
  double lr = cfg.learning_rate;
  std::optional<PlateauScheduler> scheduler;
  if (cfg.scheduler) {
    scheduler.emplace(*cfg.scheduler, lr);
  }

  PresetResult result;
  result.preset = preset.name;
  std::vector<std::size_t> order = subset;
  const auto val_indices = iota_indices(data.val.size());

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    rng.shuffle(order);
    TaskLossAccumulator train_losses;
    for (std::size_t begin = 0; begin < order.size(); begin += cfg.batch_size) {
      const std::size_t end = std::min(begin + cfg.batch_size, order.size());
      const std::size_t batch_size = end - begin;
      if (spec.use_batchnorm && batch_size < 2) continue;  // trailing singleton
      std::span<const std::size_t> idx(order.data() + begin, batch_size);
      Matrix batch = gather_features(data.train, idx);
      MultiTaskLabels labels = gather_labels(data.train, idx);

      ForwardCache cache;
      TaskOutputs outputs = forward(params, batch, RunMode::Train, &cache);
      update_running_stats(params, cache);
      CombinedLoss loss = combined_loss(outputs, labels, cfg);
      ParamGrads grads = backward(params, cache, loss.head_grads);
      optimizer_step(params, grads, cfg, opt_state, lr);
      train_losses.add(loss, batch_size);
    }

    TaskLossAccumulator val_losses;
    for (std::size_t begin = 0; begin < val_indices.size(); begin += cfg.batch_size) {
      const std::size_t end = std::min(begin + cfg.batch_size, val_indices.size());
      std::span<const std::size_t> idx(val_indices.data() + begin, end - begin);
      Matrix batch = gather_features(data.val, idx);
      MultiTaskLabels labels = gather_labels(data.val, idx);
      TaskOutputs outputs = forward(params, batch, RunMode::Eval);
      val_losses.add(combined_loss(outputs, labels, cfg), idx.size());
    }

    EpochRow row;
    row.epoch = epoch;
    row.train_expr = train_losses.expr();
    row.train_au = train_losses.au();
    row.train_va = train_losses.va();
    row.val_expr = val_losses.expr();
    row.val_au = val_losses.au();
    row.val_va = val_losses.va();
    row.lr = lr;
    result.epochs.push_back(row);

    if (scheduler) {
      const double monitored = cfg.lambda_expr * row.val_expr +
                               cfg.lambda_au * row.val_au +
                               cfg.lambda_va * row.val_va;
      lr = scheduler->step(monitored);
    }
  }

  // Final held-out predictions, challenge-scored by the metrics module.
  const std::size_t n_val = data.val.size();
  std::vector<int> expr_pred(n_val);
  Matrix au_pred(n_val, kAuCount);
  std::vector<double> va_pred_v(n_val), va_pred_a(n_val);
  for (std::size_t begin = 0; begin < n_val; begin += cfg.batch_size) {
    const std::size_t end = std::min(begin + cfg.batch_size, n_val);
    std::span<const std::size_t> idx(val_indices.data() + begin, end - begin);
    Matrix batch = gather_features(data.val, idx);
    TaskOutputs outputs = forward(params, batch, RunMode::Eval);
    for (std::size_t i = 0; i < idx.size(); ++i) {
      const std::size_t sample = begin + i;
      auto logits = outputs.expr_logits.row(i);
      expr_pred[sample] = static_cast<int>(
          std::max_element(logits.begin(), logits.end()) - logits.begin());
      for (std::size_t k = 0; k < kAuCount; ++k) {
        const double score = outputs.au_logits(i, k);
        au_pred(sample, k) = (cfg.au_loss == AuLossKind::WeightedBce
                                  ? score > 0.0
                                  : score >= 0.5)
                                 ? 1.0
                                 : 0.0;
      }
      // Regression outputs are unbounded; clamp only at report time.
      va_pred_v[sample] = std::clamp(outputs.va_pred(i, 0), -1.0, 1.0);
      va_pred_a[sample] = std::clamp(outputs.va_pred(i, 1), -1.0, 1.0);
    }
  }

  if (cfg.lambda_expr > 0.0) {
    result.reports[TaskKind::Expr] = report_expr(expr_pred, data.val.expr);
  }
  if (cfg.lambda_au > 0.0) {
    result.reports[TaskKind::Au] = report_au(au_pred, data.val.au);
  }
  if (cfg.lambda_va > 0.0) {
    std::vector<double> target_v(n_val), target_a(n_val);
    for (std::size_t i = 0; i < n_val; ++i) {
      target_v[i] = data.val.va(i, 0);
      target_a[i] = data.val.va(i, 1);
    }
    result.reports[TaskKind::Va] = report_va(va_pred_v, va_pred_a, target_v, target_a);
  }

  result.checkpoint = Checkpoint{std::move(params), std::move(opt_state), cfg.epochs};
  result.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

namespace {

nlohmann::json preset_report_json(const PresetResult& result) {
  nlohmann::json reports;
  for (const auto& [task, report] : result.reports) {
    reports[std::string(task_name(task))] = nlohmann::json::parse(report.to_json());
  }
  nlohmann::json j;
  j["preset"] = result.preset;
  j["reports"] = reports;
  return j;
}

}  // namespace

ComparisonReport compare(std::vector<PresetResult> results) {
  if (results.size() < 2) {
    throw Error(ErrorCode::BadConfig, "compare requires at least 2 preset results");
  }
  ComparisonReport report;
  report.presets = std::move(results);
  return report;
}

std::string ComparisonReport::to_json() const {
  nlohmann::json j;
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& result : presets) {
    nlohmann::json entry;
    entry["preset"] = result.preset;
    entry["wall_seconds"] = result.wall_seconds;
    entry["epochs_csv"] = result.preset + "/epochs.csv";
    nlohmann::json scores;
    for (TaskKind task : {TaskKind::Va, TaskKind::Expr, TaskKind::Au}) {
      auto it = result.reports.find(task);
      if (it != result.reports.end()) {
        scores[std::string(task_name(task))] = it->second.challenge_score;
      }
    }
    entry["scores"] = scores;
    entries.push_back(entry);
  }
  j["presets"] = entries;

  nlohmann::json best;
  for (TaskKind task : {TaskKind::Va, TaskKind::Expr, TaskKind::Au}) {
    const PresetResult* winner = nullptr;
    for (const auto& result : presets) {
      auto it = result.reports.find(task);
      if (it == result.reports.end()) continue;
      if (!winner ||
          it->second.challenge_score >
              winner->reports.at(task).challenge_score) {
        winner = &result;
      }
    }
    if (winner) best[std::string(task_name(task))] = winner->preset;
  }
  j["best"] = best;
  return j.dump(2);
}

std::string ComparisonReport::to_text() const {
  auto cell = [](const std::string& text, std::size_t width) {
    std::string out = text;
    if (out.size() < width) out += std::string(width - out.size(), ' ');
    return out;
  };
  std::ostringstream out;
  out << cell("Preset", 12) << cell("P_VA", 10) << cell("P_EXPR", 10)
      << cell("P_AU", 10) << "Wall(s)\n";
  for (const auto& result : presets) {
    out << cell(result.preset, 12);
    for (TaskKind task : {TaskKind::Va, TaskKind::Expr, TaskKind::Au}) {
      auto it = result.reports.find(task);
      out << cell(it == result.reports.end() ? "-"
                                             : format_fixed(it->second.challenge_score, 4),
                  10);
    }
    out << format_fixed(result.wall_seconds, 2) << "\n";
  }
  out << cell("best", 12);
  for (TaskKind task : {TaskKind::Va, TaskKind::Expr, TaskKind::Au}) {
    const PresetResult* winner = nullptr;
    for (const auto& result : presets) {
      auto it = result.reports.find(task);
      if (it == result.reports.end()) continue;
      if (!winner ||
          it->second.challenge_score > winner->reports.at(task).challenge_score) {
        winner = &result;
      }
    }
    out << cell(winner ? winner->preset : "-", 10);
  }
  out << "\n";
  return out.str();
}

void write_preset_outputs(const PresetResult& result,
                          const std::filesystem::path& preset_dir) {
  std::filesystem::create_directories(preset_dir);
  write_text_file(preset_dir / "epochs.csv", epochs_to_csv(result.epochs));
  write_text_file(preset_dir / "report.json", preset_report_json(result).dump(2) + "\n");
  save_checkpoint(preset_dir / "model.ckpt", result.checkpoint);
}

ComparisonReport run_comparison(const std::vector<std::string>& names,
                                const SyntheticConfig& cfg, double subset_fraction,
                                const std::filesystem::path& out_dir,
                                std::optional<std::size_t> epochs_override) {
  if (names.size() < 2) {
    throw Error(ErrorCode::BadConfig, "compare requires at least 2 presets");
  }
  std::set<std::string> unique(names.begin(), names.end());
  if (unique.size() != names.size()) {
    throw Error(ErrorCode::BadConfig, "preset list contains duplicates");
  }
  const SyntheticData data = generate_synthetic(cfg);
  std::vector<PresetResult> results;
  for (const auto& name : names) {
    ExperimentPreset preset = make_preset(name);
    if (epochs_override) preset.train.epochs = *epochs_override;
    PresetResult result = run_preset(preset, data, subset_fraction);
    write_preset_outputs(result, out_dir / name);
    results.push_back(std::move(result));
  }
  ComparisonReport report = compare(std::move(results));
  write_text_file(out_dir / "comparison.json", report.to_json() + "\n");
  write_text_file(out_dir / "comparison.txt", report.to_text());
  return report;
}

SyntheticConfig reference_convergence_config() {
  SyntheticConfig cfg;
  cfg.n_train = 4096;
  cfg.n_val = 1024;
  cfg.feature_dim = 32;
  cfg.label_noise = 0.0;
  cfg.feature_noise_std = 0.02;
  cfg.neutral_radius = 0.25;
  cfg.other_prob = 0.0;
  cfg.seed = 42;
  return cfg;
}

ExperimentPreset reference_convergence_preset() {
  return make_preset("mtl");
}

}  // namespace affkit
