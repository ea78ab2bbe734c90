#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "affkit/matrix.hpp"
#include "affkit/metrics.hpp"
#include "affkit/net.hpp"
#include "affkit/tasks.hpp"

namespace affkit {

// Desk-scale synthetic stand-in for the real corpus. Labels are tied to a
// shared 2-d latent (valence, arousal) drawn uniformly on the unit disc:
// expression by radius/angular sector, AUs by fixed half-plane thresholds,
// features by a fixed linear embedding of the 14-d latent plus noise.
struct SyntheticConfig {
  std::size_t n_train = 4096;
  std::size_t n_val = 1024;
  std::size_t feature_dim = 32;
  double label_noise = 0.0;
  double feature_noise_std = 0.02;
  double neutral_radius = 0.25;
  double other_prob = 0.0;
  std::uint64_t seed = 42;

  void validate() const;
  static SyntheticConfig from_json_text(const std::string& text);
  std::string to_json_text() const;
};

struct Dataset {
  Matrix features;        // N x D
  std::vector<int> expr;  // N class ids
  Matrix au;              // N x 12 in {0,1}
  Matrix va;              // N x 2

  std::size_t size() const { return features.rows(); }

  // CSV round-trip: sample_id,f_0..f_{D-1},valence,arousal,expr,au_1..au_12.
  std::string to_csv() const;
  static Dataset from_csv(const std::string& text);
};

struct SyntheticData {
  Dataset train;
  Dataset val;
};

// Fixed AU generation rule: AU k fires iff w_k . (v, a) + kAuOffset > 0,
// where w_k is the k-th row of au_directions().
Matrix au_directions();  // 12 x 2, unit directions at 30 degree increments
inline constexpr double kAuOffset = -0.1;

// Sector rule for expression labels; exact boundary angles fall into the
// lower-index sector.
int expr_class_for(double valence, double arousal, double neutral_radius);

SyntheticData generate_synthetic(const SyntheticConfig& cfg);

// One of the four training recipes. `model.input_dim` is filled in from the
// data by run_preset; class/positive weights marked here are computed from
// the sampled training subset.
struct ExperimentPreset {
  std::string name;
  ModelSpec model;
  TrainConfig train;
  bool weight_expr_classes = false;
  bool weight_au_positives = false;
};

std::vector<std::string> preset_names();
ExperimentPreset make_preset(const std::string& name);

struct EpochRow {
  std::size_t epoch = 0;
  double train_expr = 0.0;
  double train_au = 0.0;
  double train_va = 0.0;
  double val_expr = 0.0;
  double val_au = 0.0;
  double val_va = 0.0;
  double lr = 0.0;
};

struct PresetResult {
  std::string preset;
  std::map<TaskKind, MetricsReport> reports;  // one per task with lambda > 0
  std::vector<EpochRow> epochs;
  Checkpoint checkpoint;  // final model + optimizer state
  double wall_seconds = 0.0;
};

// epoch,train_loss_expr,train_loss_au,train_loss_va,val_loss_expr,...,lr
std::string epochs_to_csv(const std::vector<EpochRow>& epochs);

// Deterministic end-to-end run: seeded subsampling of the train split,
// per-epoch validation, final challenge scores from the metrics module.
PresetResult run_preset(const ExperimentPreset& preset, const SyntheticData& data,
                        double subset_fraction = 1.0);

struct ComparisonReport {
  std::vector<PresetResult> presets;

  std::string to_json() const;  // includes wall times
  std::string to_text() const;
};

// Side-by-side challenge scores; requires at least two results.
ComparisonReport compare(std::vector<PresetResult> results);

// Runs every named preset on one shared synthetic dataset and writes
// <out>/<preset>/epochs.csv, <out>/<preset>/report.json, and
// <out>/comparison.{json,txt}. report.json is byte-stable across runs with
// the same seeds.
ComparisonReport run_comparison(const std::vector<std::string>& names,
                                const SyntheticConfig& cfg, double subset_fraction,
                                const std::filesystem::path& out_dir,
                                std::optional<std::size_t> epochs_override = {});

// Writes epochs.csv and report.json for one preset run.
void write_preset_outputs(const PresetResult& result,
                          const std::filesystem::path& preset_dir);

// The pinned configuration used by the convergence acceptance check.
SyntheticConfig reference_convergence_config();
ExperimentPreset reference_convergence_preset();

}  // namespace affkit
