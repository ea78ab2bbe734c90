#include <doctest.h>

#include <cmath>
#include <set>
#include <string>

#include "affkit/errors.hpp"
#include "affkit/harness.hpp"
#include "affkit/rng.hpp"
#include "affkit/text.hpp"
#include "test_util.hpp"

using namespace affkit;

namespace {

SyntheticConfig small_config() {
  SyntheticConfig cfg;
  cfg.n_train = 512;
  cfg.n_val = 256;
  cfg.feature_dim = 16;
  cfg.feature_noise_std = 0.01;
  cfg.seed = 7;
  return cfg;
}

}  // namespace

TEST_CASE("synthetic config validation") {
  SyntheticConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.feature_dim = 13;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = SyntheticConfig{};
  cfg.neutral_radius = 1.5;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = SyntheticConfig{};
  cfg.label_noise = -0.1;
  CHECK_THROWS_AS(cfg.validate(), Error);
}

TEST_CASE("synthetic config json round-trip") {
  SyntheticConfig cfg = small_config();
  SyntheticConfig parsed = SyntheticConfig::from_json_text(cfg.to_json_text());
  CHECK(parsed.n_train == cfg.n_train);
  CHECK(parsed.feature_dim == cfg.feature_dim);
  CHECK(parsed.seed == cfg.seed);
  CHECK(parsed.feature_noise_std == cfg.feature_noise_std);

  // Missing keys fall back to defaults.
  SyntheticConfig partial = SyntheticConfig::from_json_text("{\"n_train\": 100}");
  CHECK(partial.n_train == 100);
  CHECK(partial.n_val == SyntheticConfig{}.n_val);

  CHECK_THROWS_AS(SyntheticConfig::from_json_text("not json"), Error);
}

TEST_CASE("generate_synthetic is deterministic per seed") {
  SyntheticConfig cfg = small_config();
  SyntheticData a = generate_synthetic(cfg);
  SyntheticData b = generate_synthetic(cfg);
  CHECK(a.train.features == b.train.features);
  CHECK(a.train.expr == b.train.expr);
  CHECK(a.train.au == b.train.au);
  CHECK(a.val.va == b.val.va);

  cfg.seed = 8;
  SyntheticData c = generate_synthetic(cfg);
  CHECK(a.train.features != c.train.features);
}

TEST_CASE("noise-free AU labels are recomputable from the latent rule") {
  SyntheticConfig cfg = small_config();
  cfg.label_noise = 0.0;
  SyntheticData data = generate_synthetic(cfg);
  const Matrix directions = au_directions();
  for (std::size_t i = 0; i < data.train.size(); ++i) {
    const double v = data.train.va(i, 0);
    const double a = data.train.va(i, 1);
    for (std::size_t k = 0; k < kAuCount; ++k) {
      const double expected =
          directions(k, 0) * v + directions(k, 1) * a + kAuOffset > 0.0 ? 1.0 : 0.0;
      REQUIRE(data.train.au(i, k) == expected);
    }
  }
}

TEST_CASE("va latents stay on the unit disc and expression classes are in range") {
  SyntheticData data = generate_synthetic(small_config());
  for (std::size_t i = 0; i < data.train.size(); ++i) {
    const double r = std::hypot(data.train.va(i, 0), data.train.va(i, 1));
    CHECK(r <= 1.0);
    CHECK(data.train.expr[i] >= 0);
    CHECK(data.train.expr[i] < 8);
  }
}

TEST_CASE("neutral fraction approximates the disc area ratio") {
  SyntheticConfig cfg;
  cfg.n_train = 100000;
  cfg.n_val = 1;
  cfg.neutral_radius = 0.25;
  cfg.feature_dim = 14;
  cfg.feature_noise_std = 0.0;
  cfg.seed = 3;
  SyntheticData data = generate_synthetic(cfg);
  std::size_t neutral = 0;
  for (int c : data.train.expr) {
    if (c == 0) ++neutral;
  }
  const double fraction = static_cast<double>(neutral) / 100000.0;
  CHECK(std::abs(fraction - 0.0625) < 0.005);  // area ratio r^2
}

TEST_CASE("expression sectors follow the documented circumplex map") {
  // Mid-sector angles, radius 0.9: Happiness, Surprise, Fear, Anger,
  // Sadness, Disgust.
  const double r = 0.9;
  const int expected[6] = {4, 6, 3, 1, 5, 2};
  for (int s = 0; s < 6; ++s) {
    const double angle = (s + 0.5) * (3.14159265358979323846 / 3.0);
    CHECK(expr_class_for(r * std::cos(angle), r * std::sin(angle), 0.25) == expected[s]);
  }
  // Inside the neutral disc.
  CHECK(expr_class_for(0.1, 0.1, 0.25) == 0);
  // Exact boundary angles fall to the lower-index sector: 60 degrees is
  // still Happiness territory.
  const double boundary = 3.14159265358979323846 / 3.0;
  CHECK(expr_class_for(0.9 * std::cos(boundary), 0.9 * std::sin(boundary), 0.25) == 4);
  // Angle zero starts sector 0.
  CHECK(expr_class_for(0.9, 0.0, 0.25) == 4);
}

TEST_CASE("other_prob replaces only non-neutral labels") {
  SyntheticConfig cfg = small_config();
  cfg.n_train = 20000;
  cfg.other_prob = 1.0;
  SyntheticData data = generate_synthetic(cfg);
  for (std::size_t i = 0; i < data.train.size(); ++i) {
    const double r = std::hypot(data.train.va(i, 0), data.train.va(i, 1));
    if (r < cfg.neutral_radius) {
      CHECK(data.train.expr[i] == 0);
    } else {
      CHECK(data.train.expr[i] == 7);
    }
  }
}

TEST_CASE("dataset csv export round-trips") {
  SyntheticConfig cfg = small_config();
  cfg.n_train = 64;
  cfg.n_val = 8;
  SyntheticData data = generate_synthetic(cfg);
  Dataset back = Dataset::from_csv(data.train.to_csv());
  CHECK(back.features == data.train.features);
  CHECK(back.expr == data.train.expr);
  CHECK(back.au == data.train.au);
  CHECK(back.va == data.train.va);

  CHECK_THROWS_AS(Dataset::from_csv("bogus\n1,2,3\n"), Error);
}

TEST_CASE("the four presets match the published recipes") {
  CHECK(preset_names() == std::vector<std::string>{"va-uni", "expr-uni", "au-uni", "mtl"});

  ExperimentPreset va = make_preset("va-uni");
  CHECK(va.train.optimizer == OptimizerKind::Adam);
  CHECK(va.train.scheduler.has_value());
  CHECK(va.train.lambda_va == 1.0);
  CHECK(va.train.lambda_expr == 0.0);

  ExperimentPreset expr = make_preset("expr-uni");
  CHECK(expr.train.optimizer == OptimizerKind::Sgd);
  CHECK(expr.weight_expr_classes);
  CHECK(expr.train.lambda_expr == 1.0);

  ExperimentPreset au = make_preset("au-uni");
  CHECK(au.train.optimizer == OptimizerKind::Adam);
  CHECK(au.train.au_loss == AuLossKind::WeightedBce);
  CHECK(au.weight_au_positives);
  CHECK(au.train.scheduler.has_value());

  ExperimentPreset mtl = make_preset("mtl");
  CHECK(mtl.train.lambda_expr == 1.0);
  CHECK(mtl.train.lambda_au == 1.0);
  CHECK(mtl.train.lambda_va == 1.0);
  CHECK(mtl.train.au_loss == AuLossKind::Mse);
  CHECK(mtl.train.optimizer == OptimizerKind::Adam);

  CHECK_THROWS_AS(make_preset("nope"), Error);
}

TEST_CASE("run_preset trains, logs epochs, and reports via the metrics module") {
  SyntheticConfig cfg = small_config();
  SyntheticData data = generate_synthetic(cfg);
  ExperimentPreset preset = make_preset("va-uni");
  preset.train.epochs = 5;
  PresetResult result = run_preset(preset, data, 1.0);

  REQUIRE(result.epochs.size() == 5);
  // Low-noise synthetic data: the VA loss strictly decreases over the first
  // five epochs (pinned by the fixed seed).
  for (std::size_t e = 1; e < result.epochs.size(); ++e) {
    CHECK(result.epochs[e].train_va < result.epochs[e - 1].train_va);
  }
  REQUIRE(result.reports.count(TaskKind::Va) == 1);
  CHECK(result.reports.at(TaskKind::Va).challenge_score > -1.0);
  CHECK(result.reports.count(TaskKind::Expr) == 0);

  const std::string csv = epochs_to_csv(result.epochs);
  CHECK(csv.starts_with(
      "epoch,train_loss_expr,train_loss_au,train_loss_va,"
      "val_loss_expr,val_loss_au,val_loss_va,lr\n"));
}

TEST_CASE("subset sampling rounds, dedupes, and rejects empty subsets") {
  SyntheticConfig cfg = small_config();
  cfg.n_train = 100;
  SyntheticData data = generate_synthetic(cfg);
  ExperimentPreset preset = make_preset("mtl");
  preset.train.epochs = 1;
  preset.train.batch_size = 8;

  CHECK_THROWS_AS(run_preset(preset, data, 0.0), Error);
  try {
    run_preset(preset, data, 0.001);  // rounds to zero samples
    FAIL("expected EmptySubset");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::EmptySubset);
  }
  CHECK_THROWS_AS(run_preset(preset, data, 1.5), Error);
  CHECK_NOTHROW(run_preset(preset, data, 0.25));

  Rng rng(123);
  auto subset = rng.sample_without_replacement(25, 100);
  CHECK(subset.size() == 25);
  std::set<std::size_t> unique(subset.begin(), subset.end());
  CHECK(unique.size() == subset.size());
  for (auto i : subset) CHECK(i < 100);
}

TEST_CASE("mtl preset with two lambdas zeroed reproduces the uni preset run") {
  SyntheticConfig cfg = small_config();
  SyntheticData data = generate_synthetic(cfg);

  ExperimentPreset uni = make_preset("expr-uni");
  uni.train.epochs = 4;

  ExperimentPreset masked = make_preset("mtl");
  masked.train = uni.train;  // same optimizer, lr, seed, weighting
  masked.train.lambda_expr = 1.0;
  masked.train.lambda_au = 0.0;
  masked.train.lambda_va = 0.0;
  masked.weight_expr_classes = uni.weight_expr_classes;
  masked.weight_au_positives = uni.weight_au_positives;

  PresetResult uni_result = run_preset(uni, data, 1.0);
  PresetResult masked_result = run_preset(masked, data, 1.0);
  REQUIRE(uni_result.epochs.size() == masked_result.epochs.size());
  for (std::size_t e = 0; e < uni_result.epochs.size(); ++e) {
    CHECK(std::abs(uni_result.epochs[e].train_expr -
                   masked_result.epochs[e].train_expr) < 1e-9);
    CHECK(std::abs(uni_result.epochs[e].val_expr -
                   masked_result.epochs[e].val_expr) < 1e-9);
  }
  CHECK(uni_result.reports.at(TaskKind::Expr).challenge_score ==
        masked_result.reports.at(TaskKind::Expr).challenge_score);
}

TEST_CASE("compare requires at least two results and reports deltas") {
  SyntheticConfig cfg = small_config();
  SyntheticData data = generate_synthetic(cfg);
  ExperimentPreset preset = make_preset("mtl");
  preset.train.epochs = 2;
  PresetResult result = run_preset(preset, data, 1.0);

  CHECK_THROWS_AS(compare({result}), Error);

  PresetResult other = result;
  other.preset = "mtl-copy";
  ComparisonReport report = compare({result, other});
  const std::string text = report.to_text();
  CHECK(text.find("mtl") != std::string::npos);
  CHECK(text.find("P_EXPR") != std::string::npos);
  const std::string json = report.to_json();
  CHECK(json.find("\"best\"") != std::string::npos);
  CHECK(json.find("\"epochs_csv\"") != std::string::npos);
  CHECK(json.find("mtl/epochs.csv") != std::string::npos);
}

TEST_CASE("run_comparison writes the documented output layout deterministically") {
  TempDir dir;
  SyntheticConfig cfg = small_config();
  cfg.n_train = 256;
  cfg.n_val = 128;

  auto run = [&](const std::filesystem::path& out) {
    return run_comparison({"va-uni", "mtl"}, cfg, 1.0, out, 3);
  };
  run(dir.path / "a");
  run(dir.path / "b");

  for (const char* preset : {"va-uni", "mtl"}) {
    const auto a_report = dir.path / "a" / preset / "report.json";
    const auto b_report = dir.path / "b" / preset / "report.json";
    REQUIRE(std::filesystem::exists(a_report));
    REQUIRE(std::filesystem::exists(dir.path / "a" / preset / "epochs.csv"));
    CHECK(read_text_file(a_report) == read_text_file(b_report));
    CHECK(read_text_file(dir.path / "a" / preset / "epochs.csv") ==
          read_text_file(dir.path / "b" / preset / "epochs.csv"));
  }
  CHECK(std::filesystem::exists(dir.path / "a" / "comparison.json"));
  CHECK(std::filesystem::exists(dir.path / "a" / "comparison.txt"));

  CHECK_THROWS_AS(run_comparison({"mtl"}, cfg, 1.0, dir.path / "c", 2), Error);
  CHECK_THROWS_AS(run_comparison({"mtl", "mtl"}, cfg, 1.0, dir.path / "d", 2), Error);
}

TEST_CASE("the frozen reference configuration is pinned") {
  SyntheticConfig cfg = reference_convergence_config();
  CHECK(cfg.feature_dim == 32);
  CHECK(cfg.seed == 42);
  CHECK(cfg.label_noise == 0.0);
  CHECK(cfg.feature_noise_std <= 0.05);
  ExperimentPreset preset = reference_convergence_preset();
  CHECK(preset.name == "mtl");
  CHECK(preset.model.trunk_dims == std::vector<std::size_t>{64});
  CHECK(preset.train.epochs == 200);
  CHECK(preset.train.batch_size == 64);
}
