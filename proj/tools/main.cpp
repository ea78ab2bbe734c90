// Command-line front end: every subcommand is a thin shell over the library.
#include <algorithm>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "affkit/annotations.hpp"
#include "affkit/errors.hpp"
#include "affkit/harness.hpp"
#include "affkit/metrics.hpp"
#include "affkit/text.hpp"

namespace fs = std::filesystem;
using namespace affkit;

namespace {

struct GlobalOptions {
  std::uint64_t seed = 42;
  bool seed_given = false;
  std::string out_dir = "out";
  std::string format = "text";
};

TaskKind parse_task(const std::string& name) {
  auto task = task_from_name(name);
  if (!task) {
    throw Error(ErrorCode::BadConfig, "unknown task: " + name);
  }
  return *task;
}

SyntheticConfig load_synthetic_config(const std::string& path,
                                      const GlobalOptions& global) {
  SyntheticConfig cfg;
  if (!path.empty()) {
    cfg = SyntheticConfig::from_json_text(read_text_file(path));
  }
  if (global.seed_given) cfg.seed = global.seed;
  return cfg;
}

void print_epoch_line(const std::string& preset, const EpochRow& row,
                      std::size_t total_epochs) {
  std::cerr << "[" << preset << "] Epoch " << row.epoch << "/" << total_epochs
            << ", Train Expression Loss: " << format_fixed(row.train_expr, 4)
            << ", Train AU Loss: " << format_fixed(row.train_au, 4)
            << ", Train VA Loss: " << format_fixed(row.train_va, 4)
            << ", Val Expression Loss: " << format_fixed(row.val_expr, 4)
            << ", Val AU Loss: " << format_fixed(row.val_au, 4)
            << ", Val VA Loss: " << format_fixed(row.val_va, 4) << "\n";
}

int cmd_validate(const GlobalOptions&, TaskKind task, const fs::path& annotations,
                 const std::optional<fs::path>& images, const std::string& pattern) {
  if (!fs::is_directory(annotations)) {
    throw Error(ErrorCode::IoError,
                "annotation directory does not exist: " + annotations.string());
  }
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(annotations)) {
    if (entry.is_regular_file()) files.push_back(entry.path());
  }
  if (files.empty()) {
    throw Error(ErrorCode::EmptyDirectory, "no annotation files in " + annotations.string());
  }
  std::sort(files.begin(), files.end());

  std::size_t total_valid = 0, total_invalid = 0, total_dropped = 0;
  std::vector<std::string> errors;
  for (const auto& file : files) {
    try {
      auto records = parse_annotation_file(task, read_text_file(file), file.stem().string());
      std::size_t valid = 0, dropped = 0;
      for (const auto& record : records) {
        if (images) {
          auto image = *images / record.video_id /
                       image_file_name(record.video_id, record.frame_index, pattern);
          if (!fs::exists(image)) {
            ++dropped;
            continue;
          }
        }
        if (record.valid) ++valid;
      }
      const std::size_t invalid = records.size() - dropped - valid;
      total_valid += valid;
      total_invalid += invalid;
      total_dropped += dropped;
      std::cout << file.filename().string() << ": " << valid << " valid, " << invalid
                << " invalid";
      if (images) std::cout << ", " << dropped << " dropped (missing image)";
      std::cout << "\n";
    } catch (const ParseError& e) {
      errors.push_back(e.with_file(file.filename().string()).what());
      std::cout << file.filename().string() << ": error\n";
    }
  }
  std::cout << "total: " << total_valid << " valid, " << total_invalid << " invalid";
  if (images) std::cout << ", " << total_dropped << " dropped";
  std::cout << ", " << errors.size() << " file errors\n";
  if (!errors.empty()) {
    std::cerr << "error: " << errors.front() << "\n";
    return 1;
  }
  std::cerr << "validate: ok (" << files.size() << " files, " << total_valid
            << " valid frames)\n";
  return 0;
}

int cmd_stats(const GlobalOptions& global, TaskKind task, const fs::path& annotations) {
  Manifest manifest = build_manifest(annotations, task);
  StatsReport report = dataset_stats(manifest);
  if (global.format == "json") {
    std::cout << report.to_json() << "\n";
  } else {
    std::cout << report.to_text();
  }
  std::cerr << "stats: " << report.total << " frames (" << report.valid << " valid)\n";
  return 0;
}

int cmd_sample(const GlobalOptions& global, TaskKind task, const fs::path& annotations) {
  Manifest manifest = filter_valid(build_manifest(annotations, task));
  const FrameRecord& record = sample_record(manifest, global.seed);
  std::cout << describe_record(record, manifest.image_pattern);
  std::cerr << "sample: seed " << global.seed << " -> " << record.video_id << " frame "
            << record.frame_index << "\n";
  return 0;
}

int cmd_evaluate(const GlobalOptions& global, TaskKind task, const fs::path& annotations,
                 const fs::path& predictions) {
  Manifest gt = build_manifest(annotations, task);
  MetricsReport report = evaluate_predictions(predictions, gt, task);
  if (global.format == "json") {
    std::cout << report.to_json() << "\n";
  } else {
    std::cout << report.to_text();
  }
  const fs::path out_dir(global.out_dir);
  write_text_file(out_dir / "report.json", report.to_json() + "\n");
  write_text_file(out_dir / "report.txt", report.to_text());
  std::cerr << "evaluate: task=" << task_name(task) << " frames=" << report.scored_frames
            << " challenge_score=" << format_fixed(report.challenge_score, 4) << "\n";
  return 0;
}

int cmd_train(const GlobalOptions& global, const std::string& preset_name,
              const std::string& synthetic_path, double subset,
              std::optional<std::size_t> epochs) {
  SyntheticConfig cfg = load_synthetic_config(synthetic_path, global);
  ExperimentPreset preset = make_preset(preset_name);
  if (epochs) preset.train.epochs = *epochs;
  if (global.seed_given) preset.train.seed = global.seed;
  SyntheticData data = generate_synthetic(cfg);
  PresetResult result = run_preset(preset, data, subset);
  const fs::path preset_dir = fs::path(global.out_dir) / preset_name;
  write_preset_outputs(result, preset_dir);
  if (!result.epochs.empty()) {
    print_epoch_line(preset_name, result.epochs.back(), preset.train.epochs);
  }
  for (const auto& [task, report] : result.reports) {
    if (global.format == "json") {
      std::cout << report.to_json() << "\n";
    } else {
      std::cout << report.to_text() << "\n";
    }
  }
  std::cerr << "train: preset=" << preset_name << " epochs=" << preset.train.epochs
            << " outputs=" << preset_dir.string() << "\n";
  return 0;
}

int cmd_compare(const GlobalOptions& global, const std::string& presets_list,
                const std::string& synthetic_path, const std::string& out,
                double subset, std::optional<std::size_t> epochs) {
  SyntheticConfig cfg = load_synthetic_config(synthetic_path, global);
  std::vector<std::string> names;
  for (auto part : split(presets_list, ',')) {
    auto name = trim(part);
    if (!name.empty()) names.emplace_back(name);
  }
  const fs::path out_dir = out.empty() ? fs::path(global.out_dir) : fs::path(out);
  ComparisonReport report = run_comparison(names, cfg, subset, out_dir, epochs);
  if (global.format == "json") {
    std::cout << report.to_json() << "\n";
  } else {
    std::cout << report.to_text();
  }
  std::cerr << "compare: " << names.size() << " presets, outputs=" << out_dir.string()
            << "\n";
  return 0;
}

int cmd_export_manifest(const GlobalOptions&, TaskKind task, const fs::path& annotations,
                        const std::optional<fs::path>& images, const std::string& pattern,
                        bool valid_only, const fs::path& out_file) {
  Manifest manifest = build_manifest(annotations, task, images, pattern);
  if (valid_only) manifest = filter_valid(manifest);
  write_text_file(out_file, manifest_to_csv(manifest));
  std::cerr << "export-manifest: " << manifest.size() << " records -> "
            << out_file.string() << "\n";
  return 0;
}

int cmd_export_synthetic(const GlobalOptions& global, const std::string& synthetic_path) {
  SyntheticConfig cfg = load_synthetic_config(synthetic_path, global);
  SyntheticData data = generate_synthetic(cfg);
  const fs::path out_dir(global.out_dir);
  write_text_file(out_dir / "train.csv", data.train.to_csv());
  write_text_file(out_dir / "val.csv", data.val.to_csv());
  std::cerr << "export-synthetic: " << data.train.size() << "+" << data.val.size()
            << " samples -> " << out_dir.string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"affkit: per-frame affect annotation parsing, challenge metrics, and a "
               "deterministic multi-task training harness"};
  app.require_subcommand(1);
  app.fallthrough();  // global flags may follow the subcommand

  GlobalOptions global;
  app.add_option("--seed", global.seed, "Random seed")->capture_default_str();
  app.add_option("--out-dir", global.out_dir, "Output directory")->capture_default_str();
  app.add_option("--format", global.format, "Report format on stdout")
      ->check(CLI::IsMember({"json", "text"}))
      ->capture_default_str();

  std::string task_name_arg = "va";
  std::string annotations_arg, images_arg, predictions_arg;
  std::string pattern_arg{kDefaultImagePattern};
  std::string preset_arg = "mtl";
  std::string synthetic_arg, presets_list_arg, compare_out_arg, export_out_arg;
  double subset_arg = 1.0;
  std::size_t epochs_arg = 0;
  bool valid_only_arg = false;

  auto add_task_option = [&](CLI::App* cmd) {
    cmd->add_option("--task", task_name_arg, "Task: va, expr, or au")
        ->required()
        ->check(CLI::IsMember({"va", "expr", "au"}));
  };
  auto add_annotations_option = [&](CLI::App* cmd) {
    cmd->add_option("--annotations", annotations_arg, "Annotation directory")->required();
  };

  CLI::App* validate = app.add_subcommand("validate", "Parse a directory and report counts");
  add_task_option(validate);
  add_annotations_option(validate);
  validate->add_option("--images", images_arg, "Image directory (drops frames without images)");
  validate->add_option("--pattern", pattern_arg, "Image filename pattern")
      ->capture_default_str();

  CLI::App* stats = app.add_subcommand("stats", "Dataset statistics");
  add_task_option(stats);
  add_annotations_option(stats);

  CLI::App* sample = app.add_subcommand("sample", "Print one randomly drawn valid record");
  add_task_option(sample);
  add_annotations_option(sample);

  CLI::App* evaluate = app.add_subcommand("evaluate", "Score a prediction file");
  add_task_option(evaluate);
  add_annotations_option(evaluate);
  evaluate->add_option("--predictions", predictions_arg, "Prediction CSV")->required();

  CLI::App* train = app.add_subcommand("train", "Train one preset on synthetic data");
  train->add_option("--preset", preset_arg, "Preset name")
      ->required()
      ->check(CLI::IsMember(preset_names()));
  train->add_option("--synthetic", synthetic_arg, "Synthetic config JSON");
  train->add_option("--subset", subset_arg, "Training subset fraction")
      ->capture_default_str();
  train->add_option("--epochs", epochs_arg, "Override the preset's epoch count");

  CLI::App* compare_cmd = app.add_subcommand("compare", "Run several presets and compare");
  compare_cmd->add_option("--presets", presets_list_arg, "Comma-separated preset names")
      ->required();
  compare_cmd->add_option("--synthetic", synthetic_arg, "Synthetic config JSON");
  compare_cmd->add_option("--out", compare_out_arg, "Comparison output directory");
  compare_cmd->add_option("--subset", subset_arg, "Training subset fraction")
      ->capture_default_str();
  compare_cmd->add_option("--epochs", epochs_arg, "Override the presets' epoch count");

  CLI::App* export_manifest = app.add_subcommand("export-manifest", "Write a manifest CSV");
  add_task_option(export_manifest);
  add_annotations_option(export_manifest);
  export_manifest->add_option("--images", images_arg, "Image directory");
  export_manifest->add_option("--pattern", pattern_arg, "Image filename pattern")
      ->capture_default_str();
  export_manifest->add_flag("--valid-only", valid_only_arg, "Drop sentinel frames");
  export_manifest->add_option("--out", export_out_arg, "Output CSV path")->required();

  CLI::App* export_synth = app.add_subcommand("export-synthetic",
                                              "Write synthetic train/val CSVs");
  export_synth->add_option("--synthetic", synthetic_arg, "Synthetic config JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;  // help/version exits 0, usage errors exit 2
  }

  global.seed_given = app.count("--seed") > 0;

  try {
    std::optional<fs::path> images;
    if (!images_arg.empty()) images = fs::path(images_arg);
    std::optional<std::size_t> epochs;
    if (epochs_arg > 0) epochs = epochs_arg;

    if (app.got_subcommand(validate)) {
      return cmd_validate(global, parse_task(task_name_arg), annotations_arg, images,
                          pattern_arg);
    }
    if (app.got_subcommand(stats)) {
      return cmd_stats(global, parse_task(task_name_arg), annotations_arg);
    }
    if (app.got_subcommand(sample)) {
      return cmd_sample(global, parse_task(task_name_arg), annotations_arg);
    }
    if (app.got_subcommand(evaluate)) {
      return cmd_evaluate(global, parse_task(task_name_arg), annotations_arg,
                          predictions_arg);
    }
    if (app.got_subcommand(train)) {
      return cmd_train(global, preset_arg, synthetic_arg, subset_arg, epochs);
    }
    if (app.got_subcommand(compare_cmd)) {
      return cmd_compare(global, presets_list_arg, synthetic_arg, compare_out_arg,
                         subset_arg, epochs);
    }
    if (app.got_subcommand(export_manifest)) {
      return cmd_export_manifest(global, parse_task(task_name_arg), annotations_arg,
                                 images, pattern_arg, valid_only_arg, export_out_arg);
    }
    if (app.got_subcommand(export_synth)) {
      return cmd_export_synthetic(global, synthetic_arg);
    }
    std::cerr << "error: no subcommand selected\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
