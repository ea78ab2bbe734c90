// Python bindings for the core operations: parsers and manifests, the three
// challenge metrics, the synthetic generator, and the training harness.
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <optional>
#include <string>
#include <vector>

#include "affkit/annotations.hpp"
#include "affkit/errors.hpp"
#include "affkit/harness.hpp"
#include "affkit/metrics.hpp"
#include "affkit/net.hpp"
#include "affkit/text.hpp"

namespace py = pybind11;
using namespace affkit;

namespace {

py::array_t<double> to_array(const Matrix& m) {
  py::array_t<double> out({m.rows(), m.cols()});
  auto buf = out.mutable_unchecked<2>();
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) {
      buf(i, j) = m(i, j);
    }
  }
  return out;
}

Matrix from_array(const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
  if (a.ndim() != 2) {
    throw Error(ErrorCode::ShapeMismatch, "expected a 2-d array");
  }
  Matrix m(static_cast<std::size_t>(a.shape(0)), static_cast<std::size_t>(a.shape(1)));
  auto buf = a.unchecked<2>();
  for (py::ssize_t i = 0; i < a.shape(0); ++i) {
    for (py::ssize_t j = 0; j < a.shape(1); ++j) {
      m(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) = buf(i, j);
    }
  }
  return m;
}

TaskKind task_arg(const std::string& name) {
  auto task = task_from_name(name);
  if (!task) throw Error(ErrorCode::BadConfig, "unknown task: " + name);
  return *task;
}

py::dict scores_dict(const PresetResult& result) {
  py::dict scores;
  for (const auto& [task, report] : result.reports) {
    scores[py::str(std::string(task_name(task)))] = report.challenge_score;
  }
  return scores;
}

}  // namespace

PYBIND11_MODULE(_affkit, m) {
  m.doc() = "Affect annotation parsing, challenge metrics, and a deterministic "
            "multi-task training harness";

  py::register_exception<Error>(m, "AffkitError", PyExc_ValueError);

  // --- annotations ------------------------------------------------------------

  py::class_<VaLabel>(m, "VaLabel")
      .def_readonly("valence", &VaLabel::valence)
      .def_readonly("arousal", &VaLabel::arousal)
      .def("sentinel", &VaLabel::sentinel)
      .def("valid", &VaLabel::valid);

  py::class_<ExprLabel>(m, "ExprLabel")
      .def_readonly("class_id", &ExprLabel::class_id)
      .def("sentinel", &ExprLabel::sentinel)
      .def("valid", &ExprLabel::valid);

  py::class_<AuLabel>(m, "AuLabel")
      .def_property_readonly("activations",
                             [](const AuLabel& label) {
                               std::vector<int> out(label.activations.begin(),
                                                    label.activations.end());
                               return out;
                             })
      .def("sentinel", &AuLabel::sentinel)
      .def("valid", &AuLabel::valid);

  py::class_<FrameRecord>(m, "FrameRecord")
      .def_readonly("video_id", &FrameRecord::video_id)
      .def_readonly("frame_index", &FrameRecord::frame_index)
      .def_readonly("va", &FrameRecord::va)
      .def_readonly("expr", &FrameRecord::expr)
      .def_readonly("au", &FrameRecord::au)
      .def_readonly("valid", &FrameRecord::valid)
      .def_readonly("image_path", &FrameRecord::image_path)
      .def("__eq__",
           [](const FrameRecord& a, const FrameRecord& b) { return a == b; },
           py::is_operator())
      .def("__repr__", [](const FrameRecord& r) {
        return "<FrameRecord " + r.video_id + ":" + std::to_string(r.frame_index) +
               (r.valid ? "" : " invalid") + ">";
      });

  py::class_<Manifest>(m, "Manifest")
      .def_readonly("records", &Manifest::records)
      .def_readonly("source", &Manifest::source)
      .def_property_readonly("task",
                             [](const Manifest& manifest) {
                               return manifest.task
                                          ? std::string(task_name(*manifest.task))
                                          : std::string("multi");
                             })
      .def("__len__", &Manifest::size)
      .def("to_csv", &manifest_to_csv);

  m.def("expr_class_names", [] {
    return std::vector<std::string>(kExprClassNames.begin(), kExprClassNames.end());
  });
  m.def("au_names", [] {
    return std::vector<std::string>(kAuNames.begin(), kAuNames.end());
  });

  m.def("parse_va_file", &parse_va_file, py::arg("text"), py::arg("video_id"));
  m.def("parse_expr_file", &parse_expr_file, py::arg("text"), py::arg("video_id"));
  m.def("parse_au_file", &parse_au_file, py::arg("text"), py::arg("video_id"));

  m.def(
      "build_manifest",
      [](const std::filesystem::path& dir, const std::string& task,
         const std::optional<std::filesystem::path>& images, const std::string& pattern) {
        return build_manifest(dir, task_arg(task), images, pattern);
      },
      py::arg("annotation_dir"), py::arg("task"), py::arg("image_dir") = std::nullopt,
      py::arg("pattern") = std::string(kDefaultImagePattern));
  m.def("filter_valid", &filter_valid);
  m.def("join_multitask", &join_multitask, py::arg("va"), py::arg("expr"), py::arg("au"));
  m.def("sample_record", &sample_record, py::arg("manifest"), py::arg("seed"),
        py::return_value_policy::copy);
  m.def("describe_record", &describe_record, py::arg("record"),
        py::arg("pattern") = std::string(kDefaultImagePattern));
  m.def("image_file_name", &image_file_name, py::arg("video_id"), py::arg("frame_index"),
        py::arg("pattern") = std::string(kDefaultImagePattern));

  py::class_<StatsReport>(m, "StatsReport")
      .def_readonly("total", &StatsReport::total)
      .def_readonly("valid", &StatsReport::valid)
      .def("to_text", &StatsReport::to_text)
      .def("to_json", &StatsReport::to_json);
  m.def("dataset_stats", &dataset_stats);

  // --- metrics ----------------------------------------------------------------

  m.def("pearson", [](const std::vector<double>& x, const std::vector<double>& y) {
    return pearson(x, y);
  });
  m.def("ccc", [](const std::vector<double>& pred, const std::vector<double>& target) {
    return ccc(pred, target);
  });
  m.def("score_va", &score_va, py::arg("ccc_valence"), py::arg("ccc_arousal"));
  m.def("score_expr", [](const std::vector<double>& f1) { return score_expr(f1); });
  m.def("score_au", [](const std::vector<double>& f1) { return score_au(f1); });

  py::class_<ConfusionMatrix>(m, "ConfusionMatrix")
      .def_property_readonly("num_classes", &ConfusionMatrix::num_classes)
      .def("at", [](const ConfusionMatrix& cm, std::size_t t, std::size_t p) {
        return cm.at(t, p);
      })
      .def("total", &ConfusionMatrix::total);
  m.def("confusion",
        [](const std::vector<int>& pred, const std::vector<int>& target, std::size_t k) {
          return confusion(pred, target, k);
        });
  m.def("per_class_f1", &per_class_f1);
  m.def("multilabel_f1",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& pred,
           const py::array_t<double, py::array::c_style | py::array::forcecast>& target) {
          return multilabel_f1(from_array(pred), from_array(target));
        });
  m.def("class_weights",
        [](const std::vector<std::size_t>& counts, std::size_t total) {
          return class_weights(counts, total);
        });

  py::class_<MetricsReport>(m, "MetricsReport")
      .def_property_readonly("task",
                             [](const MetricsReport& r) {
                               return std::string(task_name(r.task));
                             })
      .def_readonly("scored_frames", &MetricsReport::scored_frames)
      .def_readonly("per_class_f1", &MetricsReport::per_class_f1)
      .def_readonly("macro_f1", &MetricsReport::macro_f1)
      .def_readonly("ccc_valence", &MetricsReport::ccc_valence)
      .def_readonly("ccc_arousal", &MetricsReport::ccc_arousal)
      .def_readonly("challenge_score", &MetricsReport::challenge_score)
      .def("to_json", &MetricsReport::to_json)
      .def("to_text", &MetricsReport::to_text);

  m.def(
      "evaluate_predictions",
      [](const std::filesystem::path& pred_file, const Manifest& gt,
         const std::string& task) {
        return evaluate_predictions(pred_file, gt, task_arg(task));
      },
      py::arg("pred_file"), py::arg("gt"), py::arg("task"));

  // --- harness ----------------------------------------------------------------

  py::class_<SyntheticConfig>(m, "SyntheticConfig")
      .def(py::init<>())
      .def_readwrite("n_train", &SyntheticConfig::n_train)
      .def_readwrite("n_val", &SyntheticConfig::n_val)
      .def_readwrite("feature_dim", &SyntheticConfig::feature_dim)
      .def_readwrite("label_noise", &SyntheticConfig::label_noise)
      .def_readwrite("feature_noise_std", &SyntheticConfig::feature_noise_std)
      .def_readwrite("neutral_radius", &SyntheticConfig::neutral_radius)
      .def_readwrite("other_prob", &SyntheticConfig::other_prob)
      .def_readwrite("seed", &SyntheticConfig::seed)
      .def("to_json", &SyntheticConfig::to_json_text)
      .def_static("from_json", &SyntheticConfig::from_json_text);

  py::class_<Dataset>(m, "Dataset")
      .def_property_readonly("features", [](const Dataset& d) { return to_array(d.features); })
      .def_readonly("expr", &Dataset::expr)
      .def_property_readonly("au", [](const Dataset& d) { return to_array(d.au); })
      .def_property_readonly("va", [](const Dataset& d) { return to_array(d.va); })
      .def("__len__", &Dataset::size)
      .def("to_csv", &Dataset::to_csv)
      .def_static("from_csv", &Dataset::from_csv);

  py::class_<SyntheticData>(m, "SyntheticData")
      .def_readonly("train", &SyntheticData::train)
      .def_readonly("val", &SyntheticData::val);

  m.def("generate_synthetic", &generate_synthetic);
  m.def("preset_names", &preset_names);
  m.def("expr_class_for", &expr_class_for, py::arg("valence"), py::arg("arousal"),
        py::arg("neutral_radius"));

  py::class_<EpochRow>(m, "EpochRow")
      .def_readonly("epoch", &EpochRow::epoch)
      .def_readonly("train_expr", &EpochRow::train_expr)
      .def_readonly("train_au", &EpochRow::train_au)
      .def_readonly("train_va", &EpochRow::train_va)
      .def_readonly("val_expr", &EpochRow::val_expr)
      .def_readonly("val_au", &EpochRow::val_au)
      .def_readonly("val_va", &EpochRow::val_va)
      .def_readonly("lr", &EpochRow::lr);

  py::class_<PresetResult>(m, "PresetResult")
      .def_readonly("preset", &PresetResult::preset)
      .def_readonly("epochs", &PresetResult::epochs)
      .def_readonly("wall_seconds", &PresetResult::wall_seconds)
      .def_property_readonly("scores", &scores_dict)
      .def_property_readonly("reports", [](const PresetResult& result) {
        py::dict out;
        for (const auto& [task, report] : result.reports) {
          out[py::str(std::string(task_name(task)))] = report;
        }
        return out;
      });

  m.def(
      "run_preset",
      [](const std::string& name, const SyntheticConfig& cfg, double subset_fraction,
         std::optional<std::size_t> epochs, std::optional<std::uint64_t> seed) {
        ExperimentPreset preset = make_preset(name);
        if (epochs) preset.train.epochs = *epochs;
        if (seed) preset.train.seed = *seed;
        return run_preset(preset, generate_synthetic(cfg), subset_fraction);
      },
      py::arg("preset"), py::arg("config"), py::arg("subset_fraction") = 1.0,
      py::arg("epochs") = std::nullopt, py::arg("seed") = std::nullopt);

  py::class_<ComparisonReport>(m, "ComparisonReport")
      .def_readonly("presets", &ComparisonReport::presets)
      .def("to_json", &ComparisonReport::to_json)
      .def("to_text", &ComparisonReport::to_text);

  m.def(
      "run_comparison",
      [](const std::vector<std::string>& names, const SyntheticConfig& cfg,
         double subset_fraction, const std::filesystem::path& out_dir,
         std::optional<std::size_t> epochs) {
        return run_comparison(names, cfg, subset_fraction, out_dir, epochs);
      },
      py::arg("presets"), py::arg("config"), py::arg("subset_fraction") = 1.0,
      py::arg("out_dir") = std::filesystem::path("out"),
      py::arg("epochs") = std::nullopt);

  m.def("epochs_to_csv", &epochs_to_csv);

#ifdef VERSION_INFO
  m.attr("__version__") = VERSION_INFO;
#else
  m.attr("__version__") = "dev";
#endif
}
