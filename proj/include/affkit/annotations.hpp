#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "affkit/tasks.hpp"

namespace affkit {

// Valence/arousal pair. Valid values lie in [-1, 1]; a component equal to -5
// marks a frame the annotators disregarded.
struct VaLabel {
  double valence = 0.0;
  double arousal = 0.0;

  bool sentinel() const { return valence == -5.0 || arousal == -5.0; }
  bool valid() const {
    return valence >= -1.0 && valence <= 1.0 && arousal >= -1.0 && arousal <= 1.0;
  }
  bool operator==(const VaLabel&) const = default;
};

// Expression class in {0..7} (see kExprClassNames); -1 marks a disregarded
// frame.
struct ExprLabel {
  int class_id = -1;

  bool sentinel() const { return class_id == -1; }
  bool valid() const { return class_id >= 0 && class_id < static_cast<int>(kExprClassCount); }
  bool operator==(const ExprLabel&) const = default;
};

// Twelve activation flags in the fixed AU order of kAuNames. Each entry is
// 0, 1, or -1; any -1 marks the frame disregarded.
struct AuLabel {
  std::array<std::int8_t, kAuCount> activations{};

  bool sentinel() const {
    for (auto v : activations) {
      if (v == -1) return true;
    }
    return false;
  }
  bool valid() const {
    for (auto v : activations) {
      if (v != 0 && v != 1) return false;
    }
    return true;
  }
  bool operator==(const AuLabel&) const = default;
};

// One annotated (video, frame). Single-task records carry exactly one label;
// records produced by join_multitask carry all three.
struct FrameRecord {
  std::string video_id;
  int frame_index = 0;  // 1-based
  std::optional<VaLabel> va;
  std::optional<ExprLabel> expr;
  std::optional<AuLabel> au;
  bool valid = false;
  std::string image_path;  // empty until bound against an image directory

  bool operator==(const FrameRecord&) const = default;
};

inline constexpr std::string_view kDefaultImagePattern = "{frame:05}.jpg";

// Ordered collection of FrameRecords. `task` is nullopt for the multi-task
// join. Records are unique on (video_id, frame_index) and sorted by video id
// then frame.
struct Manifest {
  std::optional<TaskKind> task;
  std::vector<FrameRecord> records;
  std::string source;
  std::string image_pattern{kDefaultImagePattern};

  bool is_multi() const { return !task.has_value(); }
  std::size_t size() const { return records.size(); }
};

// --- parsing ---------------------------------------------------------------

// Each parser consumes one annotation file. The first line is the header;
// data line i (1-based after the header) becomes frame i. Sentinel rows are
// retained with valid=false. Throws ParseError on malformed input.
std::vector<FrameRecord> parse_va_file(std::string_view text, std::string video_id);
std::vector<FrameRecord> parse_expr_file(std::string_view text, std::string video_id);
std::vector<FrameRecord> parse_au_file(std::string_view text, std::string video_id);
std::vector<FrameRecord> parse_annotation_file(TaskKind task, std::string_view text,
                                               std::string video_id);

// Expands `pattern` for one frame: "{video}" -> video_id, "{frame}" or
// "{frame:0N}" -> (zero-padded) frame number.
std::string image_file_name(std::string_view video_id, int frame_index,
                            std::string_view pattern = kDefaultImagePattern);

// Parses every file in `annotation_dir` (video id = file stem) into one
// canonically ordered manifest. When `image_dir` is given, records are bound
// to image_dir/<video>/<pattern> and frames whose image file does not exist
// are dropped.
Manifest build_manifest(const std::filesystem::path& annotation_dir, TaskKind task,
                        const std::optional<std::filesystem::path>& image_dir = {},
                        std::string_view pattern = kDefaultImagePattern);

// Keeps exactly the records with valid=true, preserving order.
Manifest filter_valid(const Manifest& manifest);

// Intersects three single-task manifests on (video_id, frame_index); only
// frames valid in all three survive, each record carrying all three labels.
Manifest join_multitask(const Manifest& va, const Manifest& expr, const Manifest& au);

// --- statistics and sampling ------------------------------------------------

struct VaStats {
  double min = 0.0;
  double mean = 0.0;
  double max = 0.0;
};

struct StatsReport {
  std::string set_name;
  std::optional<TaskKind> task;
  std::size_t total = 0;
  std::size_t valid = 0;
  std::array<std::size_t, kExprClassCount> expr_counts{};
  std::array<std::size_t, kAuCount> au_positive{};
  std::array<double, kAuCount> au_rate{};
  VaStats valence;
  VaStats arousal;

  std::string to_text() const;
  std::string to_json() const;
};

StatsReport dataset_stats(const Manifest& manifest);

// Uniform draw over the manifest's records; a fixed seed always yields the
// same record. Throws EmptyManifest.
const FrameRecord& sample_record(const Manifest& manifest, std::uint64_t seed);

// Multi-line human-readable description of one record (video, frame, image
// name, annotations).
std::string describe_record(const FrameRecord& record,
                            std::string_view pattern = kDefaultImagePattern);

// --- serialization -----------------------------------------------------------

// CSV export: video_id,frame,valid,<label columns per task>.
std::string manifest_to_csv(const Manifest& manifest);

// Canonical annotation-file text per video, in the same format the parsers
// consume. Re-parsing the result reproduces the manifest.
std::map<std::string, std::string> manifest_to_annotation_texts(const Manifest& manifest);

}  // namespace affkit
