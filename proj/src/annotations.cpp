#include "affkit/annotations.hpp"

#include <algorithm>
#include <cctype>
#include <limits>
#include <span>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

#include "affkit/errors.hpp"
#include "affkit/rng.hpp"
#include "affkit/text.hpp"

namespace affkit {

namespace {

bool has_alpha(std::string_view s) {
  return std::any_of(s.begin(), s.end(), [](unsigned char c) {
    return std::isalpha(c) != 0;
  });
}

std::string strip_spaces_lower(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (unsigned char c : s) {
    if (!std::isspace(c)) out.push_back(static_cast<char>(std::tolower(c)));
  }
  return out;
}

void sort_canonical(std::vector<FrameRecord>& records) {
  std::sort(records.begin(), records.end(),
            [](const FrameRecord& a, const FrameRecord& b) {
              if (a.video_id != b.video_id) return a.video_id < b.video_id;
              return a.frame_index < b.frame_index;
            });
}

std::string join_names(std::span<const std::string_view> names) {
  std::string out;
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (i) out += ',';
    out += names[i];
  }
  return out;
}

// "Train_Set" -> "train"; used for the paper-style count line.
std::string set_display_name(std::string_view source) {
  if (source.empty()) return "data";
  std::string stem = std::filesystem::path(source).stem().string();
  if (stem.empty()) return "data";
  std::string name = to_lower(stem);
  std::replace(name.begin(), name.end(), '_', ' ');
  std::replace(name.begin(), name.end(), '-', ' ');
  if (name.size() > 4 && name.ends_with(" set")) {
    name.resize(name.size() - 4);
  }
  auto trimmed = trim(name);
  return trimmed.empty() ? std::string("data") : std::string(trimmed);
}

}  // namespace

std::vector<FrameRecord> parse_va_file(std::string_view text, std::string video_id) {
  auto lines = split_lines(text);
  if (lines.empty() || strip_spaces_lower(lines[0]) != "valence,arousal") {
    throw ParseError(ErrorCode::MissingHeader, 1,
                     "missing header: expected \"valence,arousal\"");
  }
  std::vector<FrameRecord> records;
  records.reserve(lines.size() - 1);
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const std::size_t line_no = i + 1;
    auto fields = split(lines[i], ',');
    if (fields.size() != 2) {
      throw ParseError(ErrorCode::MalformedRow, line_no,
                       "malformed row: expected 2 numeric fields");
    }
    VaLabel label;
    double* out[2] = {&label.valence, &label.arousal};
    for (int k = 0; k < 2; ++k) {
      auto value = parse_double(fields[k]);
      if (!value) {
        throw ParseError(ErrorCode::MalformedRow, line_no,
                         "malformed row: expected 2 numeric fields");
      }
      if (!((*value >= -1.0 && *value <= 1.0) || *value == -5.0)) {
        throw ParseError(ErrorCode::OutOfRange, line_no,
                         "value out of range: " + std::string(trim(fields[k])) +
                             " (expected [-1,1] or -5)");
      }
      *out[k] = *value;
    }
    FrameRecord record;
    record.video_id = video_id;
    record.frame_index = static_cast<int>(i);
    record.valid = label.valid();
    record.va = label;
    records.push_back(std::move(record));
  }
  return records;
}

std::vector<FrameRecord> parse_expr_file(std::string_view text, std::string video_id) {
  auto lines = split_lines(text);
  if (lines.empty() || !has_alpha(lines[0])) {
    throw ParseError(ErrorCode::MissingHeader, 1,
                     "missing header: expected expression category names");
  }
  std::vector<FrameRecord> records;
  records.reserve(lines.size() - 1);
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const std::size_t line_no = i + 1;
    auto value = parse_int(lines[i]);
    if (!value) {
      throw ParseError(ErrorCode::MalformedRow, line_no,
                       "malformed row: expected a single integer");
    }
    if (*value < -1 || *value >= static_cast<long long>(kExprClassCount)) {
      throw ParseError(ErrorCode::OutOfRange, line_no,
                       "value out of range: " + std::string(trim(lines[i])) +
                           " (expected -1..7)");
    }
    FrameRecord record;
    record.video_id = video_id;
    record.frame_index = static_cast<int>(i);
    record.expr = ExprLabel{static_cast<int>(*value)};
    record.valid = record.expr->valid();
    records.push_back(std::move(record));
  }
  return records;
}

std::vector<FrameRecord> parse_au_file(std::string_view text, std::string video_id) {
  auto lines = split_lines(text);
  if (lines.empty() || !has_alpha(lines[0])) {
    throw ParseError(ErrorCode::MissingHeader, 1,
                     "missing header: expected AU column names");
  }
  std::vector<FrameRecord> records;
  records.reserve(lines.size() - 1);
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const std::size_t line_no = i + 1;
    auto fields = split(lines[i], ',');
    if (fields.size() != kAuCount) {
      throw ParseError(ErrorCode::WrongArity, line_no,
                       "wrong arity: expected 12 fields, got " +
                           std::to_string(fields.size()));
    }
    AuLabel label;
    for (std::size_t k = 0; k < kAuCount; ++k) {
      auto value = parse_int(fields[k]);
      if (!value || (*value != -1 && *value != 0 && *value != 1)) {
        throw ParseError(ErrorCode::OutOfRange, line_no,
                         "value out of range: " + std::string(trim(fields[k])) +
                             " (expected -1, 0, or 1)");
      }
      label.activations[k] = static_cast<std::int8_t>(*value);
    }
    FrameRecord record;
    record.video_id = video_id;
    record.frame_index = static_cast<int>(i);
    record.valid = label.valid();
    record.au = label;
    records.push_back(std::move(record));
  }
  return records;
}

std::vector<FrameRecord> parse_annotation_file(TaskKind task, std::string_view text,
                                               std::string video_id) {
  switch (task) {
    case TaskKind::Va: return parse_va_file(text, std::move(video_id));
    case TaskKind::Expr: return parse_expr_file(text, std::move(video_id));
    case TaskKind::Au: return parse_au_file(text, std::move(video_id));
  }
  throw Error(ErrorCode::BadConfig, "unknown task");
}

std::string image_file_name(std::string_view video_id, int frame_index,
                            std::string_view pattern) {
  std::string out;
  out.reserve(pattern.size() + 8);
  std::size_t i = 0;
  while (i < pattern.size()) {
    if (pattern[i] != '{') {
      out.push_back(pattern[i++]);
      continue;
    }
    std::size_t close = pattern.find('}', i);
    if (close == std::string_view::npos) {
      out.push_back(pattern[i++]);
      continue;
    }
    std::string_view spec = pattern.substr(i + 1, close - i - 1);
    if (spec == "video") {
      out += video_id;
    } else if (spec == "frame" || spec.starts_with("frame:")) {
      std::size_t width = 0;
      if (auto colon = spec.find(':'); colon != std::string_view::npos) {
        auto width_str = spec.substr(colon + 1);
        if (!width_str.empty() && width_str.front() == '0') {
          width_str.remove_prefix(1);
        }
        if (auto parsed = parse_int(width_str)) width = static_cast<std::size_t>(*parsed);
      }
      std::string digits = std::to_string(frame_index);
      if (digits.size() < width) {
        out.append(width - digits.size(), '0');
      }
      out += digits;
    } else {
      throw Error(ErrorCode::BadConfig,
                  "unknown placeholder {" + std::string(spec) + "} in image pattern");
    }
    i = close + 1;
  }
  return out;
}

Manifest build_manifest(const std::filesystem::path& annotation_dir, TaskKind task,
                        const std::optional<std::filesystem::path>& image_dir,
                        std::string_view pattern) {
  if (!std::filesystem::is_directory(annotation_dir)) {
    throw Error(ErrorCode::IoError,
                "annotation directory does not exist: " + annotation_dir.string());
  }
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(annotation_dir)) {
    if (entry.is_regular_file()) files.push_back(entry.path());
  }
  if (files.empty()) {
    throw Error(ErrorCode::EmptyDirectory,
                "no annotation files in " + annotation_dir.string());
  }
  std::sort(files.begin(), files.end());

  Manifest manifest;
  manifest.task = task;
  manifest.source = annotation_dir.string();
  manifest.image_pattern = std::string(pattern);
  std::unordered_map<std::string, std::string> stem_to_file;
  for (const auto& file : files) {
    std::string video_id = file.stem().string();
    if (auto [it, inserted] = stem_to_file.emplace(video_id, file.filename().string());
        !inserted) {
      throw Error(ErrorCode::BadConfig,
                  "duplicate video id \"" + video_id + "\" from files " + it->second +
                      " and " + file.filename().string());
    }
    std::vector<FrameRecord> records;
    try {
      records = parse_annotation_file(task, read_text_file(file), video_id);
    } catch (const ParseError& e) {
      throw e.with_file(file.filename().string());
    }
    for (auto& record : records) {
      if (image_dir) {
        auto image = *image_dir / video_id /
                     image_file_name(video_id, record.frame_index, pattern);
        if (!std::filesystem::exists(image)) continue;
        record.image_path = image.string();
      }
      manifest.records.push_back(std::move(record));
    }
  }
  sort_canonical(manifest.records);
  return manifest;
}

Manifest filter_valid(const Manifest& manifest) {
  Manifest out;
  out.task = manifest.task;
  out.source = manifest.source;
  out.image_pattern = manifest.image_pattern;
  out.records.reserve(manifest.records.size());
  for (const auto& record : manifest.records) {
    if (record.valid) out.records.push_back(record);
  }
  return out;
}

namespace {

std::string frame_key(const std::string& video_id, int frame_index) {
  return video_id + '\x1f' + std::to_string(frame_index);
}

}  // namespace

Manifest join_multitask(const Manifest& va, const Manifest& expr, const Manifest& au) {
  if (va.task != TaskKind::Va || expr.task != TaskKind::Expr || au.task != TaskKind::Au) {
    throw Error(ErrorCode::BadConfig,
                "join_multitask expects (va, expr, au) manifests in that order");
  }
  std::unordered_map<std::string, const FrameRecord*> expr_by_key, au_by_key;
  for (const auto& record : expr.records) {
    if (record.valid) expr_by_key.emplace(frame_key(record.video_id, record.frame_index), &record);
  }
  for (const auto& record : au.records) {
    if (record.valid) au_by_key.emplace(frame_key(record.video_id, record.frame_index), &record);
  }

  Manifest out;
  out.task = std::nullopt;
  out.image_pattern = va.image_pattern;
  for (const auto& record : va.records) {
    if (!record.valid) continue;
    auto key = frame_key(record.video_id, record.frame_index);
    auto expr_it = expr_by_key.find(key);
    if (expr_it == expr_by_key.end()) continue;
    auto au_it = au_by_key.find(key);
    if (au_it == au_by_key.end()) continue;
    FrameRecord merged;
    merged.video_id = record.video_id;
    merged.frame_index = record.frame_index;
    merged.va = record.va;
    merged.expr = expr_it->second->expr;
    merged.au = au_it->second->au;
    merged.valid = true;
    merged.image_path = !record.image_path.empty()        ? record.image_path
                        : !expr_it->second->image_path.empty() ? expr_it->second->image_path
                                                               : au_it->second->image_path;
    out.records.push_back(std::move(merged));
  }
  sort_canonical(out.records);
  return out;
}

StatsReport dataset_stats(const Manifest& manifest) {
  StatsReport report;
  report.set_name = set_display_name(manifest.source);
  report.task = manifest.task;
  report.total = manifest.records.size();

  double v_min = std::numeric_limits<double>::infinity();
  double v_max = -std::numeric_limits<double>::infinity();
  double a_min = v_min, a_max = v_max;
  double v_sum = 0.0, a_sum = 0.0;
  std::size_t va_count = 0, au_count = 0;

  for (const auto& record : manifest.records) {
    if (!record.valid) continue;
    ++report.valid;
    if (record.expr) {
      ++report.expr_counts[static_cast<std::size_t>(record.expr->class_id)];
    }
    if (record.au) {
      ++au_count;
      for (std::size_t k = 0; k < kAuCount; ++k) {
        if (record.au->activations[k] == 1) ++report.au_positive[k];
      }
    }
    if (record.va) {
      ++va_count;
      v_min = std::min(v_min, record.va->valence);
      v_max = std::max(v_max, record.va->valence);
      v_sum += record.va->valence;
      a_min = std::min(a_min, record.va->arousal);
      a_max = std::max(a_max, record.va->arousal);
      a_sum += record.va->arousal;
    }
  }
  if (va_count > 0) {
    report.valence = {v_min, v_sum / static_cast<double>(va_count), v_max};
    report.arousal = {a_min, a_sum / static_cast<double>(va_count), a_max};
  }
  for (std::size_t k = 0; k < kAuCount; ++k) {
    report.au_rate[k] = au_count == 0 ? 0.0
                                      : static_cast<double>(report.au_positive[k]) /
                                            static_cast<double>(au_count);
  }
  return report;
}

std::string StatsReport::to_text() const {
  std::ostringstream out;
  out << "Total number of images in " << set_name << " set: " << valid << "\n";
  out << "Frames: " << total << " total, " << valid << " valid, " << (total - valid)
      << " invalid\n";
  const bool multi = !task.has_value();
  if (multi || task == TaskKind::Expr) {
    out << "\nExpression     Count\n";
    for (std::size_t c = 0; c < kExprClassCount; ++c) {
      out << kExprClassNames[c];
      out << std::string(15 - kExprClassNames[c].size(), ' ');
      out << expr_counts[c] << "\n";
    }
  }
  if (multi || task == TaskKind::Au) {
    out << "\nAction Unit    Positive   Rate\n";
    for (std::size_t k = 0; k < kAuCount; ++k) {
      out << kAuNames[k];
      out << std::string(15 - kAuNames[k].size(), ' ');
      std::string count = std::to_string(au_positive[k]);
      out << count << std::string(count.size() < 11 ? 11 - count.size() : 1, ' ');
      out << format_fixed(au_rate[k], 4) << "\n";
    }
  }
  if (multi || task == TaskKind::Va) {
    out << "\nDimension   Min        Mean       Max\n";
    const VaStats* dims[2] = {&valence, &arousal};
    const char* dim_names[2] = {"valence", "arousal"};
    for (int d = 0; d < 2; ++d) {
      out << dim_names[d] << "     ";
      for (double v : {dims[d]->min, dims[d]->mean, dims[d]->max}) {
        std::string s = format_fixed(v, 4);
        out << s << std::string(s.size() < 11 ? 11 - s.size() : 1, ' ');
      }
      out << "\n";
    }
  }
  return out.str();
}

std::string StatsReport::to_json() const {
  nlohmann::json j;
  j["set"] = set_name;
  j["task"] = task ? std::string(task_name(*task)) : std::string("multi");
  j["total"] = total;
  j["valid"] = valid;
  j["invalid"] = total - valid;
  const bool multi = !task.has_value();
  if (multi || task == TaskKind::Expr) {
    nlohmann::json counts;
    for (std::size_t c = 0; c < kExprClassCount; ++c) {
      counts[std::string(kExprClassNames[c])] = expr_counts[c];
    }
    j["expr_counts"] = counts;
  }
  if (multi || task == TaskKind::Au) {
    nlohmann::json au;
    for (std::size_t k = 0; k < kAuCount; ++k) {
      au[std::string(kAuNames[k])] = {{"positive", au_positive[k]},
                                      {"rate", au_rate[k]}};
    }
    j["au"] = au;
  }
  if (multi || task == TaskKind::Va) {
    j["valence"] = {{"min", valence.min}, {"mean", valence.mean}, {"max", valence.max}};
    j["arousal"] = {{"min", arousal.min}, {"mean", arousal.mean}, {"max", arousal.max}};
  }
  return j.dump(2);
}

const FrameRecord& sample_record(const Manifest& manifest, std::uint64_t seed) {
  if (manifest.records.empty()) {
    throw Error(ErrorCode::EmptyManifest, "cannot sample from an empty manifest");
  }
  Rng rng(seed);
  return manifest.records[rng.uniform_index(manifest.records.size())];
}

std::string describe_record(const FrameRecord& record, std::string_view pattern) {
  std::ostringstream out;
  out << "video: " << record.video_id << "\n";
  out << "frame: " << record.frame_index << "\n";
  out << "image: "
      << (record.image_path.empty()
              ? image_file_name(record.video_id, record.frame_index, pattern)
              : record.image_path)
      << "\n";
  if (record.va) {
    out << "va: valence=" << format_double(record.va->valence)
        << " arousal=" << format_double(record.va->arousal);
    if (!record.va->valid()) out << " (disregarded)";
    out << "\n";
  }
  if (record.expr) {
    out << "expr: " << record.expr->class_id;
    if (record.expr->valid()) {
      out << " (" << kExprClassNames[static_cast<std::size_t>(record.expr->class_id)]
          << ")";
    } else {
      out << " (disregarded)";
    }
    out << "\n";
  }
  if (record.au) {
    out << "au:";
    if (!record.au->valid()) {
      out << " (disregarded)";
    } else {
      bool any = false;
      for (std::size_t k = 0; k < kAuCount; ++k) {
        if (record.au->activations[k] == 1) {
          out << " " << kAuNames[k];
          any = true;
        }
      }
      if (!any) out << " none active";
    }
    out << "\n";
  }
  return out.str();
}

namespace {

void append_label_columns(std::string& out, const FrameRecord& record,
                          std::optional<TaskKind> task) {
  const bool multi = !task.has_value();
  if (multi || task == TaskKind::Va) {
    const VaLabel label = record.va.value_or(VaLabel{});
    out += ',';
    out += format_double(label.valence);
    out += ',';
    out += format_double(label.arousal);
  }
  if (multi || task == TaskKind::Expr) {
    out += ',';
    out += std::to_string(record.expr.value_or(ExprLabel{}).class_id);
  }
  if (multi || task == TaskKind::Au) {
    const AuLabel label = record.au.value_or(AuLabel{});
    for (std::size_t k = 0; k < kAuCount; ++k) {
      out += ',';
      out += std::to_string(static_cast<int>(label.activations[k]));
    }
  }
}

}  // namespace

std::string manifest_to_csv(const Manifest& manifest) {
  std::string out = "video_id,frame,valid";
  const bool multi = manifest.is_multi();
  if (multi || manifest.task == TaskKind::Va) out += ",valence,arousal";
  if (multi || manifest.task == TaskKind::Expr) out += ",expr";
  if (multi || manifest.task == TaskKind::Au) {
    for (auto name : kAuNames) {
      out += ',';
      out += name;
    }
  }
  out += '\n';
  for (const auto& record : manifest.records) {
    out += record.video_id;
    out += ',';
    out += std::to_string(record.frame_index);
    out += ',';
    out += record.valid ? '1' : '0';
    append_label_columns(out, record, manifest.task);
    out += '\n';
  }
  return out;
}

std::map<std::string, std::string> manifest_to_annotation_texts(const Manifest& manifest) {
  if (manifest.is_multi()) {
    throw Error(ErrorCode::BadConfig,
                "annotation text export is defined for single-task manifests");
  }
  std::map<std::string, std::string> texts;
  std::string header;
  switch (*manifest.task) {
    case TaskKind::Va: header = "valence,arousal"; break;
    case TaskKind::Expr: header = join_names(kExprClassNames); break;
    case TaskKind::Au: header = join_names(kAuNames); break;
  }
  for (const auto& record : manifest.records) {
    auto& text = texts[record.video_id];
    if (text.empty()) {
      text = header;
      text += '\n';
    }
    std::string row;
    switch (*manifest.task) {
      case TaskKind::Va:
        row = format_double(record.va->valence) + "," + format_double(record.va->arousal);
        break;
      case TaskKind::Expr:
        row = std::to_string(record.expr->class_id);
        break;
      case TaskKind::Au: {
        for (std::size_t k = 0; k < kAuCount; ++k) {
          if (k) row += ',';
          row += std::to_string(static_cast<int>(record.au->activations[k]));
        }
        break;
      }
    }
    text += row;
    text += '\n';
  }
  return texts;
}

}  // namespace affkit
