#include <doctest.h>

#include <array>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "affkit/annotations.hpp"
#include "affkit/errors.hpp"
#include "affkit/rng.hpp"
#include "affkit/text.hpp"
#include "test_util.hpp"

using namespace affkit;

namespace {

Manifest manifest_of(TaskKind task, std::vector<FrameRecord> records) {
  Manifest m;
  m.task = task;
  m.records = std::move(records);
  return m;
}

// Random well-formed annotation file with sentinels mixed in. Returns the
// text and the number of data lines.
std::pair<std::string, std::size_t> random_file(TaskKind task, Rng& rng,
                                                std::size_t max_rows = 30) {
  const std::size_t rows = 1 + rng.uniform_index(max_rows);
  std::string text;
  switch (task) {
    case TaskKind::Va: {
      text = "valence,arousal\n";
      for (std::size_t i = 0; i < rows; ++i) {
        if (rng.uniform() < 0.2) {
          text += "-5,-5\n";
        } else {
          text += format_double(rng.uniform(-1.0, 1.0)) + "," +
                  format_double(rng.uniform(-1.0, 1.0)) + "\n";
        }
      }
      break;
    }
    case TaskKind::Expr: {
      text = "Neutral,Anger,Disgust,Fear,Happiness,Sadness,Surprise,Other\n";
      for (std::size_t i = 0; i < rows; ++i) {
        const int cls = rng.uniform() < 0.2 ? -1
                                            : static_cast<int>(rng.uniform_index(8));
        text += std::to_string(cls) + "\n";
      }
      break;
    }
    case TaskKind::Au: {
      text = "AU1,AU2,AU4,AU6,AU7,AU10,AU12,AU15,AU23,AU24,AU25,AU26\n";
      for (std::size_t i = 0; i < rows; ++i) {
        const bool sentinel = rng.uniform() < 0.2;
        for (std::size_t k = 0; k < 12; ++k) {
          if (k) text += ",";
          int v = static_cast<int>(rng.uniform_index(2));
          if (sentinel && k == rng.uniform_index(12)) v = -1;
          text += std::to_string(v);
        }
        text += "\n";
      }
      break;
    }
  }
  return {text, rows};
}

}  // namespace

TEST_CASE("va parser handles the minimal well-formed file") {
  auto records = parse_va_file("valence,arousal\n0.5,-0.3", "v");
  REQUIRE(records.size() == 1);
  CHECK(records[0].frame_index == 1);
  CHECK(records[0].valid);
  CHECK(records[0].va->valence == 0.5);
  CHECK(records[0].va->arousal == -0.3);
}

TEST_CASE("va parser keeps sentinel rows as invalid records") {
  auto records = parse_va_file("valence,arousal\n-5,-5\n", "v");
  REQUIRE(records.size() == 1);
  CHECK_FALSE(records[0].valid);
  CHECK(records[0].va->sentinel());

  // A single -5 component is enough to disregard the frame.
  auto mixed = parse_va_file("valence,arousal\n-5,0.5\n", "v");
  CHECK_FALSE(mixed[0].valid);
  CHECK(mixed[0].va->sentinel());
}

TEST_CASE("va parser rejects a missing header") {
  CHECK_THROWS_AS(parse_va_file("0.5,-0.3", "v"), ParseError);
  try {
    parse_va_file("0.5,-0.3", "v");
  } catch (const ParseError& e) {
    CHECK(e.code() == ErrorCode::MissingHeader);
    CHECK(e.line_no() == 1);
  }
}

TEST_CASE("va parser header matching is case and whitespace tolerant") {
  CHECK(parse_va_file("Valence , Arousal\n0,0\n", "v").size() == 1);
  CHECK(parse_va_file("valence,arousal\r\n0.5,-0.3\r\n", "v").size() == 1);
}

TEST_CASE("va parser reports malformed rows and out-of-range values by line") {
  try {
    parse_va_file("valence,arousal\n0.5,0.5\nx,0\n", "v");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.code() == ErrorCode::MalformedRow);
    CHECK(e.line_no() == 3);
  }
  try {
    parse_va_file("valence,arousal\n1.5,0\n", "v");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.code() == ErrorCode::OutOfRange);
    CHECK(e.line_no() == 2);
  }
  CHECK_THROWS_AS(parse_va_file("valence,arousal\n0.1,0.2,0.3\n", "v"), ParseError);
}

TEST_CASE("expr parser maps classes and sentinels") {
  auto records = parse_expr_file(
      "Neutral,Anger,Disgust,Fear,Happiness,Sadness,Surprise,Other\n4\n-1\n", "v");
  REQUIRE(records.size() == 2);
  CHECK(records[0].expr->class_id == 4);
  CHECK(records[0].valid);
  CHECK(kExprClassNames[records[0].expr->class_id] == "Happiness");
  CHECK_FALSE(records[1].valid);
}

TEST_CASE("expr parser rejects out-of-range classes and non-integers") {
  const std::string header = "Neutral,Anger,Disgust,Fear,Happiness,Sadness,Surprise,Other\n";
  try {
    parse_expr_file(header + "9\n", "v");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.code() == ErrorCode::OutOfRange);
    CHECK(e.line_no() == 2);
  }
  CHECK_THROWS_AS(parse_expr_file(header + "1.5\n", "v"), ParseError);
  CHECK_THROWS_AS(parse_expr_file("4\n", "v"), ParseError);
}

TEST_CASE("au parser decodes activations and sentinel rows") {
  const std::string header = "AU1,AU2,AU4,AU6,AU7,AU10,AU12,AU15,AU23,AU24,AU25,AU26\n";
  auto records = parse_au_file(header + "1,0,0,0,0,0,1,0,0,0,1,0\n", "v");
  REQUIRE(records.size() == 1);
  CHECK(records[0].valid);
  // AU1, AU12, AU25 are positions 0, 6, 10 of the fixed order.
  CHECK(records[0].au->activations[0] == 1);
  CHECK(records[0].au->activations[6] == 1);
  CHECK(records[0].au->activations[10] == 1);
  CHECK(kAuNames[6] == "AU12");

  auto sentinel = parse_au_file(header + "0,0,0,0,0,0,0,0,0,0,0,-1\n", "v");
  CHECK_FALSE(sentinel[0].valid);
  CHECK(sentinel[0].au->sentinel());
}

TEST_CASE("au parser enforces arity and the {-1,0,1} alphabet") {
  const std::string header = "AU1,AU2,AU4,AU6,AU7,AU10,AU12,AU15,AU23,AU24,AU25,AU26\n";
  try {
    parse_au_file(header + "1,0,1\n", "v");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.code() == ErrorCode::WrongArity);
    CHECK(e.line_no() == 2);
  }
  CHECK_THROWS_AS(parse_au_file(header + "0,0,0,0,0,2,0,0,0,0,0,0\n", "v"), ParseError);
  CHECK_THROWS_AS(parse_au_file("1,0,0,0,0,0,1,0,0,0,1,0\n", "v"), ParseError);
}

TEST_CASE("every parser preserves valid + invalid = data lines on random files") {
  Rng rng(2024);
  for (TaskKind task : {TaskKind::Va, TaskKind::Expr, TaskKind::Au}) {
    for (int round = 0; round < 25; ++round) {
      auto [text, rows] = random_file(task, rng);
      auto records = parse_annotation_file(task, text, "v");
      CHECK(records.size() == rows);
      std::size_t valid = 0, invalid = 0;
      for (const auto& r : records) {
        (r.valid ? valid : invalid)++;
        // Nothing outside the documented value sets survives parsing.
        if (r.va) {
          for (double v : {r.va->valence, r.va->arousal}) {
            CHECK(((v >= -1.0 && v <= 1.0) || v == -5.0));
          }
        }
        if (r.expr) {
          CHECK(r.expr->class_id >= -1);
          CHECK(r.expr->class_id <= 7);
        }
        if (r.au) {
          for (auto a : r.au->activations) {
            CHECK((a == -1 || a == 0 || a == 1));
          }
        }
      }
      CHECK(valid + invalid == rows);
    }
  }
}

TEST_CASE("manifest round-trips through canonical annotation text") {
  Rng rng(7);
  for (TaskKind task : {TaskKind::Va, TaskKind::Expr, TaskKind::Au}) {
    std::vector<FrameRecord> records;
    for (const char* video : {"vid_a", "vid_b"}) {
      auto [text, rows] = random_file(task, rng);
      auto parsed = parse_annotation_file(task, text, video);
      records.insert(records.end(), parsed.begin(), parsed.end());
    }
    Manifest manifest = manifest_of(task, records);
    auto texts = manifest_to_annotation_texts(manifest);
    std::vector<FrameRecord> reparsed;
    for (const auto& [video, text] : texts) {
      auto parsed = parse_annotation_file(task, text, video);
      reparsed.insert(reparsed.end(), parsed.begin(), parsed.end());
    }
    CHECK(manifest.records == reparsed);
  }
}

TEST_CASE("build_manifest concatenates files in canonical order") {
  TempDir dir;
  write_text_file(dir.path / "b_video.txt", "valence,arousal\n0.1,0.1\n0.2,0.2\n0.3,0.3\n");
  write_text_file(dir.path / "a_video.txt", "valence,arousal\n0.4,0.4\n0.5,0.5\n0.6,0.6\n");
  Manifest manifest = build_manifest(dir.path, TaskKind::Va);
  REQUIRE(manifest.size() == 6);
  CHECK(manifest.records.front().video_id == "a_video");
  CHECK(manifest.records.back().video_id == "b_video");
  for (std::size_t i = 1; i < manifest.records.size(); ++i) {
    const auto& prev = manifest.records[i - 1];
    const auto& cur = manifest.records[i];
    CHECK((prev.video_id < cur.video_id ||
           (prev.video_id == cur.video_id && prev.frame_index < cur.frame_index)));
  }
}

TEST_CASE("build_manifest binds image paths and drops frames without images") {
  TempDir dir;
  const auto ann = dir.path / "ann";
  const auto img = dir.path / "img";
  write_text_file(ann / "vid.txt", "valence,arousal\n0.1,0.1\n0.2,0.2\n0.3,0.3\n");
  std::filesystem::create_directories(img / "vid");
  write_text_file(img / "vid" / "00002.jpg", "");
  Manifest manifest = build_manifest(ann, TaskKind::Va, img);
  REQUIRE(manifest.size() == 1);
  CHECK(manifest.records[0].frame_index == 2);
  CHECK(manifest.records[0].image_path ==
        (img / "vid" / "00002.jpg").string());
}

TEST_CASE("image_file_name applies the pattern placeholders") {
  CHECK(image_file_name("vid", 7) == "00007.jpg");
  CHECK(image_file_name("vid", 12345) == "12345.jpg");
  CHECK(image_file_name("vid", 7, "{video}_{frame:03}.png") == "vid_007.png");
  CHECK(image_file_name("vid", 7, "{frame}.jpg") == "7.jpg");
  CHECK_THROWS_AS(image_file_name("vid", 7, "{nope}.jpg"), Error);
}

TEST_CASE("build_manifest names the offending file and line on parse errors") {
  TempDir dir;
  write_text_file(dir.path / "good.txt", "valence,arousal\n0.1,0.1\n");
  write_text_file(dir.path / "broken.txt", "valence,arousal\n0.1\n");
  try {
    build_manifest(dir.path, TaskKind::Va);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.file() == "broken.txt");
    CHECK(e.line_no() == 2);
    CHECK(std::string(e.what()) ==
          "broken.txt: line 2: malformed row: expected 2 numeric fields");
  }
}

TEST_CASE("build_manifest rejects an empty directory") {
  TempDir dir;
  CHECK_THROWS_AS(build_manifest(dir.path, TaskKind::Va), Error);
}

TEST_CASE("build_manifest rejects two files with the same video stem") {
  TempDir dir;
  write_text_file(dir.path / "vid.txt", "valence,arousal\n0.1,0.1\n");
  write_text_file(dir.path / "vid.csv", "valence,arousal\n0.2,0.2\n");
  try {
    build_manifest(dir.path, TaskKind::Va);
    FAIL("expected duplicate-stem error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("duplicate video id") != std::string::npos);
  }
}

TEST_CASE("expr and au parsers tolerate CRLF line endings") {
  auto expr = parse_expr_file(
      "Neutral,Anger,Disgust,Fear,Happiness,Sadness,Surprise,Other\r\n4\r\n", "v");
  CHECK(expr.size() == 1);
  CHECK(expr[0].expr->class_id == 4);
  auto au = parse_au_file(
      "AU1,AU2,AU4,AU6,AU7,AU10,AU12,AU15,AU23,AU24,AU25,AU26\r\n"
      "1,0,0,0,0,0,0,0,0,0,0,0\r\n",
      "v");
  CHECK(au.size() == 1);
  CHECK(au[0].au->activations[0] == 1);
}

TEST_CASE("filter_valid keeps exactly the valid records and is idempotent") {
  auto records = parse_va_file("valence,arousal\n0.1,0.1\n-5,-5\n0.2,0.2\n", "v");
  Manifest manifest = manifest_of(TaskKind::Va, records);
  Manifest filtered = filter_valid(manifest);
  CHECK(filtered.size() == 2);
  CHECK(manifest.size() == filtered.size() + 1);
  CHECK(filter_valid(filtered).records == filtered.records);

  Manifest all_sentinel = manifest_of(
      TaskKind::Va, parse_va_file("valence,arousal\n-5,-5\n-5,-5\n", "v"));
  CHECK(filter_valid(all_sentinel).size() == 0);
}

TEST_CASE("filter_valid count matches a direct scan on AU sentinels") {
  const std::string header = "AU1,AU2,AU4,AU6,AU7,AU10,AU12,AU15,AU23,AU24,AU25,AU26\n";
  const std::string text = header +
                           "1,0,0,0,0,0,0,0,0,0,0,0\n"
                           "0,0,0,-1,0,0,0,0,0,0,0,0\n"
                           "0,1,0,0,0,0,0,0,0,0,0,0\n"
                           "-1,-1,0,0,0,0,0,0,0,0,0,0\n"
                           "0,0,0,0,0,0,0,0,0,0,0,1\n";
  Manifest manifest = manifest_of(TaskKind::Au, parse_au_file(text, "v"));
  // Oracle: count rows without any -1 by direct scan of the text.
  std::size_t expected = 0;
  for (auto line : split_lines(text)) {
    if (line.find("AU") != std::string_view::npos) continue;
    if (line.find("-1") == std::string_view::npos) ++expected;
  }
  CHECK(expected == 3);
  CHECK(filter_valid(manifest).size() == expected);
}

TEST_CASE("join_multitask intersects on (video, frame)") {
  auto va = manifest_of(TaskKind::Va,
                        parse_va_file("valence,arousal\n0.1,0.1\n0.2,0.2\n", "v"));
  auto expr = manifest_of(
      TaskKind::Expr,
      parse_expr_file("Neutral,Anger,Disgust,Fear,Happiness,Sadness,Surprise,Other"
                      "\n-1\n3\n5\n",
                      "v"));
  const std::string au_header =
      "AU1,AU2,AU4,AU6,AU7,AU10,AU12,AU15,AU23,AU24,AU25,AU26\n";
  auto au = manifest_of(TaskKind::Au,
                        parse_au_file(au_header + "-1,0,0,0,0,0,0,0,0,0,0,0\n"
                                                  "1,0,0,0,0,0,0,0,0,0,0,0\n",
                                      "v"));
  // VA valid on {1,2}, EXPR on {2,3}, AU on {2}.
  Manifest multi = join_multitask(va, expr, au);
  REQUIRE(multi.size() == 1);
  CHECK(multi.is_multi());
  const auto& record = multi.records[0];
  CHECK(record.frame_index == 2);
  CHECK(record.va->valence == 0.2);
  CHECK(record.expr->class_id == 3);
  CHECK(record.au->activations[0] == 1);
}

TEST_CASE("join_multitask with an empty input is empty") {
  auto va = manifest_of(TaskKind::Va, {});
  auto expr = manifest_of(TaskKind::Expr,
                          parse_expr_file("Neutral,Anger,Disgust,Fear,Happiness,"
                                          "Sadness,Surprise,Other\n1\n",
                                          "v"));
  auto au = manifest_of(
      TaskKind::Au,
      parse_au_file("AU1,AU2,AU4,AU6,AU7,AU10,AU12,AU15,AU23,AU24,AU25,AU26\n"
                    "0,0,0,0,0,0,0,0,0,0,0,0\n",
                    "v"));
  CHECK(join_multitask(va, expr, au).size() == 0);
}

TEST_CASE("join_multitask matches a brute-force set intersection") {
  Rng rng(99);
  auto random_manifest = [&](TaskKind task) {
    std::vector<FrameRecord> records;
    std::set<std::pair<std::string, int>> used;
    for (int i = 0; i < 100; ++i) {
      FrameRecord r;
      r.video_id = rng.uniform() < 0.5 ? "vid_a" : "vid_b";
      r.frame_index = 1 + static_cast<int>(rng.uniform_index(80));
      if (!used.insert({r.video_id, r.frame_index}).second) continue;
      r.valid = true;
      if (task == TaskKind::Va) r.va = VaLabel{0.0, 0.0};
      if (task == TaskKind::Expr) r.expr = ExprLabel{0};
      if (task == TaskKind::Au) r.au = AuLabel{};
      records.push_back(std::move(r));
    }
    return manifest_of(task, std::move(records));
  };
  auto va = random_manifest(TaskKind::Va);
  auto expr = random_manifest(TaskKind::Expr);
  auto au = random_manifest(TaskKind::Au);

  auto key_set = [](const Manifest& m) {
    std::set<std::pair<std::string, int>> keys;
    for (const auto& r : m.records) keys.insert({r.video_id, r.frame_index});
    return keys;
  };
  // Oracle: hash-set style triple intersection.
  std::set<std::pair<std::string, int>> expected;
  auto a = key_set(va), b = key_set(expr), c = key_set(au);
  for (const auto& k : a) {
    if (b.count(k) && c.count(k)) expected.insert(k);
  }

  Manifest joined = join_multitask(va, expr, au);
  CHECK(key_set(joined) == expected);
  CHECK(joined.size() <= std::min({va.size(), expr.size(), au.size()}));

  // Permuting the inputs cannot change the key set (arguments are by task).
  Manifest joined_again = join_multitask(va, expr, au);
  CHECK(key_set(joined_again) == expected);
}

TEST_CASE("join_multitask enforces the (va, expr, au) argument order") {
  auto va = manifest_of(TaskKind::Va,
                        parse_va_file("valence,arousal\n0.1,0.1\n", "v"));
  auto expr = manifest_of(
      TaskKind::Expr,
      parse_expr_file(
          "Neutral,Anger,Disgust,Fear,Happiness,Sadness,Surprise,Other\n1\n", "v"));
  auto au = manifest_of(
      TaskKind::Au,
      parse_au_file("AU1,AU2,AU4,AU6,AU7,AU10,AU12,AU15,AU23,AU24,AU25,AU26\n"
                    "0,0,0,0,0,0,0,0,0,0,0,0\n",
                    "v"));
  CHECK_NOTHROW(join_multitask(va, expr, au));
  CHECK_THROWS_AS(join_multitask(expr, va, au), Error);
}

TEST_CASE("dataset_stats covers all three sections for a multi-task manifest") {
  auto va = manifest_of(TaskKind::Va,
                        parse_va_file("valence,arousal\n0.5,-0.25\n0.1,0.1\n", "v"));
  auto expr = manifest_of(
      TaskKind::Expr,
      parse_expr_file(
          "Neutral,Anger,Disgust,Fear,Happiness,Sadness,Surprise,Other\n4\n4\n", "v"));
  auto au = manifest_of(
      TaskKind::Au,
      parse_au_file("AU1,AU2,AU4,AU6,AU7,AU10,AU12,AU15,AU23,AU24,AU25,AU26\n"
                    "1,0,0,0,0,0,0,0,0,0,0,0\n"
                    "1,0,0,0,0,0,0,0,0,0,0,1\n",
                    "v"));
  Manifest multi = join_multitask(va, expr, au);
  REQUIRE(multi.size() == 2);
  StatsReport report = dataset_stats(multi);
  CHECK(report.valid == 2);
  CHECK(report.expr_counts[4] == 2);
  CHECK(report.au_positive[0] == 2);
  CHECK(report.au_rate[11] == doctest::Approx(0.5));
  CHECK(report.valence.max == doctest::Approx(0.5));
  const std::string text = report.to_text();
  CHECK(text.find("Expression") != std::string::npos);
  CHECK(text.find("Action Unit") != std::string::npos);
  CHECK(text.find("Dimension") != std::string::npos);

  const std::string csv = manifest_to_csv(multi);
  CHECK(csv.starts_with("video_id,frame,valid,valence,arousal,expr,AU1"));
}

TEST_CASE("dataset_stats counts expression classes") {
  auto manifest = manifest_of(
      TaskKind::Expr,
      parse_expr_file(
          "Neutral,Anger,Disgust,Fear,Happiness,Sadness,Surprise,Other\n0\n0\n4\n",
          "v"));
  StatsReport report = dataset_stats(manifest);
  CHECK(report.total == 3);
  CHECK(report.valid == 3);
  CHECK(report.expr_counts[0] == 2);
  CHECK(report.expr_counts[4] == 1);

  std::size_t sum = 0;
  for (auto c : report.expr_counts) sum += c;
  CHECK(sum == report.valid);
  CHECK(report.to_text().find("Total number of images") != std::string::npos);
}

TEST_CASE("dataset_stats AU positive rates match a direct count") {
  const std::string header = "AU1,AU2,AU4,AU6,AU7,AU10,AU12,AU15,AU23,AU24,AU25,AU26\n";
  // AU25 (position 10) active in 3 of 4 records.
  auto manifest = manifest_of(TaskKind::Au,
                              parse_au_file(header + "0,0,0,0,0,0,0,0,0,0,1,0\n"
                                                     "0,0,0,0,0,0,0,0,0,0,1,0\n"
                                                     "0,0,0,0,0,0,0,0,0,0,1,0\n"
                                                     "0,0,0,0,0,0,0,0,0,0,0,0\n",
                                            "v"));
  StatsReport report = dataset_stats(manifest);
  CHECK(report.au_positive[10] == 3);
  CHECK(report.au_rate[10] == doctest::Approx(0.75));
}

TEST_CASE("dataset_stats VA ranges ignore sentinel rows") {
  auto manifest = manifest_of(
      TaskKind::Va, parse_va_file("valence,arousal\n-0.5,0.25\n-5,-5\n0.5,0.75\n", "v"));
  StatsReport report = dataset_stats(manifest);
  CHECK(report.valence.min == doctest::Approx(-0.5));
  CHECK(report.valence.max == doctest::Approx(0.5));
  CHECK(report.valence.mean == doctest::Approx(0.0));
  CHECK(report.arousal.mean == doctest::Approx(0.5));
}

TEST_CASE("sample_record is deterministic per seed") {
  auto manifest = manifest_of(
      TaskKind::Va,
      parse_va_file("valence,arousal\n0.1,0.1\n0.2,0.2\n0.3,0.3\n0.4,0.4\n", "v"));
  const auto& first = sample_record(manifest, 123);
  const auto& second = sample_record(manifest, 123);
  CHECK(first == second);

  Manifest singleton = manifest_of(
      TaskKind::Va, parse_va_file("valence,arousal\n0.9,0.9\n", "v"));
  CHECK(sample_record(singleton, 0) == singleton.records[0]);
  CHECK(sample_record(singleton, 999) == singleton.records[0]);

  CHECK_THROWS_AS(sample_record(manifest_of(TaskKind::Va, {}), 1), Error);
}

TEST_CASE("sample_record draws are near-uniform over seeds") {
  auto manifest = manifest_of(
      TaskKind::Va,
      parse_va_file("valence,arousal\n0.1,0.1\n0.2,0.2\n0.3,0.3\n0.4,0.4\n", "v"));
  std::array<int, 4> counts{};
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    ++counts[static_cast<std::size_t>(sample_record(manifest, seed).frame_index - 1)];
  }
  // Frequency oracle: binomial(1000, 1/4) stays above 200 with huge margin.
  for (int c : counts) CHECK(c >= 200);
}

TEST_CASE("describe_record prints video, frame, image name and annotations") {
  auto manifest = manifest_of(
      TaskKind::Va, parse_va_file("valence,arousal\n0.5,-0.3\n", "vid_a"));
  std::string text = describe_record(manifest.records[0]);
  CHECK(text.find("vid_a") != std::string::npos);
  CHECK(text.find("frame: 1") != std::string::npos);
  CHECK(text.find("00001.jpg") != std::string::npos);
  CHECK(text.find("valence=0.5") != std::string::npos);
}

TEST_CASE("golden corpus produces byte-identical manifests") {
  const std::array<std::pair<TaskKind, const char*>, 3> tasks = {
      {{TaskKind::Va, "va"}, {TaskKind::Expr, "expr"}, {TaskKind::Au, "au"}}};
  for (const auto& [task, name] : tasks) {
    CAPTURE(name);
    Manifest manifest = build_manifest(golden_dir() / name / "good", task);
    const std::string expected =
        read_text_file(golden_dir() / name / "expected_manifest.csv");
    CHECK(manifest_to_csv(manifest) == expected);
  }
}

TEST_CASE("golden corpus malformed files produce the expected diagnostics") {
  const std::array<std::pair<TaskKind, const char*>, 3> tasks = {
      {{TaskKind::Va, "va"}, {TaskKind::Expr, "expr"}, {TaskKind::Au, "au"}}};
  for (const auto& [task, name] : tasks) {
    const auto bad_dir = golden_dir() / name / "bad";
    for (const auto& entry : std::filesystem::directory_iterator(bad_dir)) {
      if (entry.path().extension() != ".txt") continue;
      CAPTURE(entry.path().string());
      const std::string expected =
          read_text_file(entry.path().parent_path() /
                         (entry.path().stem().string() + ".expected"));
      try {
        parse_annotation_file(task, read_text_file(entry.path()),
                              entry.path().stem().string());
        FAIL("expected a ParseError");
      } catch (const ParseError& e) {
        CHECK(std::string(e.with_file(entry.path().filename().string()).what()) ==
              expected);
      }
    }
  }
}
