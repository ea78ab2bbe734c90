#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string_view>

namespace affkit {

// The three per-frame annotation tasks.
enum class TaskKind { Va, Expr, Au };

inline constexpr std::size_t kExprClassCount = 8;
inline constexpr std::size_t kAuCount = 12;
inline constexpr std::size_t kVaDims = 2;

inline constexpr std::array<std::string_view, kExprClassCount> kExprClassNames = {
    "Neutral", "Anger", "Disgust", "Fear",
    "Happiness", "Sadness", "Surprise", "Other",
};

inline constexpr std::array<std::string_view, kAuCount> kAuNames = {
    "AU1", "AU2", "AU4", "AU6", "AU7", "AU10",
    "AU12", "AU15", "AU23", "AU24", "AU25", "AU26",
};

inline constexpr std::array<std::string_view, kAuCount> kAuActions = {
    "inner brow raiser", "outer brow raiser", "brow lowerer", "cheek raiser",
    "lid tightener", "upper lip raiser", "lip corner puller",
    "lip corner depressor", "lip tightener", "lip pressor", "lips part",
    "jaw drop",
};

constexpr std::string_view task_name(TaskKind task) {
  switch (task) {
    case TaskKind::Va: return "va";
    case TaskKind::Expr: return "expr";
    case TaskKind::Au: return "au";
  }
  return "?";
}

constexpr std::optional<TaskKind> task_from_name(std::string_view name) {
  if (name == "va") return TaskKind::Va;
  if (name == "expr") return TaskKind::Expr;
  if (name == "au") return TaskKind::Au;
  return std::nullopt;
}

}  // namespace affkit
