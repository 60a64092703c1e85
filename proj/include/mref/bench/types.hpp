#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace mref::bench {

enum class TaskKind {
  ObjectComposition,
  SpatialComposition,
  AttributeDisentanglement,
  ComponentTransfer,
  FgBgComposition,
  StoryGeneration,
};

inline constexpr std::array<TaskKind, 6> kAllTasks = {
    TaskKind::ObjectComposition, TaskKind::SpatialComposition,
    TaskKind::AttributeDisentanglement, TaskKind::ComponentTransfer,
    TaskKind::FgBgComposition, TaskKind::StoryGeneration,
};

enum class EvalDimension {
  InstructionFollowing,   // A
  Identity,               // B
  Structure,              // C
  CrossRefConsistency,    // D
  Causality,              // E
  TextGrounding,          // F
  OverallUsability,       // G
};

inline constexpr std::array<EvalDimension, 7> kAllDimensions = {
    EvalDimension::InstructionFollowing, EvalDimension::Identity,
    EvalDimension::Structure,            EvalDimension::CrossRefConsistency,
    EvalDimension::Causality,            EvalDimension::TextGrounding,
    EvalDimension::OverallUsability,
};

/// Manifest key, e.g. "object_composition".
std::string_view to_string(TaskKind task) noexcept;
/// Short column label used in report tables, e.g. "FG/BG".
std::string_view label(TaskKind task) noexcept;
TaskKind parse_task(std::string_view text);  // throws FormatError

/// Single letter "A".."G".
std::string_view to_string(EvalDimension dim) noexcept;
/// Human-readable name, e.g. "Cross-Reference Consistency".
std::string_view label(EvalDimension dim) noexcept;
EvalDimension parse_dimension(std::string_view text);  // throws FormatError

/// Dimensions a task scores unless a case overrides them. Text grounding (F)
/// is never on by default.
std::vector<EvalDimension> default_dimensions(TaskKind task);

/// Reference-image counts a standard case of this task may use.
std::vector<std::size_t> legal_reference_counts(TaskKind task);

inline bool uses_hybrid_scoring(TaskKind task) noexcept {
  return task == TaskKind::StoryGeneration;
}

struct Checkpoint {
  std::string id;
  EvalDimension dimension = EvalDimension::InstructionFollowing;
  std::string question;
  bool hard = false;

  bool operator==(const Checkpoint&) const = default;
};

struct StoryAnswerSet {
  std::string narrative;
  std::vector<std::string> likely_outcomes;
  std::vector<std::string> counterfactuals;

  bool operator==(const StoryAnswerSet&) const = default;
};

struct EvalCase {
  std::string case_id;
  TaskKind task = TaskKind::ObjectComposition;
  std::string instruction;
  std::vector<std::string> reference_images;
  /// Per-case override of the task's active dimensions (also how F is enabled).
  std::optional<std::vector<EvalDimension>> active_dimensions;
  std::vector<Checkpoint> checkpoints;
  std::optional<StoryAnswerSet> answer_set;
  /// Prompts the reference images were generated from, when known.
  std::vector<std::string> reference_prompts;
  /// Member of the 2-5 reference ablation subset.
  bool ablation = false;

  /// Override if present, otherwise the task default.
  std::vector<EvalDimension> effective_dimensions() const;

  /// Checkpoints of one dimension, manifest order.
  std::vector<Checkpoint> checkpoints_for(EvalDimension dim) const;

  bool operator==(const EvalCase&) const = default;
};

}  // namespace mref::bench
