#include "mref/bench/types.hpp"

#include "mref/errors.hpp"

namespace mref::bench {

std::string_view to_string(TaskKind task) noexcept {
  switch (task) {
    case TaskKind::ObjectComposition: return "object_composition";
    case TaskKind::SpatialComposition: return "spatial_composition";
    case TaskKind::AttributeDisentanglement: return "attribute_disentanglement";
    case TaskKind::ComponentTransfer: return "component_transfer";
    case TaskKind::FgBgComposition: return "fg_bg_composition";
    case TaskKind::StoryGeneration: return "story_generation";
  }
  return "?";
}

std::string_view label(TaskKind task) noexcept {
  switch (task) {
    case TaskKind::ObjectComposition: return "Object";
    case TaskKind::SpatialComposition: return "Spatial";
    case TaskKind::AttributeDisentanglement: return "Attribute";
    case TaskKind::ComponentTransfer: return "Component";
    case TaskKind::FgBgComposition: return "FG/BG";
    case TaskKind::StoryGeneration: return "Story";
  }
  return "?";
}

TaskKind parse_task(std::string_view text) {
  for (TaskKind t : kAllTasks) {
    if (text == to_string(t)) return t;
  }
  throw FormatError("unknown task '" + std::string(text) + "'");
}

std::string_view to_string(EvalDimension dim) noexcept {
  static constexpr std::string_view kLetters[] = {"A", "B", "C", "D", "E", "F", "G"};
  return kLetters[static_cast<int>(dim)];
}

std::string_view label(EvalDimension dim) noexcept {
  switch (dim) {
    case EvalDimension::InstructionFollowing: return "Instruction Following";
    case EvalDimension::Identity: return "Identity / Fidelity";
    case EvalDimension::Structure: return "Structure / Geometry";
    case EvalDimension::CrossRefConsistency: return "Cross-Reference Consistency";
    case EvalDimension::Causality: return "Causality";
    case EvalDimension::TextGrounding: return "Text Grounding";
    case EvalDimension::OverallUsability: return "Overall Usability";
  }
  return "?";
}

EvalDimension parse_dimension(std::string_view text) {
  for (EvalDimension d : kAllDimensions) {
    if (text == to_string(d)) return d;
  }
  throw FormatError("unknown evaluation dimension '" + std::string(text) + "'");
}

std::vector<EvalDimension> default_dimensions(TaskKind task) {
  using D = EvalDimension;
  if (task == TaskKind::StoryGeneration) {
    return {D::InstructionFollowing, D::Identity, D::Structure, D::CrossRefConsistency,
            D::Causality, D::OverallUsability};
  }
  return {D::InstructionFollowing, D::Identity, D::Structure, D::CrossRefConsistency,
          D::OverallUsability};
}

std::vector<std::size_t> legal_reference_counts(TaskKind task) {
  switch (task) {
    case TaskKind::AttributeDisentanglement: return {3};
    case TaskKind::FgBgComposition: return {2};
    default: return {2, 3};
  }
}

std::vector<EvalDimension> EvalCase::effective_dimensions() const {
  return active_dimensions ? *active_dimensions : default_dimensions(task);
}

std::vector<Checkpoint> EvalCase::checkpoints_for(EvalDimension dim) const {
  std::vector<Checkpoint> out;
  for (const Checkpoint& c : checkpoints) {
    if (c.dimension == dim) out.push_back(c);
  }
  return out;
}

}  // namespace mref::bench
