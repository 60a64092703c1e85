#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "mref/bench/types.hpp"

namespace mref::bench {

using Bindings = std::map<std::string, std::string, std::less<>>;

/// Replace every {name} placeholder with its binding. Throws FormatError
/// naming the first placeholder without a value. Substituted text is not
/// rescanned.
std::string substitute(std::string_view text, const Bindings& values);

/// Placeholder names in order of first appearance.
std::vector<std::string> placeholders(std::string_view text);

struct PromptTemplate {
  std::string name;
  std::string text;
  std::vector<std::size_t> ref_counts;  // task templates: counts this template serves
  std::vector<std::size_t> positions;   // reference templates: image slots it serves
};

struct TaskTemplates {
  std::vector<PromptTemplate> reference;
  std::vector<PromptTemplate> task;
};

/// Reference-image and task prompt templates per task, loaded from JSON so
/// the wording can change without a rebuild.
class TemplateLibrary {
public:
  static TemplateLibrary from_json(const nlohmann::json& j);
  static TemplateLibrary load(const std::filesystem::path& path);

  const TaskTemplates& for_task(TaskKind task) const;

private:
  std::map<TaskKind, TaskTemplates> by_task_;
};

struct TemplateElements {
  Bindings task_values;
  std::vector<Bindings> reference_values;  // one per reference image, or empty
  std::string task_variant;                // template name; empty picks the first fit
  std::vector<std::string> reference_variants;
};

struct FilledPrompts {
  std::vector<std::string> reference_prompts;
  std::string task_prompt;
};

FilledPrompts fill_template(const TemplateLibrary& library, TaskKind task,
                            const TemplateElements& elements, std::size_t ref_count);

}  // namespace mref::bench
