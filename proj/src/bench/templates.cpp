#include "mref/bench/templates.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>

#include "mref/errors.hpp"

namespace mref::bench {

namespace {

bool is_placeholder_name(std::string_view name) {
  return !name.empty() && std::all_of(name.begin(), name.end(), [](unsigned char ch) {
    return std::islower(ch) || std::isdigit(ch) || ch == '_';
  });
}

// Calls on_literal / on_placeholder for each piece of text in order.
template <typename Literal, typename Placeholder>
void scan(std::string_view text, Literal on_literal, Placeholder on_placeholder) {
  std::size_t pos = 0;
  while (pos < text.size()) {
    const std::size_t open = text.find('{', pos);
    if (open == std::string_view::npos) break;
    const std::size_t close = text.find('}', open + 1);
    if (close == std::string_view::npos) break;
    const std::string_view name = text.substr(open + 1, close - open - 1);
    if (!is_placeholder_name(name)) {
      on_literal(text.substr(pos, open + 1 - pos));
      pos = open + 1;
      continue;
    }
    on_literal(text.substr(pos, open - pos));
    on_placeholder(name);
    pos = close + 1;
  }
  on_literal(text.substr(std::min(pos, text.size())));
}

bool contains(const std::vector<std::size_t>& v, std::size_t x) {
  return std::find(v.begin(), v.end(), x) != v.end();
}

PromptTemplate template_from_json(const nlohmann::json& j) {
  PromptTemplate t;
  t.name = j.at("name").get<std::string>();
  t.text = j.at("text").get<std::string>();
  if (j.contains("ref_counts")) t.ref_counts = j["ref_counts"].get<std::vector<std::size_t>>();
  if (j.contains("positions")) t.positions = j["positions"].get<std::vector<std::size_t>>();
  return t;
}

const PromptTemplate& pick_task_template(const TaskTemplates& set, TaskKind task,
                                         const std::string& variant, std::size_t ref_count) {
  for (const PromptTemplate& t : set.task) {
    if (!variant.empty() && t.name != variant) continue;
    if (contains(t.ref_counts, ref_count)) return t;
  }
  throw DomainError("no " + std::string(to_string(task)) + " task template" +
                    (variant.empty() ? std::string() : " named '" + variant + "'") + " for " +
                    std::to_string(ref_count) + " reference images");
}

const PromptTemplate& pick_reference_template(const TaskTemplates& set, TaskKind task,
                                              const std::string& variant, std::size_t slot) {
  if (!variant.empty()) {
    for (const PromptTemplate& t : set.reference) {
      if (t.name == variant) return t;
    }
    throw DomainError("no " + std::string(to_string(task)) + " reference template named '" +
                      variant + "'");
  }
  for (const PromptTemplate& t : set.reference) {
    if (contains(t.positions, slot)) return t;
  }
  for (const PromptTemplate& t : set.reference) {
    if (t.positions.empty()) return t;
  }
  throw DomainError("no " + std::string(to_string(task)) + " reference template for image " +
                    std::to_string(slot));
}

}  // namespace

std::string substitute(std::string_view text, const Bindings& values) {
  std::string out;
  out.reserve(text.size());
  scan(
      text, [&](std::string_view lit) { out.append(lit); },
      [&](std::string_view name) {
        const auto it = values.find(name);
        if (it == values.end()) {
          throw FormatError("no value for placeholder {" + std::string(name) + "}");
        }
        out.append(it->second);
      });
  return out;
}

std::vector<std::string> placeholders(std::string_view text) {
  std::vector<std::string> names;
  scan(
      text, [](std::string_view) {},
      [&](std::string_view name) {
        if (std::find(names.begin(), names.end(), name) == names.end()) names.emplace_back(name);
      });
  return names;
}

TemplateLibrary TemplateLibrary::from_json(const nlohmann::json& j) {
  TemplateLibrary lib;
  try {
    for (const auto& [key, entry] : j.at("tasks").items()) {
      TaskTemplates set;
      for (const auto& t : entry.at("reference")) set.reference.push_back(template_from_json(t));
      for (const auto& t : entry.at("task")) set.task.push_back(template_from_json(t));
      lib.by_task_[parse_task(key)] = std::move(set);
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("bad template file: ") + e.what());
  }
  return lib;
}

TemplateLibrary TemplateLibrary::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open template file '" + path.string() + "'");
  try {
    return from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError("template file '" + path.string() + "': " + e.what());
  }
}

const TaskTemplates& TemplateLibrary::for_task(TaskKind task) const {
  const auto it = by_task_.find(task);
  if (it == by_task_.end()) {
    throw FormatError("template file has no entry for task " + std::string(to_string(task)));
  }
  return it->second;
}

FilledPrompts fill_template(const TemplateLibrary& library, TaskKind task,
                            const TemplateElements& elements, std::size_t ref_count) {
  const TaskTemplates& set = library.for_task(task);
  if (!elements.reference_values.empty() && elements.reference_values.size() != ref_count) {
    throw DomainError("got element bindings for " +
                      std::to_string(elements.reference_values.size()) + " reference images, expected " +
                      std::to_string(ref_count));
  }
  FilledPrompts out;
  const PromptTemplate& task_tpl = pick_task_template(set, task, elements.task_variant, ref_count);
  out.task_prompt = substitute(task_tpl.text, elements.task_values);

  static const Bindings kNoBindings;
  for (std::size_t slot = 0; slot < ref_count; ++slot) {
    const std::string variant =
        slot < elements.reference_variants.size() ? elements.reference_variants[slot] : "";
    const PromptTemplate& tpl = pick_reference_template(set, task, variant, slot);
    const Bindings& values =
        elements.reference_values.empty() ? kNoBindings : elements.reference_values[slot];
    out.reference_prompts.push_back(substitute(tpl.text, values));
  }
  return out;
}

}  // namespace mref::bench
