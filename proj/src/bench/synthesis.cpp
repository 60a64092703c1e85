#include "mref/bench/synthesis.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <random>

#include "mref/errors.hpp"

namespace mref::bench {

namespace {

// std distributions are implementation-defined; plain modulo keeps the output
// identical across standard libraries.
class Sampler {
public:
  explicit Sampler(std::uint64_t seed) : rng_(seed) {}

  std::size_t index(std::size_t n) { return static_cast<std::size_t>(rng_() % n); }

  const std::string& pick(const std::vector<std::string>& pool) { return pool[index(pool.size())]; }

  /// k entries, distinct when the pool is large enough.
  std::vector<std::string> pick_distinct(const std::vector<std::string>& pool, std::size_t k) {
    std::vector<std::size_t> order(pool.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::vector<std::string> out;
    for (std::size_t i = 0; i < k; ++i) {
      if (i < order.size()) {
        std::swap(order[i], order[i + index(order.size() - i)]);
        out.push_back(pool[order[i]]);
      } else {
        out.push_back(pick(pool));
      }
    }
    return out;
  }

private:
  std::mt19937_64 rng_;
};

const std::vector<std::string>& pool_by_name(const ElementPools& p, const std::string& name) {
  if (name == "objects") return p.objects;
  if (name == "scenes") return p.scenes;
  if (name == "styles") return p.styles;
  if (name == "spatial_relations") return p.spatial_relations;
  if (name == "clothing") return p.clothing;
  return p.accessories;
}

TemplateElements build_elements(TaskKind task, std::size_t refs, const ElementPools& p,
                                Sampler& s) {
  TemplateElements e;
  const auto objs = s.pick_distinct(p.objects, refs);
  switch (task) {
    case TaskKind::ObjectComposition:
    case TaskKind::SpatialComposition: {
      for (std::size_t k = 0; k < refs; ++k) {
        e.reference_values.push_back({{"personalized_obj", objs[k]}, {"scene", s.pick(p.scenes)}});
      }
      e.task_values = {{"obj_a", objs[0]}, {"obj_b", objs[1]}, {"chosen_scene", s.pick(p.scenes)}};
      if (refs == 3) e.task_values["obj_c"] = objs[2];
      if (task == TaskKind::SpatialComposition) {
        if (refs == 2) {
          e.task_values["spatial_relation"] = s.pick(p.spatial_relations);
        } else {
          auto order = objs;
          for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[s.index(i)]);
          e.task_values["left_obj"] = order[0];
          e.task_values["center_obj"] = order[1];
          e.task_values["right_obj"] = order[2];
        }
      }
      break;
    }
    case TaskKind::AttributeDisentanglement: {
      const auto scenes = s.pick_distinct(p.scenes, 2);
      e.reference_values = {
          {{"personalized_description", objs[0]}, {"background_desc", scenes[0]}},
          {{"style_object", objs[1]}, {"style_desc", s.pick(p.styles)}},
          {{"specific_background", scenes[1]}},
      };
      e.task_values = {{"main_object", objs[0]}, {"specific_background", scenes[1]}};
      break;
    }
    case TaskKind::ComponentTransfer: {
      std::vector<std::string> clothes, accs;
      for (std::size_t k = 0; k < refs; ++k) {
        clothes.push_back(s.pick(p.clothing));
        accs.push_back(s.pick(p.accessories));
        e.reference_variants.push_back("single_subject");
        e.reference_values.push_back({{"subject_type", objs[k]},
                                      {"scene", s.pick(p.scenes)},
                                      {"clothing_desc", clothes[k]},
                                      {"accessories_desc", accs[k]}});
      }
      if (refs == 2) {
        e.task_variant = "simple";
        e.task_values = {{"local_element", accs[0]}};
      } else {
        // Image C shows two subjects; Image B is a distractor.
        const auto pair = s.pick_distinct(p.objects, 2);
        e.reference_variants[2] = "two_subjects";
        e.reference_values[2] = {{"subject1_type", pair[0]}, {"position1", "left"},
                                 {"cloth1", s.pick(p.clothing)}, {"acc1", s.pick(p.accessories)},
                                 {"subject2_type", pair[1]}, {"position2", "right"},
                                 {"cloth2", s.pick(p.clothing)}, {"acc2", s.pick(p.accessories)},
                                 {"scene", s.pick(p.scenes)}};
        e.task_variant = "complex";
        e.task_values = {{"elements_desc", clothes[0] + " and " + accs[0]},
                         {"source_desc", "the " + objs[0]},
                         {"source_label", "A"},
                         {"target_desc", "the " + pair[0] + " on the left"},
                         {"target_label", "C"}};
      }
      break;
    }
    case TaskKind::FgBgComposition: {
      for (std::size_t k = 0; k < refs; ++k) {
        e.reference_values.push_back({{"personalized_obj", objs[k]}, {"scene", s.pick(p.scenes)}});
      }
      e.task_values = {{"obj_a", objs[0]}, {"obj_b", objs[1]}};
      break;
    }
    case TaskKind::StoryGeneration:
      break;
  }
  return e;
}

}  // namespace

ElementPools ElementPools::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw FormatError("pool file must be a JSON object");
  ElementPools p;
  auto read = [&](const char* key, std::vector<std::string>& into) {
    if (!j.contains(key)) return;
    try {
      into = j.at(key).get<std::vector<std::string>>();
    } catch (const nlohmann::json::exception&) {
      throw FormatError(std::string("pool '") + key + "' must be an array of strings");
    }
  };
  read("objects", p.objects);
  read("scenes", p.scenes);
  read("styles", p.styles);
  read("spatial_relations", p.spatial_relations);
  read("clothing", p.clothing);
  read("accessories", p.accessories);
  return p;
}

ElementPools ElementPools::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open pool file '" + path.string() + "'");
  try {
    return from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError("pool file '" + path.string() + "': " + e.what());
  }
}

std::vector<std::string> ElementPools::required_for(TaskKind task) {
  switch (task) {
    case TaskKind::ObjectComposition:
    case TaskKind::FgBgComposition: return {"objects", "scenes"};
    case TaskKind::SpatialComposition: return {"objects", "scenes", "spatial_relations"};
    case TaskKind::AttributeDisentanglement: return {"objects", "scenes", "styles"};
    case TaskKind::ComponentTransfer: return {"objects", "scenes", "clothing", "accessories"};
    case TaskKind::StoryGeneration: return {};
  }
  return {};
}

void ElementPools::check_covers(TaskKind task) const {
  for (const std::string& name : required_for(task)) {
    if (pool_by_name(*this, name).empty()) {
      throw ConfigError("pool '" + name + "' is missing or empty; " +
                        std::string(to_string(task)) + " needs it");
    }
  }
}

std::vector<EvalCase> synthesize_cases(TaskKind task, const ElementPools& pools,
                                       const TemplateLibrary& library, std::size_t count,
                                       std::uint64_t seed) {
  pools.check_covers(task);
  Sampler sampler(seed);
  const auto counts = legal_reference_counts(task);
  std::vector<EvalCase> cases;
  cases.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t refs = counts[sampler.index(counts.size())];
    const TemplateElements elements = build_elements(task, refs, pools, sampler);
    FilledPrompts prompts = fill_template(library, task, elements, refs);

    char suffix[32];
    std::snprintf(suffix, sizeof suffix, "%04zu", i + 1);
    EvalCase c;
    c.case_id = std::string(to_string(task)) + "_" + suffix;
    c.task = task;
    c.instruction = std::move(prompts.task_prompt);
    c.reference_prompts = std::move(prompts.reference_prompts);
    for (std::size_t k = 0; k < refs; ++k) {
      c.reference_images.push_back("refs/" + c.case_id + "_ref" + std::to_string(k + 1) + ".png");
    }
    if (task == TaskKind::StoryGeneration) c.answer_set = StoryAnswerSet{};
    cases.push_back(std::move(c));
  }
  return cases;
}

}  // namespace mref::bench
