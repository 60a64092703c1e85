#include "mref/bench/manifest.hpp"

#include <algorithm>
#include <fstream>
#include <iterator>
#include <set>

#include "mref/errors.hpp"

namespace mref::bench {

namespace {

using nlohmann::json;

std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (const auto& s : items) {
    if (!out.empty()) out += ", ";
    out += s;
  }
  return out;
}

template <typename T>
T field(const json& j, const char* key, const std::string& case_id) {
  if (!j.contains(key)) throw SchemaError(case_id, std::string("missing field '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw SchemaError(case_id, std::string("field '") + key + "' has the wrong type");
  }
}

}  // namespace

std::string Violation::to_string() const {
  return (case_id.empty() ? std::string("<manifest>") : case_id) + " [" + rule + "] " + message;
}

ValidationReport validate_case(const EvalCase& c) {
  ValidationReport out;
  auto flag = [&](std::string rule, std::string message) {
    out.push_back({c.case_id, std::move(rule), std::move(message)});
  };

  if (c.case_id.empty()) flag("case_id", "case_id is empty");
  if (c.instruction.empty()) flag("instruction", "instruction is empty");

  const std::size_t n_refs = c.reference_images.size();
  if (c.ablation) {
    if (n_refs < 2 || n_refs > 5) {
      flag("reference_count", "ablation cases use 2-5 reference images, found " +
                                  std::to_string(n_refs));
    }
  } else {
    const auto legal = legal_reference_counts(c.task);
    if (std::find(legal.begin(), legal.end(), n_refs) == legal.end()) {
      std::string allowed;
      for (auto n : legal) allowed += (allowed.empty() ? "" : " or ") + std::to_string(n);
      flag("reference_count", std::string(label(c.task)) + " cases use " + allowed +
                                  " reference images, found " + std::to_string(n_refs));
    }
  }
  for (std::size_t i = 0; i < n_refs; ++i) {
    if (c.reference_images[i].empty()) {
      flag("image_handle", "reference image " + std::to_string(i) + " has no handle");
    }
  }

  const auto active = c.effective_dimensions();
  if (active.empty()) flag("active_dimensions", "no active dimensions");
  if (std::set<EvalDimension>(active.begin(), active.end()).size() != active.size()) {
    flag("active_dimensions", "active dimensions listed more than once");
  }

  std::set<std::string> seen;
  std::set<std::string> duplicates;
  for (const Checkpoint& cp : c.checkpoints) {
    if (cp.id.empty()) flag("checkpoint_id", "a checkpoint has an empty id");
    if (!seen.insert(cp.id).second) duplicates.insert(cp.id);
    if (std::find(active.begin(), active.end(), cp.dimension) == active.end()) {
      flag("inactive_dimension", "checkpoint " + cp.id + " targets dimension " +
                                     std::string(to_string(cp.dimension)) +
                                     ", which is not active for this case");
    }
  }
  if (!duplicates.empty()) {
    flag("duplicate_checkpoint_id", "duplicate checkpoint ids: " +
                                        join({duplicates.begin(), duplicates.end()}));
  }

  if (!c.checkpoints.empty()) {
    for (EvalDimension dim : active) {
      std::size_t count = 0;
      std::size_t hard = 0;
      for (const Checkpoint& cp : c.checkpoints) {
        if (cp.dimension != dim) continue;
        ++count;
        if (cp.hard) ++hard;
      }
      const std::string name(to_string(dim));
      if (count < 2 || count > 4) {
        flag("checkpoints_per_dimension", "dimension " + name + " has " + std::to_string(count) +
                                              " checkpoints, needs 2-4 checkpoints per dimension");
      }
      if (hard != 1) {
        flag("hard_checkpoint", "dimension " + name + " has " + std::to_string(hard) +
                                    " hard checkpoints, needs exactly one");
      }
    }
  }

  const bool story = c.task == TaskKind::StoryGeneration;
  if (story && !c.answer_set) flag("answer_set", "story cases need an answer_set");
  if (!story && c.answer_set) flag("answer_set", "only story cases carry an answer_set");
  if (c.answer_set && c.answer_set->likely_outcomes.empty()) {
    flag("answer_set", "answer_set.likely_outcomes is empty");
  }
  return out;
}

ValidationReport validate_cases(std::span<const EvalCase> cases) {
  ValidationReport out;
  std::set<std::string> ids;
  for (const EvalCase& c : cases) {
    auto part = validate_case(c);
    out.insert(out.end(), part.begin(), part.end());
    if (!c.case_id.empty() && !ids.insert(c.case_id).second) {
      out.push_back({c.case_id, "duplicate_case_id", "case_id appears more than once"});
    }
  }
  return out;
}

json case_to_json(const EvalCase& c) {
  json j;
  j["case_id"] = c.case_id;
  j["task"] = std::string(to_string(c.task));
  j["instruction"] = c.instruction;
  j["reference_images"] = c.reference_images;
  if (c.active_dimensions) {
    json dims = json::array();
    for (auto d : *c.active_dimensions) dims.push_back(std::string(to_string(d)));
    j["active_dimensions"] = std::move(dims);
  }
  json cps = json::array();
  for (const Checkpoint& cp : c.checkpoints) {
    cps.push_back({{"id", cp.id},
                   {"dimension", std::string(to_string(cp.dimension))},
                   {"question", cp.question},
                   {"hard", cp.hard}});
  }
  j["checkpoints"] = std::move(cps);
  if (c.answer_set) {
    j["answer_set"] = {{"narrative", c.answer_set->narrative},
                       {"likely_outcomes", c.answer_set->likely_outcomes},
                       {"counterfactuals", c.answer_set->counterfactuals}};
  }
  if (!c.reference_prompts.empty()) j["reference_prompts"] = c.reference_prompts;
  if (c.ablation) j["ablation"] = true;
  return j;
}

EvalCase case_from_json(const json& j) {
  if (!j.is_object()) throw SchemaError("", "each case must be a JSON object");
  EvalCase c;
  c.case_id = field<std::string>(j, "case_id", "");
  const std::string& id = c.case_id;
  try {
    c.task = parse_task(field<std::string>(j, "task", id));
  } catch (const FormatError& e) {
    throw SchemaError(id, e.what());
  }
  c.instruction = field<std::string>(j, "instruction", id);
  c.reference_images = field<std::vector<std::string>>(j, "reference_images", id);

  try {
    if (j.contains("active_dimensions")) {
      std::vector<EvalDimension> dims;
      for (const auto& d : field<std::vector<std::string>>(j, "active_dimensions", id)) {
        dims.push_back(parse_dimension(d));
      }
      c.active_dimensions = std::move(dims);
    }
    if (j.contains("checkpoints")) {
      if (!j["checkpoints"].is_array()) throw SchemaError(id, "'checkpoints' must be an array");
      for (const auto& cj : j["checkpoints"]) {
        if (!cj.is_object()) throw SchemaError(id, "each checkpoint must be an object");
        Checkpoint cp;
        cp.id = field<std::string>(cj, "id", id);
        cp.dimension = parse_dimension(field<std::string>(cj, "dimension", id));
        cp.question = field<std::string>(cj, "question", id);
        cp.hard = cj.contains("hard") ? field<bool>(cj, "hard", id) : false;
        c.checkpoints.push_back(std::move(cp));
      }
    }
  } catch (const FormatError& e) {
    throw SchemaError(id, e.what());
  }

  if (j.contains("answer_set") && !j["answer_set"].is_null()) {
    const json& a = j["answer_set"];
    if (!a.is_object()) throw SchemaError(id, "'answer_set' must be an object");
    StoryAnswerSet set;
    set.narrative = field<std::string>(a, "narrative", id);
    set.likely_outcomes = field<std::vector<std::string>>(a, "likely_outcomes", id);
    if (a.contains("counterfactuals")) {
      set.counterfactuals = field<std::vector<std::string>>(a, "counterfactuals", id);
    }
    c.answer_set = std::move(set);
  }
  if (j.contains("reference_prompts")) {
    c.reference_prompts = field<std::vector<std::string>>(j, "reference_prompts", id);
  }
  if (j.contains("ablation")) c.ablation = field<bool>(j, "ablation", id);
  return c;
}

std::vector<EvalCase> parse_manifest(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw FormatError(std::string("manifest is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw SchemaError("", "manifest must be a JSON object");
  if (!doc.contains("version") || !doc["version"].is_number_integer() ||
      doc["version"].get<int>() != kManifestVersion) {
    throw SchemaError("", "manifest 'version' must be " + std::to_string(kManifestVersion));
  }
  if (!doc.contains("cases") || !doc["cases"].is_array()) {
    throw SchemaError("", "manifest needs a 'cases' array");
  }
  std::vector<EvalCase> cases;
  cases.reserve(doc["cases"].size());
  for (const auto& cj : doc["cases"]) cases.push_back(case_from_json(cj));
  return cases;
}

std::string dump_manifest(std::span<const EvalCase> cases) {
  json arr = json::array();
  for (const EvalCase& c : cases) arr.push_back(case_to_json(c));
  json doc = {{"version", kManifestVersion}, {"cases", std::move(arr)}};
  return doc.dump(2) + "\n";
}

std::vector<EvalCase> read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open manifest '" + path.string() + "'");
  const std::string text{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  return parse_manifest(text);
}

std::vector<EvalCase> load_manifest(const std::filesystem::path& path) {
  auto cases = read_manifest(path);
  const auto report = validate_cases(cases);
  if (!report.empty()) {
    std::string msg = std::to_string(report.size()) + " manifest violation(s):";
    for (const auto& v : report) msg += "\n  " + v.to_string();
    throw SchemaError(report.front().case_id, msg);
  }
  return cases;
}

void save_manifest(const std::filesystem::path& path, std::span<const EvalCase> cases) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write manifest '" + path.string() + "'");
  out << dump_manifest(cases);
  if (!out) throw IoError("write to '" + path.string() + "' failed");
}

DatasetStatistics dataset_statistics(std::span<const EvalCase> cases) {
  DatasetStatistics stats;
  for (TaskKind t : kAllTasks) stats.per_task[t] = {};
  for (const EvalCase& c : cases) {
    TaskCounts& tc = stats.per_task[c.task];
    const std::size_t n = c.reference_images.size();
    for (TaskCounts* counts : {&tc, &stats.total}) {
      ++counts->cases;
      counts->images += n;
      if (n == 2) {
        ++counts->two_ref;
      } else if (n == 3) {
        ++counts->three_ref;
      } else {
        ++counts->other_ref;
      }
    }
  }
  return stats;
}

}  // namespace mref::bench
