#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "mref/bench/templates.hpp"
#include "mref/bench/types.hpp"

namespace mref::bench {

/// Vocabulary that benchmark cases are sampled from.
struct ElementPools {
  std::vector<std::string> objects;
  std::vector<std::string> scenes;
  std::vector<std::string> styles;
  std::vector<std::string> spatial_relations;
  std::vector<std::string> clothing;
  std::vector<std::string> accessories;

  static ElementPools from_json(const nlohmann::json& j);
  static ElementPools load(const std::filesystem::path& path);

  /// Names of the pools a task draws from.
  static std::vector<std::string> required_for(TaskKind task);

  /// Throws ConfigError naming the first required pool that is empty.
  void check_covers(TaskKind task) const;
};

/// Case skeletons: instruction and reference prompts filled, reference image
/// handles pointing at refs/<case_id>_ref<k>.png, no checkpoints. Output
/// depends only on the arguments.
std::vector<EvalCase> synthesize_cases(TaskKind task, const ElementPools& pools,
                                       const TemplateLibrary& library, std::size_t count,
                                       std::uint64_t seed);

}  // namespace mref::bench
