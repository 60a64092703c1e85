#pragma once

// Case manifests are one JSON document:
//
//   {"version": 1,
//    "cases": [{"case_id": "...", "task": "object_composition", "instruction": "...",
//               "reference_images": ["refs/a.png", "https://..."],
//               "active_dimensions": ["A", "B", ...],          (optional)
//               "checkpoints": [{"id": "A_check_1", "dimension": "A",
//                                "question": "...", "hard": true}, ...],
//               "answer_set": {"narrative": "...",             (story only)
//                              "likely_outcomes": [...], "counterfactuals": [...]},
//               "reference_prompts": [...],                    (optional)
//               "ablation": false}]}                           (optional)
//
// Image handles are relative paths (resolved against the manifest's
// directory) or URLs; image bytes never live in the manifest.

#include <cstddef>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "mref/bench/types.hpp"

namespace mref::bench {

inline constexpr int kManifestVersion = 1;

struct Violation {
  std::string case_id;
  std::string rule;
  std::string message;

  std::string to_string() const;
};

using ValidationReport = std::vector<Violation>;

/// Itemized invariant violations for one case; empty means valid. A case
/// with no checkpoints at all is accepted as pending checkpoint generation.
ValidationReport validate_case(const EvalCase& c);

/// validate_case over every case plus cross-case rules (unique case ids).
ValidationReport validate_cases(std::span<const EvalCase> cases);

nlohmann::json case_to_json(const EvalCase& c);
EvalCase case_from_json(const nlohmann::json& j);  // throws SchemaError

/// Decode a manifest without checking case invariants. Throws FormatError on
/// malformed JSON (message carries line and column) and SchemaError on
/// structural problems.
std::vector<EvalCase> parse_manifest(std::string_view text);
std::string dump_manifest(std::span<const EvalCase> cases);

/// parse_manifest on a file, no invariant checks.
std::vector<EvalCase> read_manifest(const std::filesystem::path& path);

/// read_manifest, then throws SchemaError listing every violation if any
/// case breaks an invariant.
std::vector<EvalCase> load_manifest(const std::filesystem::path& path);

void save_manifest(const std::filesystem::path& path, std::span<const EvalCase> cases);

struct TaskCounts {
  std::size_t cases = 0;
  std::size_t two_ref = 0;
  std::size_t three_ref = 0;
  std::size_t other_ref = 0;  // ablation cases with 4-5 references
  std::size_t images = 0;     // reference images

  bool operator==(const TaskCounts&) const = default;
};

struct DatasetStatistics {
  std::map<TaskKind, TaskCounts> per_task;  // every task present, possibly zero
  TaskCounts total;
};

DatasetStatistics dataset_statistics(std::span<const EvalCase> cases);

}  // namespace mref::bench
