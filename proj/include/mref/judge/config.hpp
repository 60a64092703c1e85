#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace mref::judge {

inline constexpr const char* kEnvBaseUrl = "MREF_JUDGE_BASE_URL";
inline constexpr const char* kEnvApiKey = "MREF_JUDGE_API_KEY";
inline constexpr const char* kEnvModel = "MREF_JUDGE_MODEL";

struct JudgeConfig {
  /// Chat-completions base, e.g. "http://localhost:8000/v1"; requests go to
  /// <base_url>/chat/completions.
  std::string base_url;
  std::string model_name;
  /// Secret; read from the environment, never from manifests or logs.
  std::string api_key;
  int max_retries = 3;
  /// Delay before retry k is backoff[min(k, size - 1)].
  std::vector<std::chrono::milliseconds> backoff = {std::chrono::milliseconds(500),
                                                    std::chrono::milliseconds(2000),
                                                    std::chrono::milliseconds(8000)};
  std::chrono::milliseconds request_timeout = std::chrono::seconds(120);
  double temperature = 0.0;
  std::size_t max_concurrent = 4;
  /// Sent as "seed" when set; servers that ignore it are still fine.
  std::optional<std::int64_t> seed = 0;
  /// Ask about one checkpoint per request instead of all at once.
  bool per_checkpoint = false;
  /// Append request/response transcripts (key redacted) to this JSONL file.
  std::optional<std::filesystem::path> transcript_path;

  /// Throws ConfigError: max_retries >= 0, max_concurrent >= 1, temperature
  /// exactly 0, non-empty backoff with non-negative entries, positive timeout.
  void validate() const;

  /// Fields that change verdicts, hashed; the API key is not part of it.
  std::string digest() const;

  /// Defaults overridden by MREF_JUDGE_BASE_URL, MREF_JUDGE_API_KEY and
  /// MREF_JUDGE_MODEL when set.
  static JudgeConfig from_env();
  /// Overrides fields present in a JSON object: base_url, model_name,
  /// max_retries, backoff_ms, request_timeout_ms, temperature,
  /// max_concurrent, seed (null disables), per_checkpoint, transcript.
  /// An "api_key" field is rejected; keys only come from the environment.
  void apply_json(const nlohmann::json& j);
};

}  // namespace mref::judge
