#include "mref/judge/config.hpp"

#include <algorithm>
#include <cstdlib>

#include <json.hpp>

#include "mref/errors.hpp"
#include "mref/judge/digest.hpp"

namespace mref::judge {

void JudgeConfig::validate() const {
  if (max_retries < 0) throw ConfigError("max_retries must be >= 0");
  if (max_concurrent < 1) throw ConfigError("max_concurrent must be >= 1");
  if (temperature != 0.0) {
    throw ConfigError("temperature must be 0 for reproducible grading, got " + std::to_string(temperature));
  }
  if (backoff.empty()) throw ConfigError("backoff schedule must not be empty");
  for (const auto& d : backoff) {
    if (d.count() < 0) throw ConfigError("backoff entries must be >= 0 ms");
  }
  if (request_timeout.count() <= 0) throw ConfigError("request_timeout must be positive");
}

std::string JudgeConfig::digest() const {
  nlohmann::json j = {{"model", model_name}, {"temperature", temperature}, {"per_checkpoint", per_checkpoint}};
  if (seed) j["seed"] = *seed;
  return sha256_hex(j.dump());
}

JudgeConfig JudgeConfig::from_env() {
  JudgeConfig cfg;
  if (const char* v = std::getenv(kEnvBaseUrl)) cfg.base_url = v;
  if (const char* v = std::getenv(kEnvApiKey)) cfg.api_key = v;
  if (const char* v = std::getenv(kEnvModel)) cfg.model_name = v;
  return cfg;
}

void JudgeConfig::apply_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("judge config must be a JSON object");
  if (j.contains("api_key")) {
    throw ConfigError(std::string("judge config files must not hold the API key; set ") + kEnvApiKey);
  }
  static const char* kKnown[] = {"base_url", "model_name", "max_retries", "backoff_ms", "request_timeout_ms",
                                 "temperature", "max_concurrent", "seed", "per_checkpoint", "transcript"};
  for (const auto& [key, value] : j.items()) {
    if (std::find(std::begin(kKnown), std::end(kKnown), key) == std::end(kKnown))
      throw ConfigError("unknown judge config field '" + key + "'");
  }
  try {
    if (j.contains("base_url")) base_url = j["base_url"].get<std::string>();
    if (j.contains("model_name")) model_name = j["model_name"].get<std::string>();
    if (j.contains("max_retries")) max_retries = j["max_retries"].get<int>();
    if (j.contains("backoff_ms")) {
      backoff.clear();
      for (const auto& ms : j["backoff_ms"]) backoff.emplace_back(ms.get<std::int64_t>());
    }
    if (j.contains("request_timeout_ms"))
      request_timeout = std::chrono::milliseconds(j["request_timeout_ms"].get<std::int64_t>());
    if (j.contains("temperature")) temperature = j["temperature"].get<double>();
    if (j.contains("max_concurrent")) {
      const auto n = j["max_concurrent"].get<std::int64_t>();
      if (n < 1) throw ConfigError("max_concurrent must be >= 1");
      max_concurrent = static_cast<std::size_t>(n);
    }
    if (j.contains("seed")) {
      if (j["seed"].is_null()) seed.reset();
      else seed = j["seed"].get<std::int64_t>();
    }
    if (j.contains("per_checkpoint")) per_checkpoint = j["per_checkpoint"].get<bool>();
    if (j.contains("transcript")) transcript_path = j["transcript"].get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("judge config: ") + e.what());
  }
}

}  // namespace mref::judge
