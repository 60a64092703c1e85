#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <future>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "mref/scoring/scoring.hpp"

namespace mref::judge {

struct VerdictBatch {
  std::string case_id;
  /// Manifest order of the requested checkpoints.
  std::vector<scoring::Verdict> verdicts;
  /// Judge reply text(s), kept for audit.
  std::string raw_response;
  /// HTTP attempts spent producing this batch, re-asks and retries included.
  std::size_t attempt_count = 0;

  bool operator==(const VerdictBatch&) const = default;
};

nlohmann::json to_json(const VerdictBatch& b);
VerdictBatch verdict_batch_from_json(const nlohmann::json& j);  // throws FormatError

struct CacheKey {
  std::string case_id;
  std::string image_digest;
  std::string judge_model;
  std::string prompt_digest;

  /// SHA-256 over all four fields; names the cache file.
  std::string hash() const;
  nlohmann::json to_json() const;

  bool operator==(const CacheKey&) const = default;
};

/// Content-addressed verdict store. Each distinct key is computed at most
/// once per process, even under concurrent requests; with a directory, batches
/// also persist as <dir>/<hash>.json = {"key": ..., "batch": ...}. Failed
/// computations are not remembered.
class VerdictCache {
public:
  explicit VerdictCache(std::optional<std::filesystem::path> dir = std::nullopt);

  VerdictBatch get_or_compute(const CacheKey& key, const std::function<VerdictBatch()>& compute);

  /// Number of times `compute` actually ran.
  std::size_t computations() const;

private:
  std::optional<VerdictBatch> read_disk(const CacheKey& key) const;
  void write_disk(const CacheKey& key, const VerdictBatch& batch) const;

  std::optional<std::filesystem::path> dir_;
  mutable std::mutex mu_;
  std::map<std::string, std::shared_future<VerdictBatch>> entries_;
  std::size_t computations_ = 0;
};

}  // namespace mref::judge
