#include "mref/judge/verdict_cache.hpp"

#include <fstream>

#include "mref/errors.hpp"
#include "mref/judge/digest.hpp"

namespace mref::judge {

nlohmann::json to_json(const VerdictBatch& b) {
  nlohmann::json verdicts = nlohmann::json::array();
  for (const auto& v : b.verdicts) {
    verdicts.push_back({{"checkpoint_id", v.checkpoint_id}, {"passed", v.passed}, {"justification", v.justification}});
  }
  return {{"case_id", b.case_id},
          {"verdicts", verdicts},
          {"raw_response", b.raw_response},
          {"attempt_count", b.attempt_count}};
}

VerdictBatch verdict_batch_from_json(const nlohmann::json& j) {
  try {
    VerdictBatch b;
    b.case_id = j.at("case_id").get<std::string>();
    for (const auto& v : j.at("verdicts")) {
      b.verdicts.push_back({v.at("checkpoint_id").get<std::string>(), v.at("passed").get<bool>(),
                            v.value("justification", "")});
    }
    b.raw_response = j.value("raw_response", "");
    b.attempt_count = j.value("attempt_count", std::size_t{0});
    return b;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("bad verdict batch: ") + e.what());
  }
}

std::string CacheKey::hash() const { return sha256_hex(to_json().dump()); }

nlohmann::json CacheKey::to_json() const {
  return {{"case_id", case_id},
          {"image_digest", image_digest},
          {"judge_model", judge_model},
          {"prompt_digest", prompt_digest}};
}

VerdictCache::VerdictCache(std::optional<std::filesystem::path> dir) : dir_(std::move(dir)) {
  if (dir_) {
    std::error_code ec;
    std::filesystem::create_directories(*dir_, ec);
    if (ec) throw IoError("cannot create cache directory '" + dir_->string() + "': " + ec.message());
  }
}

std::optional<VerdictBatch> VerdictCache::read_disk(const CacheKey& key) const {
  if (!dir_) return std::nullopt;
  std::ifstream in(*dir_ / (key.hash() + ".json"));
  if (!in) return std::nullopt;
  try {
    const auto j = nlohmann::json::parse(in);
    if (j.at("key") != key.to_json()) return std::nullopt;
    return verdict_batch_from_json(j.at("batch"));
  } catch (const std::exception&) {
    // Unreadable entries are recomputed and overwritten.
    return std::nullopt;
  }
}

void VerdictCache::write_disk(const CacheKey& key, const VerdictBatch& batch) const {
  if (!dir_) return;
  const auto final_path = *dir_ / (key.hash() + ".json");
  const auto tmp = final_path.string() + ".tmp";
  {
    std::ofstream out(tmp);
    if (!out) throw IoError("cannot write cache entry '" + tmp + "'");
    out << nlohmann::json{{"key", key.to_json()}, {"batch", to_json(batch)}}.dump(2) << '\n';
    if (!out) throw IoError("cannot write cache entry '" + tmp + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, final_path, ec);
  if (ec) throw IoError("cannot move cache entry into place: " + ec.message());
}

VerdictBatch VerdictCache::get_or_compute(const CacheKey& key, const std::function<VerdictBatch()>& compute) {
  const std::string h = key.hash();
  std::promise<VerdictBatch> promise;
  {
    std::unique_lock lock(mu_);
    const auto it = entries_.find(h);
    if (it != entries_.end()) {
      auto fut = it->second;
      lock.unlock();
      return fut.get();
    }
    if (auto hit = read_disk(key)) {
      promise.set_value(*hit);
      entries_.emplace(h, promise.get_future().share());
      return *hit;
    }
    entries_.emplace(h, promise.get_future().share());
    ++computations_;
  }

  try {
    VerdictBatch batch = compute();
    write_disk(key, batch);
    promise.set_value(batch);
    return batch;
  } catch (...) {
    promise.set_exception(std::current_exception());
    std::lock_guard lock(mu_);
    entries_.erase(h);
    throw;
  }
}

std::size_t VerdictCache::computations() const {
  std::lock_guard lock(mu_);
  return computations_;
}

}  // namespace mref::judge
