#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <memory>

#include <json.hpp>

#include "mref/judge/transport.hpp"

namespace mref::judge {

/// Offline judge answering chat-completions bodies built by the client.
///
/// Replay mode answers from a fixture document:
///   {"verdicts": {case_id: {checkpoint_id: {"pass": bool, "why": str}}},
///    "answer_scores": {case_id: <value>},
///    "checkpoints": {case_id: [{"id", "dimension", "question", "hard"}]},
///    "raw": {case_id: {"verdicts" | "checkpoints" | "answer_set_score": str}}}
/// Verdict replies contain only the requested ids the fixture knows; "raw"
/// replaces the reply content verbatim.
///
/// Rule mode derives every answer from a hash of the request inputs.
class StubJudge : public JudgeTransport {
public:
  enum class Mode { Replay, Rules };

  explicit StubJudge(nlohmann::json fixture);
  static std::shared_ptr<StubJudge> from_file(const std::filesystem::path& path);
  static std::shared_ptr<StubJudge> rule_based(std::uint64_t salt = 0);

  HttpResponse post(const std::string& body) override;

  /// Sleep inside each call so overlapping calls become observable.
  void set_delay(std::chrono::milliseconds d) { delay_ = d; }

  Mode mode() const noexcept { return mode_; }
  std::size_t calls() const noexcept { return calls_.load(); }
  std::size_t max_in_flight() const noexcept { return max_in_flight_.load(); }

private:
  StubJudge(Mode mode, nlohmann::json fixture, std::uint64_t salt);

  std::string answer(const nlohmann::json& request) const;

  Mode mode_;
  nlohmann::json fixture_;
  std::uint64_t salt_ = 0;
  std::chrono::milliseconds delay_{0};
  std::atomic<std::size_t> calls_{0};
  std::atomic<std::size_t> in_flight_{0};
  std::atomic<std::size_t> max_in_flight_{0};
};

}  // namespace mref::judge
