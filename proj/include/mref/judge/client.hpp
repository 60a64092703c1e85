#pragma once

#include <memory>
#include <mutex>
#include <semaphore>
#include <span>
#include <string>
#include <vector>

#include "mref/bench/types.hpp"
#include "mref/judge/config.hpp"
#include "mref/judge/prompt.hpp"
#include "mref/judge/transport.hpp"
#include "mref/judge/verdict_cache.hpp"

namespace mref::judge {

/// Everything that talks to the judge. Safe to share between threads; at most
/// cfg.max_concurrent requests are in flight at once.
class JudgeClient {
public:
  JudgeClient(JudgeConfig cfg, std::shared_ptr<JudgeTransport> transport,
              PromptLibrary prompts = PromptLibrary::builtin(), std::shared_ptr<VerdictCache> cache = nullptr);

  const JudgeConfig& config() const noexcept { return cfg_; }
  const PromptLibrary& prompts() const noexcept { return prompts_; }

  /// Assistant text for one prompt. Retries no-response, 429 and 5xx replies
  /// up to max_retries times; other statuses and exhaustion raise
  /// TransportError. Every HTTP attempt increments `attempts`.
  std::string complete(const JudgePrompt& prompt, std::size_t& attempts);

  /// Verdicts for `expected`, which the prompt must list. A reply that is not
  /// a valid verdict object gets one re-ask with a format reminder, then
  /// ParseError. Missing or unexpected ids raise CoverageError.
  VerdictBatch request_verdicts(const JudgePrompt& prompt, const std::string& case_id,
                                std::span<const bench::Checkpoint> expected);

  /// Renders and requests verdicts for every scored checkpoint of the case,
  /// one request per checkpoint in per-checkpoint mode. Uses the cache when set.
  VerdictBatch evaluate_case(const bench::EvalCase& c, const ImageSet& images);

  /// Checkpoints for a case that has none yet. Replies breaking the
  /// checkpoint rules get one re-ask, then GenerationError.
  std::vector<bench::Checkpoint> generate_checkpoints(const bench::EvalCase& c,
                                                      const std::vector<std::string>& reference_urls = {});

  /// Judge's 0-10 integer rubric times 10. Non-integer or out-of-range replies
  /// get one re-ask, then ParseError.
  double score_answer_set(const bench::EvalCase& c, const ImageSet& images);

private:
  void log_transcript(const nlohmann::json& request, const HttpResponse& response);

  JudgeConfig cfg_;
  std::shared_ptr<JudgeTransport> transport_;
  PromptLibrary prompts_;
  std::shared_ptr<VerdictCache> cache_;
  std::unique_ptr<std::counting_semaphore<>> slots_;
  std::mutex log_mu_;
};

/// JSON value of a judge reply: the whole text when it parses, otherwise the
/// outermost {...} span, which tolerates markdown fences and surrounding prose.
/// Throws FormatError when neither parses.
nlohmann::json extract_json(const std::string& reply);

}  // namespace mref::judge
