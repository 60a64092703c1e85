#include "mref/judge/client.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <thread>

#include "mref/bench/manifest.hpp"
#include "mref/errors.hpp"
#include "mref/judge/digest.hpp"

namespace mref::judge {

namespace {

// Reply rejected for its shape; triggers the one re-ask.
struct BadReply {
  std::string problem;
};

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  return s.substr(b, s.find_last_not_of(" \t\r\n") - b + 1);
}

std::string assistant_text(const std::string& body) {
  try {
    const auto j = nlohmann::json::parse(body);
    return j.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const nlohmann::json::exception&) {
    throw BadReply{"the response is not a chat-completions message"};
  }
}

// Data URLs are replaced by their size and digest so transcripts stay small.
void abbreviate_images(nlohmann::json& j) {
  if (j.is_object()) {
    for (auto& [k, v] : j.items()) {
      if (k == "url" && v.is_string() && v.get<std::string>().starts_with("data:")) {
        const auto s = v.get<std::string>();
        v = s.substr(0, s.find(',') + 1) + "<" + std::to_string(s.size()) + " chars, sha256 " + sha256_hex(s) + ">";
      } else {
        abbreviate_images(v);
      }
    }
  } else if (j.is_array()) {
    for (auto& v : j) abbreviate_images(v);
  }
}

std::vector<scoring::Verdict> parse_verdicts(const std::string& reply) {
  nlohmann::json j;
  try {
    j = extract_json(reply);
  } catch (const FormatError&) {
    throw BadReply{"no JSON object found"};
  }
  if (!j.is_object()) throw BadReply{"the reply must be a JSON object keyed by checkpoint id"};
  std::vector<scoring::Verdict> out;
  for (const auto& [id, v] : j.items()) {
    if (!v.is_object() || !v.contains("pass") || !v["pass"].is_boolean()) {
      throw BadReply{"checkpoint " + id + " needs {\"pass\": true|false, \"why\": string}"};
    }
    std::string why;
    if (v.contains("why")) {
      if (!v["why"].is_string()) throw BadReply{"\"why\" of checkpoint " + id + " must be a string"};
      why = v["why"].get<std::string>();
    }
    out.push_back({id, v["pass"].get<bool>(), why});
  }
  return out;
}

std::vector<bench::Checkpoint> parse_checkpoints(const std::string& reply) {
  nlohmann::json j;
  try {
    j = extract_json(reply);
  } catch (const FormatError&) {
    throw BadReply{"no JSON object found"};
  }
  const nlohmann::json* list = &j;
  if (j.is_object() && j.contains("checkpoints")) list = &j["checkpoints"];
  if (!list->is_array()) throw BadReply{"expected {\"checkpoints\": [...]}"};
  std::vector<bench::Checkpoint> out;
  for (const auto& item : *list) {
    try {
      out.push_back({item.at("id").get<std::string>(), bench::parse_dimension(item.at("dimension").get<std::string>()),
                     item.at("question").get<std::string>(), item.value("hard", false)});
    } catch (const std::exception& e) {
      throw BadReply{std::string("malformed checkpoint entry: ") + e.what()};
    }
  }
  return out;
}

int parse_score(const std::string& reply) {
  nlohmann::json j;
  try {
    j = extract_json(reply);
  } catch (const FormatError&) {
    throw BadReply{"no JSON found"};
  }
  if (j.is_object() && j.contains("score")) j = j["score"];
  if (!j.is_number_integer()) throw BadReply{"the score must be an integer from 0 to 10"};
  const auto n = j.get<std::int64_t>();
  if (n < 0 || n > 10) throw BadReply{"the score " + std::to_string(n) + " is outside 0-10"};
  return static_cast<int>(n);
}

// Rules of the case that concern its checkpoint list.
std::vector<std::string> checkpoint_problems(const bench::EvalCase& c) {
  static const std::vector<std::string> kRules = {"checkpoint_id", "duplicate_checkpoint_id", "inactive_dimension",
                                                  "checkpoints_per_dimension", "hard_checkpoint"};
  std::vector<std::string> out;
  if (c.checkpoints.empty()) out.push_back("no checkpoints were returned");
  for (const auto& v : bench::validate_case(c)) {
    if (std::find(kRules.begin(), kRules.end(), v.rule) != kRules.end()) out.push_back(v.message);
  }
  return out;
}

std::string join(const std::vector<std::string>& items, const char* sep) {
  std::string out;
  for (const auto& s : items) {
    if (!out.empty()) out += sep;
    out += s;
  }
  return out;
}

}  // namespace

nlohmann::json extract_json(const std::string& reply) {
  const std::string text = trim(reply);
  if (auto j = nlohmann::json::parse(text, nullptr, false); !j.is_discarded()) return j;
  const auto open = text.find('{');
  const auto close = text.rfind('}');
  if (open != std::string::npos && close != std::string::npos && close > open) {
    if (auto j = nlohmann::json::parse(text.substr(open, close - open + 1), nullptr, false); !j.is_discarded()) {
      return j;
    }
  }
  throw FormatError("judge reply holds no JSON value");
}

JudgeClient::JudgeClient(JudgeConfig cfg, std::shared_ptr<JudgeTransport> transport, PromptLibrary prompts,
                         std::shared_ptr<VerdictCache> cache)
    : cfg_(std::move(cfg)), transport_(std::move(transport)), prompts_(std::move(prompts)), cache_(std::move(cache)) {
  cfg_.validate();
  if (!transport_) throw ConfigError("judge client needs a transport");
  slots_ = std::make_unique<std::counting_semaphore<>>(static_cast<std::ptrdiff_t>(cfg_.max_concurrent));
}

void JudgeClient::log_transcript(const nlohmann::json& request, const HttpResponse& response) {
  if (!cfg_.transcript_path) return;
  nlohmann::json req = request;
  abbreviate_images(req);
  nlohmann::json entry = {
      {"time", std::chrono::duration_cast<std::chrono::milliseconds>(
                   std::chrono::system_clock::now().time_since_epoch())
                   .count()},
      {"authorization", cfg_.api_key.empty() ? "" : "Bearer [redacted]"},
      {"request", req},
      {"status", response.status},
      {"response", response.body},
  };
  if (!response.error.empty()) entry["error"] = response.error;
  std::lock_guard lock(log_mu_);
  std::ofstream out(*cfg_.transcript_path, std::ios::app);
  if (!out) throw IoError("cannot append to transcript '" + cfg_.transcript_path->string() + "'");
  out << entry.dump() << '\n';
}

std::string JudgeClient::complete(const JudgePrompt& prompt, std::size_t& attempts) {
  const nlohmann::json request = chat_request(prompt, cfg_);
  const std::string body = request.dump();
  HttpResponse last;
  for (int attempt = 0; attempt <= cfg_.max_retries; ++attempt) {
    if (attempt > 0) {
      const auto idx = std::min<std::size_t>(static_cast<std::size_t>(attempt - 1), cfg_.backoff.size() - 1);
      std::this_thread::sleep_for(cfg_.backoff[idx]);
    }
    ++attempts;
    slots_->acquire();
    try {
      last = transport_->post(body);
    } catch (...) {
      slots_->release();
      throw;
    }
    slots_->release();
    log_transcript(request, last);
    if (last.status == 200) return last.body;
    if (!is_retryable(last)) {
      throw TransportError("judge returned HTTP " + std::to_string(last.status) + ": " + last.body.substr(0, 300),
                           last.status);
    }
  }
  const std::string why = last.status == 0 ? last.error : "HTTP " + std::to_string(last.status);
  throw TransportError("judge request failed after " + std::to_string(cfg_.max_retries + 1) + " attempts (" +
                           why + ")",
                       last.status);
}

VerdictBatch JudgeClient::request_verdicts(const JudgePrompt& prompt, const std::string& case_id,
                                           std::span<const bench::Checkpoint> expected) {
  VerdictBatch batch;
  batch.case_id = case_id;
  std::vector<scoring::Verdict> got;
  JudgePrompt current = prompt;
  for (int ask = 0;; ++ask) {
    const std::string body = complete(current, batch.attempt_count);
    std::string text;
    try {
      text = assistant_text(body);
      batch.raw_response += (batch.raw_response.empty() ? "" : "\n") + text;
      got = parse_verdicts(text);
      break;
    } catch (const BadReply& bad) {
      if (text.empty()) batch.raw_response += (batch.raw_response.empty() ? "" : "\n") + body;
      if (ask == 1) {
        throw ParseError("case " + case_id + ": judge reply unusable after a re-ask: " + bad.problem,
                         batch.raw_response);
      }
      current = with_format_reminder(prompt, bad.problem, prompts_);
    }
  }

  // Exact id coverage, reported in manifest order.
  std::vector<std::string> missing;
  std::vector<std::string> extra;
  for (const auto& cp : expected) {
    const auto it = std::find_if(got.begin(), got.end(), [&](const auto& v) { return v.checkpoint_id == cp.id; });
    if (it == got.end()) {
      missing.push_back(cp.id);
    } else {
      batch.verdicts.push_back(*it);
    }
  }
  for (const auto& v : got) {
    if (std::none_of(expected.begin(), expected.end(), [&](const auto& cp) { return cp.id == v.checkpoint_id; })) {
      extra.push_back(v.checkpoint_id);
    }
  }
  if (!missing.empty() || !extra.empty()) {
    std::string msg = "case " + case_id + ": judge verdicts do not match the checkpoints";
    if (!missing.empty()) msg += "; missing: " + join(missing, ", ");
    if (!extra.empty()) msg += "; unexpected: " + join(extra, ", ");
    throw CoverageError(msg, missing, extra);
  }
  return batch;
}

VerdictBatch JudgeClient::evaluate_case(const bench::EvalCase& c, const ImageSet& images) {
  const auto checkpoints = scored_checkpoints(c);
  if (checkpoints.empty()) throw SchemaError(c.case_id, "no checkpoints to evaluate");

  auto run = [&] {
    if (!cfg_.per_checkpoint) {
      return request_verdicts(render_eval_prompt(c, images, prompts_, checkpoints), c.case_id, checkpoints);
    }
    VerdictBatch all;
    all.case_id = c.case_id;
    for (const auto& cp : checkpoints) {
      const std::span<const bench::Checkpoint> one(&cp, 1);
      VerdictBatch b = request_verdicts(render_eval_prompt(c, images, prompts_, one), c.case_id, one);
      all.verdicts.push_back(b.verdicts.front());
      all.raw_response += (all.raw_response.empty() ? "" : "\n") + b.raw_response;
      all.attempt_count += b.attempt_count;
    }
    return all;
  };

  if (!cache_) return run();
  const CacheKey key{c.case_id, sha256_hex(images.generated_url), cfg_.model_name,
                     sha256_hex(render_eval_prompt(c, images, prompts_, checkpoints).digest() + "|" + cfg_.digest())};
  return cache_->get_or_compute(key, run);
}

std::vector<bench::Checkpoint> JudgeClient::generate_checkpoints(const bench::EvalCase& c,
                                                                 const std::vector<std::string>& reference_urls) {
  const JudgePrompt prompt = render_checkpoint_prompt(c, reference_urls, prompts_);
  JudgePrompt current = prompt;
  std::size_t attempts = 0;
  std::string raw;
  for (int ask = 0;; ++ask) {
    const std::string body = complete(current, attempts);
    std::string problem;
    try {
      const std::string text = assistant_text(body);
      raw += (raw.empty() ? "" : "\n") + text;
      bench::EvalCase candidate = c;
      candidate.checkpoints = parse_checkpoints(text);
      const auto problems = checkpoint_problems(candidate);
      if (problems.empty()) return candidate.checkpoints;
      problem = join(problems, "; ");
    } catch (const BadReply& bad) {
      problem = bad.problem;
    }
    if (ask == 1) {
      throw GenerationError("case " + c.case_id + ": generated checkpoints rejected after a re-ask: " + problem, raw);
    }
    current = with_format_reminder(prompt, problem, prompts_);
  }
}

double JudgeClient::score_answer_set(const bench::EvalCase& c, const ImageSet& images) {
  const JudgePrompt prompt = render_answer_prompt(c, images, prompts_);
  JudgePrompt current = prompt;
  std::size_t attempts = 0;
  std::string raw;
  for (int ask = 0;; ++ask) {
    const std::string body = complete(current, attempts);
    try {
      const std::string text = assistant_text(body);
      raw += (raw.empty() ? "" : "\n") + text;
      return 10.0 * parse_score(text);
    } catch (const BadReply& bad) {
      if (ask == 1) {
        throw ParseError("case " + c.case_id + ": answer-set score unusable after a re-ask: " + bad.problem, raw);
      }
      current = with_format_reminder(prompt, bad.problem, prompts_);
    }
  }
}

}  // namespace mref::judge
