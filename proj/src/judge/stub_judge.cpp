#include "mref/judge/stub_judge.hpp"

#include <fstream>
#include <sstream>
#include <thread>

#include "mref/bench/types.hpp"
#include "mref/errors.hpp"
#include "mref/judge/digest.hpp"

namespace mref::judge {

namespace {

struct ParsedRequest {
  std::string kind;
  std::string case_id;
  std::vector<std::string> checkpoint_ids;
  std::vector<std::string> dimensions;
  std::string generated_url;
};

std::string after(const std::string& line, std::string_view prefix) {
  return line.substr(prefix.size());
}

ParsedRequest parse_request(const nlohmann::json& body) {
  ParsedRequest r;
  const auto& content = body.at("messages").at(1).at("content");
  const std::string text = content.at(0).at("text").get<std::string>();
  std::istringstream in(text);
  std::string line;
  bool in_dims = false;
  while (std::getline(in, line)) {
    if (line.starts_with("Request: ")) r.kind = after(line, "Request: ");
    else if (line.starts_with("Case ID: ")) r.case_id = after(line, "Case ID: ");
    else if (line.starts_with("Active dimensions:")) in_dims = true;
    else if (line.starts_with("- [")) r.checkpoint_ids.push_back(line.substr(3, line.find(']') - 3));
    else if (in_dims && line.starts_with("- ")) r.dimensions.push_back(line.substr(2, 1));
    else in_dims = false;
  }
  for (std::size_t i = 1; i + 1 < content.size(); ++i) {
    if (content[i].value("text", "") == "Generated image:") {
      r.generated_url = content[i + 1].at("image_url").at("url").get<std::string>();
    }
  }
  return r;
}

// First byte of a SHA-256 digest, 0-255.
unsigned hash_byte(const std::string& text) { return static_cast<unsigned>(std::stoul(sha256_hex(text).substr(0, 2), nullptr, 16)); }

}  // namespace

StubJudge::StubJudge(Mode mode, nlohmann::json fixture, std::uint64_t salt)
    : mode_(mode), fixture_(std::move(fixture)), salt_(salt) {}

StubJudge::StubJudge(nlohmann::json fixture) : StubJudge(Mode::Replay, std::move(fixture), 0) {
  if (!fixture_.is_object()) throw FormatError("stub fixture must be a JSON object");
}

std::shared_ptr<StubJudge> StubJudge::from_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open stub fixture '" + path.string() + "'");
  try {
    return std::make_shared<StubJudge>(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError("stub fixture '" + path.string() + "': " + e.what());
  }
}

std::shared_ptr<StubJudge> StubJudge::rule_based(std::uint64_t salt) {
  return std::shared_ptr<StubJudge>(new StubJudge(Mode::Rules, nlohmann::json::object(), salt));
}

std::string StubJudge::answer(const nlohmann::json& request) const {
  const ParsedRequest r = parse_request(request);
  const std::string image_digest = sha256_hex(r.generated_url);

  if (mode_ == Mode::Replay) {
    const auto raw = fixture_.find("raw");
    if (raw != fixture_.end() && raw->contains(r.case_id) && (*raw)[r.case_id].contains(r.kind)) {
      return (*raw)[r.case_id][r.kind].get<std::string>();
    }
  }

  if (r.kind == "verdicts") {
    nlohmann::json reply = nlohmann::json::object();
    for (const auto& id : r.checkpoint_ids) {
      if (mode_ == Mode::Rules) {
        const bool pass = hash_byte(std::to_string(salt_) + "|" + r.case_id + "|" + id + "|" + image_digest) < 179;
        reply[id] = {{"pass", pass}, {"why", pass ? "requirement visible" : "requirement not met"}};
      } else {
        const auto& v = fixture_.value("verdicts", nlohmann::json::object());
        if (v.contains(r.case_id) && v[r.case_id].contains(id)) reply[id] = v[r.case_id][id];
      }
    }
    return reply.dump();
  }

  if (r.kind == "answer_set_score") {
    if (mode_ == Mode::Rules) {
      return nlohmann::json{{"score", hash_byte(std::to_string(salt_) + "|answer|" + r.case_id + "|" + image_digest) % 11}}
          .dump();
    }
    const auto& s = fixture_.value("answer_scores", nlohmann::json::object());
    if (!s.contains(r.case_id)) return "{}";
    return nlohmann::json{{"score", s[r.case_id]}}.dump();
  }

  if (r.kind == "checkpoints") {
    nlohmann::json list = nlohmann::json::array();
    if (mode_ == Mode::Rules) {
      for (const auto& letter : r.dimensions) {
        const auto dim = bench::parse_dimension(letter);
        for (int i = 1; i <= 3; ++i) {
          list.push_back({{"id", letter + "_check_" + std::to_string(i)},
                          {"dimension", letter},
                          {"question", "Is requirement " + std::to_string(i) + " of " + std::string(bench::label(dim)) +
                                           " met for this case?"},
                          {"hard", i == 1}});
        }
      }
    } else {
      const auto& c = fixture_.value("checkpoints", nlohmann::json::object());
      if (c.contains(r.case_id)) list = c[r.case_id];
    }
    return nlohmann::json{{"checkpoints", list}}.dump();
  }

  return "unrecognized request";
}

HttpResponse StubJudge::post(const std::string& body) {
  ++calls_;
  const std::size_t now = ++in_flight_;
  std::size_t seen = max_in_flight_.load();
  while (now > seen && !max_in_flight_.compare_exchange_weak(seen, now)) {
  }
  if (delay_.count() > 0) std::this_thread::sleep_for(delay_);

  HttpResponse out;
  try {
    out.status = 200;
    out.body = chat_reply(answer(nlohmann::json::parse(body)));
  } catch (const std::exception& e) {
    out.status = 400;
    out.body = std::string("bad request: ") + e.what();
  }
  --in_flight_;
  return out;
}

}  // namespace mref::judge
