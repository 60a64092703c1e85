#include "mref/judge/transport.hpp"

#include <httplib.h>

#include <json.hpp>

#include "mref/errors.hpp"

namespace mref::judge {

HttpTransport::HttpTransport(const JudgeConfig& cfg) : api_key_(cfg.api_key), timeout_(cfg.request_timeout) {
  const std::string& url = cfg.base_url;
  const auto scheme_end = url.find("://");
  if (url.empty() || scheme_end == std::string::npos) {
    throw ConfigError("judge base URL must look like http(s)://host[:port][/path], got '" + url + "'");
  }
  const std::string scheme = url.substr(0, scheme_end);
  if (scheme != "http" && scheme != "https") throw ConfigError("unsupported judge URL scheme '" + scheme + "'");
  const auto path_start = url.find('/', scheme_end + 3);
  origin_ = url.substr(0, path_start);
  std::string prefix = path_start == std::string::npos ? "" : url.substr(path_start);
  while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
  path_ = prefix + "/chat/completions";
}

HttpResponse HttpTransport::post(const std::string& body) {
  // One client per call: httplib clients are not meant for concurrent use.
  httplib::Client client(origin_);
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(timeout_);
  const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(timeout_ - secs);
  client.set_connection_timeout(secs.count(), usecs.count());
  client.set_read_timeout(secs.count(), usecs.count());
  client.set_write_timeout(secs.count(), usecs.count());
  httplib::Headers headers;
  if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);

  HttpResponse out;
  auto res = client.Post(path_, headers, body, "application/json");
  if (!res) {
    out.error = httplib::to_string(res.error());
    return out;
  }
  out.status = res->status;
  out.body = res->body;
  return out;
}

std::string chat_reply(const std::string& content) {
  return nlohmann::json{{"choices", {{{"index", 0}, {"message", {{"role", "assistant"}, {"content", content}}}}}}}
      .dump();
}

}  // namespace mref::judge
