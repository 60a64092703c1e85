#include "mref/judge/prompt.hpp"

#include <algorithm>
#include <cctype>

#include "builtin_prompts.hpp"
#include "mref/bench/templates.hpp"
#include "mref/errors.hpp"
#include "mref/judge/digest.hpp"

namespace mref::judge {

namespace {

std::string task_words(bench::TaskKind task) {
  std::string s(bench::to_string(task));
  std::replace(s.begin(), s.end(), '_', ' ');
  return s;
}

std::string bullet_list(const std::vector<std::string>& items) {
  if (items.empty()) return "- (none)";
  std::string out;
  for (const auto& item : items) {
    if (!out.empty()) out += '\n';
    out += "- " + item;
  }
  return out;
}

void attach(JudgePrompt& p, const ImageSet& images, bool generated) {
  for (const auto& url : images.reference_urls) p.images.push_back({ImageRole::Reference, url});
  if (generated) p.images.push_back({ImageRole::Generated, images.generated_url});
}

}  // namespace

std::string JudgePrompt::digest() const {
  nlohmann::json j = {{"system", system_text}, {"user", user_text}, {"images", nlohmann::json::array()}};
  for (const auto& img : images) {
    j["images"].push_back({{"role", img.role == ImageRole::Generated ? "generated" : "reference"},
                           {"url", img.url}});
  }
  return sha256_hex(j.dump());
}

const std::vector<std::string>& PromptLibrary::names() {
  static const std::vector<std::string> kNames = {"verdict_system",     "verdict_user",   "checkpoints_system",
                                                  "checkpoints_user",   "answer_system",  "answer_user",
                                                  "format_reminder"};
  return kNames;
}

PromptLibrary PromptLibrary::builtin() {
  PromptLibrary lib;
  for (const auto& [name, text] : builtin::kPrompts) lib.texts_.emplace(name, text);
  for (const auto& name : names()) {
    if (!lib.texts_.contains(name)) throw ConfigError("built-in prompt '" + name + "' is missing");
  }
  return lib;
}

PromptLibrary PromptLibrary::load(const std::filesystem::path& dir) {
  PromptLibrary lib;
  for (const auto& name : names()) lib.texts_.emplace(name, read_file_bytes(dir / (name + ".txt")));
  return lib;
}

const std::string& PromptLibrary::text(std::string_view name) const {
  const auto it = texts_.find(name);
  if (it == texts_.end()) throw ConfigError("no prompt text named '" + std::string(name) + "'");
  return it->second;
}

std::string image_mime(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char ch) { return std::tolower(ch); });
  if (ext == ".png") return "image/png";
  if (ext == ".jpg" || ext == ".jpeg") return "image/jpeg";
  if (ext == ".webp") return "image/webp";
  if (ext == ".gif") return "image/gif";
  if (ext == ".bmp") return "image/bmp";
  throw FormatError("unsupported image type '" + path.string() + "'");
}

std::string data_url(std::string_view bytes, std::string_view mime) {
  return "data:" + std::string(mime) + ";base64," + base64_encode(bytes);
}

std::string image_url(const std::string& handle, const std::filesystem::path& root) {
  if (handle.starts_with("http://") || handle.starts_with("https://")) return handle;
  if (handle.empty()) throw IoError("empty image handle");
  std::filesystem::path path(handle);
  if (path.is_relative() && !root.empty()) path = root / path;
  const std::string mime = image_mime(path);
  return data_url(read_file_bytes(path), mime);
}

ImageSet resolve_images(const bench::EvalCase& c, const std::filesystem::path& reference_root,
                        const std::filesystem::path& generated_image) {
  ImageSet out;
  for (const auto& handle : c.reference_images) out.reference_urls.push_back(image_url(handle, reference_root));
  out.generated_url = image_url(generated_image.string());
  return out;
}

std::vector<bench::Checkpoint> scored_checkpoints(const bench::EvalCase& c) {
  const auto dims = c.effective_dimensions();
  std::vector<bench::Checkpoint> out;
  for (const auto& cp : c.checkpoints) {
    if (std::find(dims.begin(), dims.end(), cp.dimension) != dims.end()) out.push_back(cp);
  }
  return out;
}

JudgePrompt render_eval_prompt(const bench::EvalCase& c, const ImageSet& images,
                               const PromptLibrary& library, std::span<const bench::Checkpoint> checkpoints) {
  const auto all = scored_checkpoints(c);
  if (checkpoints.empty()) checkpoints = all;
  std::vector<std::string> lines;
  for (const auto& cp : checkpoints) {
    lines.push_back("[" + cp.id + "] (" + std::string(bench::to_string(cp.dimension)) + ": " +
                    std::string(bench::label(cp.dimension)) + (cp.hard ? "; hard constraint" : "") + ") " +
                    cp.question);
  }
  const std::size_t n = images.reference_urls.size();
  const std::string note =
      bench::uses_hybrid_scoring(c.task)
          ? "the " + std::to_string(n) + " reference panels in story order, then the generated continuation."
          : std::to_string(n) + " reference images in order, then the generated image.";

  JudgePrompt p;
  p.system_text = library.text("verdict_system");
  p.user_text = bench::substitute(library.text("verdict_user"), {{"case_id", c.case_id},
                                                                 {"task", task_words(c.task)},
                                                                 {"instruction", c.instruction},
                                                                 {"image_note", note},
                                                                 {"checkpoint_list", bullet_list(lines)}});
  attach(p, images, true);
  return p;
}

JudgePrompt render_checkpoint_prompt(const bench::EvalCase& c, const std::vector<std::string>& reference_urls,
                                     const PromptLibrary& library) {
  std::vector<std::string> dims;
  for (auto d : c.effective_dimensions()) {
    dims.push_back(std::string(bench::to_string(d)) + ": " + std::string(bench::label(d)));
  }
  JudgePrompt p;
  p.system_text = library.text("checkpoints_system");
  p.user_text = bench::substitute(library.text("checkpoints_user"),
                                  {{"case_id", c.case_id},
                                   {"task", task_words(c.task)},
                                   {"instruction", c.instruction},
                                   {"reference_count", std::to_string(c.reference_images.size())},
                                   {"dimension_list", bullet_list(dims)}});
  attach(p, ImageSet{reference_urls, ""}, false);
  return p;
}

JudgePrompt render_answer_prompt(const bench::EvalCase& c, const ImageSet& images, const PromptLibrary& library) {
  if (!c.answer_set) throw SchemaError(c.case_id, "answer-set scoring needs an answer_set");
  JudgePrompt p;
  p.system_text = library.text("answer_system");
  p.user_text = bench::substitute(library.text("answer_user"),
                                  {{"case_id", c.case_id},
                                   {"instruction", c.instruction},
                                   {"reference_count", std::to_string(images.reference_urls.size())},
                                   {"narrative", c.answer_set->narrative},
                                   {"likely_outcomes", bullet_list(c.answer_set->likely_outcomes)},
                                   {"counterfactuals", bullet_list(c.answer_set->counterfactuals)}});
  attach(p, images, true);
  return p;
}

JudgePrompt with_format_reminder(const JudgePrompt& prompt, const std::string& problem,
                                 const PromptLibrary& library) {
  JudgePrompt p = prompt;
  p.user_text += "\n\n" + bench::substitute(library.text("format_reminder"), {{"problem", problem}});
  return p;
}

nlohmann::json chat_request(const JudgePrompt& prompt, const JudgeConfig& cfg) {
  nlohmann::json content = nlohmann::json::array();
  content.push_back({{"type", "text"}, {"text", prompt.user_text}});
  std::size_t ref = 0;
  for (const auto& img : prompt.images) {
    const std::string caption =
        img.role == ImageRole::Generated ? "Generated image:" : "Reference image " + std::to_string(++ref) + ":";
    content.push_back({{"type", "text"}, {"text", caption}});
    content.push_back({{"type", "image_url"}, {"image_url", {{"url", img.url}}}});
  }
  nlohmann::json body = {
      {"model", cfg.model_name},
      {"temperature", cfg.temperature},
      {"messages",
       nlohmann::json::array({{{"role", "system"}, {"content", prompt.system_text}},
                              {{"role", "user"}, {"content", content}}})},
  };
  if (cfg.seed) body["seed"] = *cfg.seed;
  return body;
}

}  // namespace mref::judge
