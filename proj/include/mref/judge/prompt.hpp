#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "mref/bench/types.hpp"
#include "mref/judge/config.hpp"

namespace mref::judge {

enum class ImageRole { Reference, Generated };

struct PromptImage {
  ImageRole role = ImageRole::Reference;
  /// data: URL or remote http(s) URL.
  std::string url;

  bool operator==(const PromptImage&) const = default;
};

struct JudgePrompt {
  std::string system_text;
  std::string user_text;
  /// References in sequence order, then the generated image (if any).
  std::vector<PromptImage> images;

  /// SHA-256 over texts and image URLs.
  std::string digest() const;

  bool operator==(const JudgePrompt&) const = default;
};

/// Prompt texts by name: verdict_system, verdict_user, checkpoints_system,
/// checkpoints_user, answer_system, answer_user, format_reminder.
class PromptLibrary {
public:
  /// Texts compiled in from data/prompts.
  static PromptLibrary builtin();
  /// <dir>/<name>.txt for every name; throws IoError on a missing file.
  static PromptLibrary load(const std::filesystem::path& dir);

  const std::string& text(std::string_view name) const;

  static const std::vector<std::string>& names();

private:
  std::map<std::string, std::string, std::less<>> texts_;
};

/// MIME type from the file extension; FormatError for unknown extensions.
std::string image_mime(const std::filesystem::path& path);

/// "data:<mime>;base64,<payload>".
std::string data_url(std::string_view bytes, std::string_view mime);

/// Remote http(s) handles pass through; anything else is a file, resolved
/// against `root` when relative, and inlined as a data URL. IoError when the
/// file cannot be read.
std::string image_url(const std::string& handle, const std::filesystem::path& root = {});

struct ImageSet {
  std::vector<std::string> reference_urls;
  std::string generated_url;
};

/// Resolves a case's reference handles against `reference_root` and the
/// generated image path (relative to the working directory when relative).
ImageSet resolve_images(const bench::EvalCase& c, const std::filesystem::path& reference_root,
                        const std::filesystem::path& generated_image);

/// Verdict request listing `checkpoints` (all of the case's checkpoints on
/// active dimensions when empty) in manifest order.
JudgePrompt render_eval_prompt(const bench::EvalCase& c, const ImageSet& images,
                               const PromptLibrary& library = PromptLibrary::builtin(),
                               std::span<const bench::Checkpoint> checkpoints = {});

/// Checkpoint-generation request for the case's active dimensions.
/// Reference images are attached when `reference_urls` is non-empty.
JudgePrompt render_checkpoint_prompt(const bench::EvalCase& c,
                                     const std::vector<std::string>& reference_urls = {},
                                     const PromptLibrary& library = PromptLibrary::builtin());

/// Answer-set rubric request for a Story case.
JudgePrompt render_answer_prompt(const bench::EvalCase& c, const ImageSet& images,
                                 const PromptLibrary& library = PromptLibrary::builtin());

/// Copy of `prompt` whose user text ends with the format reminder.
JudgePrompt with_format_reminder(const JudgePrompt& prompt, const std::string& problem,
                                 const PromptLibrary& library = PromptLibrary::builtin());

/// Chat-completions request body.
nlohmann::json chat_request(const JudgePrompt& prompt, const JudgeConfig& cfg);

/// Checkpoints of active dimensions, manifest order.
std::vector<bench::Checkpoint> scored_checkpoints(const bench::EvalCase& c);

}  // namespace mref::judge
