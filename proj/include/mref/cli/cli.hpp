#pragma once

#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "mref/dar/kernel.hpp"
#include "mref/errors.hpp"
#include "mref/judge/client.hpp"
#include "mref/report/report.hpp"

namespace mref::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitDataViolation = 1,
  kExitUsage = 2,
  kExitJudge = 3,
};

/// The judge failed to produce a usable answer: transport exhausted, reply
/// unparseable after the re-ask, or verdicts not covering the checklist.
class JudgeFailure : public Error {
public:
  using Error::Error;
};

/// Runs the command line `args` (args[0] is the program name) and returns
/// the exit code. Nothing is written to std::cout or std::cerr directly.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Maps an exception thrown by a command to its exit code.
int exit_code_for(const std::exception& e) noexcept;

// --- evaluate -----------------------------------------------------------

struct EvaluateOptions {
  std::filesystem::path manifest;
  std::filesystem::path images_dir;
  /// Root for relative reference handles; defaults to the manifest's directory.
  std::optional<std::filesystem::path> reference_root;
  std::filesystem::path output_dir;
  /// Offline verifier: replay fixture when given, rule-based otherwise.
  bool stub = false;
  std::optional<std::filesystem::path> stub_fixture;
  std::optional<std::filesystem::path> judge_config;
  std::optional<std::filesystem::path> prompts_dir;
  std::optional<std::filesystem::path> cache_dir;
  std::size_t runs = 1;
  bool skip_missing = false;
  std::string model_name = "model";
};

struct EvaluateResult {
  report::ScoreReport report;
  std::optional<report::StabilityResult> stability;
  /// Case ids without a generated image, skipped under skip_missing.
  std::vector<std::string> skipped;
  std::vector<std::filesystem::path> written;
};

/// Judge client from the judge-related options: stub replay, rule-based stub,
/// or HTTP with settings from the environment and the optional config file.
std::unique_ptr<judge::JudgeClient> make_judge_client(const EvaluateOptions& opts);

/// `<dir>/<case_id>.<ext>` for a supported image extension, if present.
std::optional<std::filesystem::path> find_generated_image(const std::filesystem::path& dir,
                                                          const std::string& case_id);

/// Scores every case of the manifest against the images in images_dir and
/// writes report.{md,json,csv} (plus stability.json for runs >= 2) into
/// output_dir. Missing images throw SchemaError unless skip_missing.
EvaluateResult evaluate(const EvaluateOptions& opts, std::ostream& log);

// --- dar demo -------------------------------------------------------------

struct SegmentShare {
  std::size_t ref_index = 0;
  double before = 0.0;
  double after = 0.0;
};

struct DarDemoResult {
  dar::AttentionStats stats;
  std::vector<SegmentShare> per_reference;
  /// Mean attention mass on tokens that received weight 1 + gamma.
  double amplified_before = 0.0;
  double amplified_after = 0.0;
  std::size_t amplified_tokens = 0;
  std::size_t attenuated_tokens = 0;
};

/// A demo fixture directory holds queries.dart, keys.dart and segments.json.
DarDemoResult run_dar_demo(const std::filesystem::path& fixture_dir, const dar::RebalanceConfig& cfg);
std::string dar_demo_table(const DarDemoResult& r);

/// Writes a deterministic demo fixture: 2 reference segments between a text
/// and a noise segment, with reference 1 keys aligned with the queries and
/// carrying larger norms.
void write_dar_fixture(const std::filesystem::path& dir, std::uint64_t seed);

}  // namespace mref::cli
