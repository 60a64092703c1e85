#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <mutex>
#include <ostream>
#include <random>
#include <thread>

#include "mref/bench/manifest.hpp"
#include "mref/cli/cli.hpp"
#include "mref/dar/tensor_io.hpp"
#include "mref/judge/stub_judge.hpp"

namespace mref::cli {

namespace {

constexpr const char* kImageExtensions[] = {".png", ".jpg", ".jpeg", ".webp", ".gif", ".bmp"};

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (const auto& s : items) out += (out.empty() ? "" : ", ") + s;
  return out;
}

judge::JudgeConfig load_judge_config(const EvaluateOptions& opts) {
  auto cfg = judge::JudgeConfig::from_env();
  if (opts.judge_config) {
    std::ifstream in(*opts.judge_config);
    if (!in) throw IoError("cannot read judge config '" + opts.judge_config->string() + "'");
    try {
      cfg.apply_json(nlohmann::json::parse(in));
    } catch (const nlohmann::json::parse_error& e) {
      throw ConfigError(opts.judge_config->string() + ": " + e.what());
    }
  }
  const bool offline = opts.stub || opts.stub_fixture;
  if (offline && cfg.model_name.empty()) cfg.model_name = "stub-judge";
  if (!offline && cfg.base_url.empty()) {
    throw ConfigError(std::string("no judge endpoint: set ") + judge::kEnvBaseUrl + " or pass --stub");
  }
  cfg.validate();
  return cfg;
}

std::shared_ptr<judge::JudgeTransport> make_transport(const EvaluateOptions& opts, const judge::JudgeConfig& cfg) {
  if (opts.stub_fixture) return judge::StubJudge::from_file(*opts.stub_fixture);
  if (opts.stub) return judge::StubJudge::rule_based();
  return std::make_shared<judge::HttpTransport>(cfg);
}

// Runs fn(i) for i in [0, n) on up to `workers` threads. The first exception
// stops the remaining work and is rethrown.
template <class Fn>
void parallel_for(std::size_t n, std::size_t workers, Fn fn) {
  std::atomic<std::size_t> next{0};
  std::atomic<bool> stop{false};
  std::exception_ptr first;
  std::mutex mu;
  auto loop = [&] {
    for (std::size_t i; !stop && (i = next++) < n;) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(mu);
        if (!first) first = std::current_exception();
        stop = true;
      }
    }
  };
  std::vector<std::thread> threads;
  for (std::size_t t = 1; t < std::min(workers, n); ++t) threads.emplace_back(loop);
  loop();
  for (auto& t : threads) t.join();
  if (first) std::rethrow_exception(first);
}

template <class Fn>
auto ask_judge(const std::string& case_id, Fn fn) {
  try {
    return fn();
  } catch (const TransportError& e) {
    throw JudgeFailure("case '" + case_id + "': " + e.what());
  } catch (const ParseError& e) {
    throw JudgeFailure("case '" + case_id + "': " + e.what());
  } catch (const CoverageError& e) {
    throw JudgeFailure("case '" + case_id + "': " + e.what());
  }
}

double row_mass(const dar::AttentionMap& a, std::span<const std::size_t> keys) {
  double total = 0.0;
  for (std::size_t i = 0; i < a.n_queries(); ++i)
    for (std::size_t h = 0; h < a.n_heads(); ++h)
      for (std::size_t k : keys) total += a.at(i, h, k);
  return total / static_cast<double>(a.n_queries() * a.n_heads());
}

}  // namespace

std::optional<std::filesystem::path> find_generated_image(const std::filesystem::path& dir,
                                                          const std::string& case_id) {
  for (const char* ext : kImageExtensions) {
    auto path = dir / (case_id + ext);
    if (std::filesystem::is_regular_file(path)) return path;
  }
  return std::nullopt;
}

std::unique_ptr<judge::JudgeClient> make_judge_client(const EvaluateOptions& opts) {
  const auto cfg = load_judge_config(opts);
  auto prompts = opts.prompts_dir ? judge::PromptLibrary::load(*opts.prompts_dir) : judge::PromptLibrary::builtin();
  auto cache = opts.cache_dir ? std::make_shared<judge::VerdictCache>(*opts.cache_dir) : nullptr;
  return std::make_unique<judge::JudgeClient>(cfg, make_transport(opts, cfg), std::move(prompts), std::move(cache));
}

EvaluateResult evaluate(const EvaluateOptions& opts, std::ostream& log) {
  if (opts.runs < 1) throw ConfigError("--runs must be at least 1");
  if (!std::filesystem::is_directory(opts.images_dir)) {
    throw IoError("images directory '" + opts.images_dir.string() + "' does not exist");
  }
  const auto cases = bench::load_manifest(opts.manifest);
  for (const auto& c : cases) {
    if (c.checkpoints.empty()) throw SchemaError(c.case_id, "no checkpoints yet; run generate-checkpoints first");
  }

  EvaluateResult result;
  std::vector<std::pair<const bench::EvalCase*, std::filesystem::path>> work;
  for (const auto& c : cases) {
    if (auto img = find_generated_image(opts.images_dir, c.case_id)) {
      work.emplace_back(&c, *img);
    } else {
      result.skipped.push_back(c.case_id);
    }
  }
  if (!result.skipped.empty()) {
    const std::string msg = "no generated image in '" + opts.images_dir.string() + "' for: " + join(result.skipped);
    if (!opts.skip_missing) throw SchemaError("", msg);
    log << "warning: skipping " << result.skipped.size() << " case(s); " << msg << "\n";
  }
  if (work.empty()) throw SchemaError("", "no case has a generated image");

  const auto client_ptr = make_judge_client(opts);
  auto& client = *client_ptr;
  const auto& cfg = client.config();

  const auto ref_root = opts.reference_root.value_or(opts.manifest.parent_path());
  std::vector<judge::ImageSet> images;
  for (const auto& [c, img] : work) images.push_back(judge::resolve_images(*c, ref_root, img));

  auto run_once = [&] {
    std::vector<scoring::CaseScore> scores(work.size());
    parallel_for(work.size(), cfg.max_concurrent, [&](std::size_t i) {
      const auto& c = *work[i].first;
      const auto batch = ask_judge(c.case_id, [&] { return client.evaluate_case(c, images[i]); });
      std::optional<double> answer;
      if (c.answer_set) answer = ask_judge(c.case_id, [&] { return client.score_answer_set(c, images[i]); });
      scores[i] = scoring::case_score(c, batch.verdicts, answer);
    });
    return scoring::model_report(opts.model_name, std::move(scores));
  };

  std::optional<report::ScoreReport> first;
  if (opts.runs == 1) {
    first = run_once();
  } else {
    std::size_t run = 0;
    result.stability = report::stability_check(
        [&] {
          auto r = run_once();
          log << "run " << ++run << "/" << opts.runs << ": avg " << report::format_exact(r.avg()) << "\n";
          if (!first) first = r;
          return r.avg();
        },
        opts.runs);
  }
  result.report = std::move(*first);
  result.report.metadata = {cfg.model_name, cfg.digest(), utc_timestamp()};

  report::write_report_files(result.report, opts.output_dir, "report");
  for (const char* ext : {".md", ".json", ".csv"}) result.written.push_back(opts.output_dir / (std::string("report") + ext));
  if (result.stability) {
    const auto path = opts.output_dir / "stability.json";
    std::ofstream(path) << report::stability_to_json(*result.stability).dump(2) << "\n";
    result.written.push_back(path);
  }
  return result;
}

DarDemoResult run_dar_demo(const std::filesystem::path& dir, const dar::RebalanceConfig& cfg) {
  const auto queries = dar::read_tensor(dir / "queries.dart");
  const auto keys = dar::read_tensor(dir / "keys.dart");
  const auto segments = dar::read_segments(dir / "segments.json");

  const auto before = dar::baseline_attention(queries, keys);
  const auto after = dar::rebalance(queries, keys, segments, cfg);

  DarDemoResult r;
  r.stats = after.stats;
  for (const auto& seg : segments.reference_segments()) {
    std::vector<std::size_t> positions(seg.length);
    for (std::size_t k = 0; k < seg.length; ++k) positions[k] = seg.start + k;
    r.per_reference.push_back({seg.ref_index, row_mass(before, positions), row_mass(after.attention, positions)});
  }
  // Bands come from the normalized scores, so they are defined even at gamma 0.
  const auto ref_positions = segments.reference_positions();
  std::vector<std::size_t> amplified;
  for (std::size_t j = 0; j < ref_positions.size(); ++j) {
    const double s = r.stats.normalized_scores[j];
    if (s >= cfg.tau_high) amplified.push_back(ref_positions[j]);
    else if (s <= cfg.tau_low) ++r.attenuated_tokens;
  }
  r.amplified_tokens = amplified.size();
  r.amplified_before = row_mass(before, amplified);
  r.amplified_after = row_mass(after.attention, amplified);
  return r;
}

std::string dar_demo_table(const DarDemoResult& r) {
  std::string out = "| Keys | Before | After |\n|---|---:|---:|\n";
  char buf[160];
  for (const auto& s : r.per_reference) {
    std::snprintf(buf, sizeof buf, "| ref %zu | %.6f | %.6f |\n", s.ref_index, s.before, s.after);
    out += buf;
  }
  std::snprintf(buf, sizeof buf, "| amplified tokens (%zu) | %.6f | %.6f |\n", r.amplified_tokens,
                r.amplified_before, r.amplified_after);
  out += buf;
  std::snprintf(buf, sizeof buf, "\nattenuated tokens: %zu\n", r.attenuated_tokens);
  return out + buf;
}

void write_dar_fixture(const std::filesystem::path& dir, std::uint64_t seed) {
  constexpr std::size_t kHeads = 2, kDim = 8, kQueries = 16, kSeg = 6;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);

  // One unit direction per head shared by queries and the strong reference.
  std::vector<double> dir_vec(kHeads * kDim);
  for (std::size_t h = 0; h < kHeads; ++h) {
    double norm = 0.0;
    for (std::size_t j = 0; j < kDim; ++j) {
      dir_vec[h * kDim + j] = noise(rng);
      norm += dir_vec[h * kDim + j] * dir_vec[h * kDim + j];
    }
    for (std::size_t j = 0; j < kDim; ++j) dir_vec[h * kDim + j] /= std::sqrt(norm);
  }
  auto fill = [&](std::size_t tokens, double along, double spread) {
    std::vector<double> data;
    for (std::size_t t = 0; t < tokens; ++t)
      for (std::size_t h = 0; h < kHeads; ++h)
        for (std::size_t j = 0; j < kDim; ++j) data.push_back(along * dir_vec[h * kDim + j] + spread * noise(rng));
    return data;
  };

  std::vector<double> q = fill(kQueries, 2.0, 0.3);
  std::vector<double> k;
  for (auto [along, spread] : {std::pair{0.0, 0.5}, {3.0, 0.3}, {0.0, 0.5}, {0.0, 0.5}}) {
    const auto part = fill(kSeg, along, spread);
    k.insert(k.end(), part.begin(), part.end());
  }
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create '" + dir.string() + "': " + ec.message());
  dar::write_tensor(dir / "queries.dart", dar::HeadedTensor({kQueries, kHeads, kDim}, std::move(q)));
  dar::write_tensor(dir / "keys.dart", dar::HeadedTensor({4 * kSeg, kHeads, kDim}, std::move(k)));
  dar::write_segments(dir / "segments.json",
                      dar::KeySegments({{dar::SegmentKind::Text, 0, 0, kSeg},
                                        {dar::SegmentKind::Reference, 1, kSeg, kSeg},
                                        {dar::SegmentKind::Reference, 2, 2 * kSeg, kSeg},
                                        {dar::SegmentKind::Noise, 0, 3 * kSeg, kSeg}}));
}

}  // namespace mref::cli
