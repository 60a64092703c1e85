// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fail.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>

#include "mref/bench/manifest.hpp"
#include "mref/cli/cli.hpp"
#include "mref/dar/kernel.hpp"
#include "mref/report/report.hpp"
#include "mref/scoring/scoring.hpp"
#include "support/attention_oracle.hpp"
#include "support/scoring_oracle.hpp"

using namespace mref;

namespace {

const std::filesystem::path kFixtures = MREF_TEST_FIXTURES;

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* pattern, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, pattern, v);
  return buf;
}

// Row sums of every attention map produced anywhere in this run.
struct RowSumTracker {
  double worst = 0.0;
  std::size_t rows = 0;
  bool finite = true;

  void add(const dar::AttentionMap& a) {
    for (std::size_t i = 0; i < a.n_queries(); ++i)
      for (std::size_t h = 0; h < a.n_heads(); ++h) {
        long double s = 0;
        for (double v : a.row(i, h)) {
          finite = finite && std::isfinite(v);
          s += v;
        }
        worst = std::max(worst, static_cast<double>(std::abs(s - 1.0L)));
        ++rows;
      }
  }
} row_sums;

struct Instance {
  dar::HeadedTensor q, k;
  dar::KeySegments segs;
};

Instance random_instance(std::mt19937_64& rng) {
  const std::size_t heads = gen::between(rng, 1, 4), dim = gen::between(rng, 1, 16);
  auto segs = gen::segments(rng);
  auto q = gen::tensor(rng, gen::between(rng, 1, 40), heads, dim);
  auto k = gen::tensor(rng, segs.total_tokens(), heads, dim);
  return {std::move(q), std::move(k), std::move(segs)};
}

Outcome dar_identity() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(101);
  double worst_kernel = 0.0, worst_oracle = 0.0;
  for (int n = 0; n < 200; ++n) {
    const auto in = random_instance(rng);
    dar::RebalanceConfig cfg;
    cfg.gamma = 0.0;
    cfg.m = gen::between(rng, 2, 64);
    const auto out = dar::rebalance(in.q, in.k, in.segs, cfg).attention;
    const auto base = dar::baseline_attention(in.q, in.k);
    const auto ref = oracle::softmax(oracle::logits(in.q, in.k));
    row_sums.add(out);
    row_sums.add(base);
    for (std::size_t i = 0; i < out.n_queries(); ++i)
      for (std::size_t h = 0; h < out.n_heads(); ++h)
        for (std::size_t t = 0; t < out.n_keys(); ++t) {
          worst_kernel = std::max(worst_kernel, std::abs(out.at(i, h, t) - base.at(i, h, t)));
          worst_oracle = std::max(worst_oracle, std::abs(out.at(i, h, t) - ref[i][h][t]));
        }
  }
  const double secs = seconds_since(t0);
  return {worst_kernel <= 1e-12 && worst_oracle <= 1e-12 && secs < 5.0,
          "200 instances, max |diff| vs baseline " + fmt("%.3g", worst_kernel) + ", vs reference softmax " +
              fmt("%.3g", worst_oracle) + ", " + fmt("%.2f", secs) + " s"};
}

Outcome logit_scaling() {
  std::mt19937_64 rng(202);
  const double grid[] = {0.05, 0.15, 0.25, 0.35, 0.55};
  double worst = 0.0;
  std::size_t modulated = 0;
  for (int n = 0; n < 200; ++n) {
    const auto in = random_instance(rng);
    dar::RebalanceConfig cfg;
    cfg.gamma = grid[n % 5];
    const auto result = dar::rebalance(in.q, in.k, in.segs, cfg);
    row_sums.add(result.attention);
    const auto& w = result.stats.weights;
    for (double x : w) modulated += x != 1.0;
    const auto adjusted = dar::attention_logits(in.q, in.k, w);
    const auto plain = oracle::logits(in.q, in.k);
    for (std::size_t i = 0; i < adjusted.n_queries(); ++i)
      for (std::size_t h = 0; h < adjusted.n_heads(); ++h)
        for (std::size_t t = 0; t < adjusted.n_keys(); ++t)
          worst = std::max(worst, std::abs(adjusted.at(i, h, t) - w[t] * plain[i][h][t]));
  }
  return {worst <= 1e-10 && modulated > 0,
          "200 instances over gamma {0.05,0.15,0.25,0.35,0.55}, " + std::to_string(modulated) +
              " modulated keys, max |adjusted - w*baseline| " + fmt("%.3g", worst)};
}

Outcome sampling_oracle() {
  std::size_t pairs = 0, bad = 0;
  for (std::size_t lq = 1; lq <= 32; ++lq) {
    for (std::size_t m = 1; m <= lq; ++m) {
      if (m == 1 && lq > 1) continue;  // the formula divides by m - 1
      std::vector<std::size_t> want;
      if (lq == 1) {
        want = {0};
      } else {
        for (std::size_t i = 0; i < m; ++i) {
          const std::size_t idx = i * (lq - 1) / (m - 1);
          if (want.empty() || want.back() != idx) want.push_back(idx);
        }
      }
      ++pairs;
      bad += dar::sample_query_indices(lq, m) != want;
    }
  }
  // m = L_q reproduces the statistics of every query.
  std::mt19937_64 rng(303);
  std::size_t stat_bad = 0;
  for (std::size_t lq = 1; lq <= 32; ++lq) {
    auto segs = gen::segments(rng);
    const auto q = gen::tensor(rng, lq, 2, 5);
    const auto k = gen::tensor(rng, segs.total_tokens(), 2, 5);
    dar::RebalanceConfig cfg;
    cfg.m = std::max<std::size_t>(lq, 2);
    const auto stats = dar::rebalance(q, k, segs, cfg).stats;
    const auto full = dar::aggregate_scores(dar::probe_attention(q, k.gather(segs.reference_positions())));
    stat_bad += stats.raw_scores != full;
  }
  return {bad == 0 && stat_bad == 0, std::to_string(pairs) + " (L_q, m) pairs, " + std::to_string(bad) +
                                         " index mismatches, " + std::to_string(stat_bad) +
                                         " full-query statistic mismatches"};
}

Outcome softmax_rows() {
  std::mt19937_64 rng(404);
  // Logits pinned at +-500 plus random extremes.
  for (int n = 0; n < 50; ++n) {
    dar::LogitMap z(3, 2, 9);
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t h = 0; h < 2; ++h)
        for (std::size_t t = 0; t < 9; ++t) z.at(i, h, t) = (rng() % 2 ? 500.0 : -500.0) * (t % 3 ? 1.0 : 0.999);
    row_sums.add(dar::softmax_rows(z));
    const auto q = gen::tensor(rng, 6, 2, 4, 40.0);
    auto segs = gen::segments(rng);
    const auto k = gen::tensor(rng, segs.total_tokens(), 2, 4, 40.0);
    row_sums.add(dar::baseline_attention(q, k));
    row_sums.add(dar::rebalance(q, k, segs, dar::RebalanceConfig{}).attention);
  }
  return {row_sums.worst <= 1e-9 && row_sums.finite,
          std::to_string(row_sums.rows) + " rows across all randomized runs, max |sum - 1| " +
              fmt("%.3g", row_sums.worst)};
}

Outcome scoring_oracle() {
  const auto t0 = Clock::now();
  const auto r = oracle::enumerate_case_assignments();
  const double secs = seconds_since(t0);
  return {r.mismatches == 0 && r.cases > 0 && secs < 10.0,
          std::to_string(r.cases) + " assignments, " + std::to_string(r.mismatches) + " mismatches, " +
              fmt("%.2f", secs) + " s"};
}

Outcome hybrid_weights() {
  std::size_t bad = 0;
  for (int c = 0; c <= 100; c += 10)
    for (int a = 0; a <= 100; a += 10) {
      const double want = static_cast<double>(4 * c + 6 * a) / 10.0;
      bad += scoring::story_score(c, a) != want;
    }
  return {bad == 0, "121 (checkpoint, answer-set) pairs, " + std::to_string(bad) + " inexact"};
}

struct CliRun {
  int code;
  std::string out, err;
};

CliRun mref_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "mref");
  std::ostringstream out, err;
  const int code = cli::run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

std::filesystem::path scratch(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("mref_acceptance_" + name);
  std::filesystem::remove_all(dir);
  return dir;
}

nlohmann::json read_json(const std::filesystem::path& p) {
  std::ifstream in(p);
  return nlohmann::json::parse(in);
}

Outcome end_to_end_determinism() {
  const auto dir = scratch("runs");
  const auto r = mref_cli({"evaluate", (kFixtures / "manifest_12.json").string(), (kFixtures / "generated").string(),
                           "-o", dir.string(), "--stub", "--runs", "5"});
  if (r.code != 0) return {false, "evaluate exited with " + std::to_string(r.code) + ": " + r.err};
  const auto s = read_json(dir / "stability.json");
  const double gap = s["max_discrepancy"].get<double>();
  return {s["runs"] == 5 && gap == 0.0,
          "evaluate --stub --runs 5 on 12 cases, avg " + fmt("%.4f", s["run_scores"][0].get<double>()) +
              ", max_discrepancy " + fmt("%g", gap)};
}

Outcome injected_failure() {
  const auto cases = bench::load_manifest(kFixtures / "manifest_12.json");
  const auto& obj = *std::find_if(cases.begin(), cases.end(), [](const auto& c) { return c.case_id == "obj_01"; });
  const auto b_count = std::count_if(obj.checkpoints.begin(), obj.checkpoints.end(),
                                     [](const auto& cp) { return cp.dimension == bench::EvalDimension::Identity; });
  if (obj.effective_dimensions().size() != 5 || b_count != 3) return {false, "obj_01 is not a 5x(B=3) case"};

  std::map<std::string, double> finals[2];
  const char* fixtures[] = {"stub_all_pass.json", "stub_hard_fail_obj_01_B.json"};
  for (int i = 0; i < 2; ++i) {
    const auto dir = scratch(std::string("inject_") + std::to_string(i));
    const auto r = mref_cli({"evaluate", (kFixtures / "manifest_12.json").string(),
                             (kFixtures / "generated").string(), "-o", dir.string(), "--stub-fixture",
                             (kFixtures / fixtures[i]).string()});
    if (r.code != 0) return {false, "evaluate exited with " + std::to_string(r.code) + ": " + r.err};
    const auto doc = read_json(dir / "report.json");
    for (const auto& c : doc["per_case"]) finals[i][c["case_id"].get<std::string>()] = c["final"].get<double>();
  }
  const double drop = finals[0].at("obj_01") - finals[1].at("obj_01");
  std::size_t others_changed = 0;
  for (const auto& [id, v] : finals[0]) others_changed += id != "obj_01" && finals[1].at(id) != v;
  return {drop == 12.0 && others_changed == 0,
          "obj_01 " + fmt("%.2f", finals[0].at("obj_01")) + " -> " + fmt("%.2f", finals[1].at("obj_01")) +
              " (drop " + fmt("%.2f", drop) + "), other cases changed: " + std::to_string(others_changed)};
}

Outcome report_arithmetic() {
  const auto rows = report::load_reports(kFixtures / "published_rows.json");
  const auto d = report::compare_reports(report::find_report(rows, "BAGEL"), report::find_report(rows, "BAGEL + DAR"));
  const double delta = d.headline_avg_delta();
  return {d.stated_avg_delta.has_value() && std::abs(delta - 2.76) <= 0.01,
          "BAGEL -> BAGEL + DAR avg delta " + fmt("%+.4f", delta) + " (mean of task columns " +
              fmt("%+.4f", d.avg_delta) + ")"};
}

Outcome manifest_round_trip() {
  const auto path = kFixtures / "manifest_12.json";
  const auto first = bench::load_manifest(path);
  const auto tmp = std::filesystem::temp_directory_path() / "mref_acceptance_roundtrip.json";
  bench::save_manifest(tmp, first);
  const auto second = bench::load_manifest(tmp);
  const bool identity = second == first && bench::dump_manifest(second) == bench::dump_manifest(first);

  std::size_t rejected = 0, total = 0;
  std::string missed;
  for (const auto& entry : std::filesystem::directory_iterator(kFixtures / "invalid")) {
    const std::string stem = entry.path().stem().string();
    const std::string rule = stem.substr(0, stem.find("--"));
    ++total;
    try {
      bench::load_manifest(entry.path());
      missed += " " + stem;
    } catch (const SchemaError& e) {
      if (std::string(e.what()).find(rule) != std::string::npos) ++rejected;
      else missed += " " + stem;
    }
  }
  return {identity && total >= 9 && rejected == total,
          std::string("load/save/load ") + (identity ? "identical" : "DIFFERS") + " on " +
              std::to_string(first.size()) + " cases; " + std::to_string(rejected) + "/" + std::to_string(total) +
              " invalid fixtures rejected naming their rule" + (missed.empty() ? "" : "; missed:" + missed)};
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    std::function<Outcome()> run;
  };
  // Softmax normalization runs after the DAR criteria so it covers their maps too.
  const Criterion criteria[] = {
      {"DAR identity", dar_identity},
      {"Logit-scaling law", logit_scaling},
      {"Sampling oracle", sampling_oracle},
      {"Softmax normalization", softmax_rows},
      {"Scoring oracle", scoring_oracle},
      {"Hybrid weights", hybrid_weights},
      {"End-to-end determinism", end_to_end_determinism},
      {"Injected-failure arithmetic", injected_failure},
      {"Report arithmetic", report_arithmetic},
      {"Manifest round-trip", manifest_round_trip},
  };
  int failed = 0, n = 0;
  for (const auto& c : criteria) {
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("%s %2d %s: %s\n", o.pass ? "PASS" : "FAIL", ++n, c.name, o.detail.c_str());
  }
  std::printf("%d/%d criteria passed\n", n - failed, n);
  return failed ? 1 : 0;
}
