#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>
#include <sstream>

#include "mref/bench/manifest.hpp"
#include "mref/cli/cli.hpp"
#include "mref/dar/tensor_io.hpp"
#include "mref/judge/digest.hpp"

using mref::cli::run_cli;

namespace {

const std::filesystem::path kFixtures = MREF_TEST_FIXTURES;
const std::filesystem::path kData = MREF_TEST_DATA;

struct Run {
  int code = -1;
  std::string out, err;
};

Run cli(std::vector<std::string> args) {
  args.insert(args.begin(), "mref");
  std::ostringstream out, err;
  Run r;
  r.code = run_cli(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::filesystem::path scratch(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("mref_cli_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

std::string manifest() { return (kFixtures / "manifest_12.json").string(); }
std::string generated() { return (kFixtures / "generated").string(); }

nlohmann::json read_json(const std::filesystem::path& p) {
  std::ifstream in(p);
  return nlohmann::json::parse(in);
}

std::map<std::string, double> finals(const std::filesystem::path& report_json) {
  std::map<std::string, double> out;
  const auto doc = read_json(report_json);
  for (const auto& c : doc["per_case"]) out[c["case_id"].get<std::string>()] = c["final"].get<double>();
  return out;
}

}  // namespace

TEST_CASE("validate") {
  CHECK(cli({"validate", manifest()}).code == 0);
  CHECK(cli({"validate", "/nonexistent/manifest.json"}).code == 2);

  const auto dir = scratch("validate");
  auto doc = read_json(kFixtures / "manifest_12.json");
  doc["cases"][0]["checkpoints"].push_back({{"id", "B_check_4"}, {"dimension", "B"}, {"question", "q"}, {"hard", false}});
  doc["cases"][0]["checkpoints"].push_back({{"id", "B_check_5"}, {"dimension", "B"}, {"question", "q"}, {"hard", false}});
  std::ofstream(dir / "broken.json") << doc.dump();
  const auto broken = cli({"validate", (dir / "broken.json").string()});
  CHECK(broken.code == 1);
  CHECK(broken.err.find("obj_01") != std::string::npos);
  CHECK(broken.err.find("2-4 checkpoints per dimension") != std::string::npos);

  std::ofstream(dir / "malformed.json") << "{\"version\": 1, \"cases\": [";
  CHECK(cli({"validate", (dir / "malformed.json").string()}).code == 1);
}

TEST_CASE("usage") {
  CHECK(cli({}).code == 2);
  CHECK(cli({"frobnicate"}).code == 2);
  CHECK(cli({"evaluate", manifest()}).code == 2);
  const auto help = cli({"--help"});
  CHECK(help.code == 0);
  CHECK(help.out.find("evaluate") != std::string::npos);
}

TEST_CASE("evaluate with the all-pass stub") {
  const auto dir = scratch("eval_pass");
  const auto r = cli({"evaluate", manifest(), generated(), "-o", dir.string(), "--stub-fixture",
                      (kFixtures / "stub_all_pass.json").string(), "--model", "fixture"});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("| fixture | 100.00 | 100.00 | 100.00 | 100.00 | 100.00 | 100.00 | 100.00 |") !=
        std::string::npos);
  const auto j = read_json(dir / "report.json");
  for (const auto& [task, score] : j["per_task"].items()) CHECK(score.get<double>() == 100.0);
  CHECK(j["avg"].get<double>() == 100.0);
  CHECK(j["per_case"].size() == 12);
  CHECK(j["metadata"]["judge_model"] == "stub-judge");
  CHECK(std::filesystem::exists(dir / "report.md"));
  CHECK(std::filesystem::exists(dir / "report.csv"));
  CHECK_FALSE(std::filesystem::exists(dir / "stability.json"));
}

TEST_CASE("injected hard failure moves one case by 12 points") {
  const auto pass_dir = scratch("eval_a");
  const auto fail_dir = scratch("eval_b");
  REQUIRE(cli({"evaluate", manifest(), generated(), "-o", pass_dir.string(), "--stub-fixture",
               (kFixtures / "stub_all_pass.json").string()})
              .code == 0);
  REQUIRE(cli({"evaluate", manifest(), generated(), "-o", fail_dir.string(), "--stub-fixture",
               (kFixtures / "stub_hard_fail_obj_01_B.json").string()})
              .code == 0);
  const auto a = finals(pass_dir / "report.json");
  const auto b = finals(fail_dir / "report.json");
  CHECK(a.at("obj_01") - b.at("obj_01") == 12.0);
  CHECK(b.at("obj_01") == 88.0);
  for (const auto& [id, score] : a)
    if (id != "obj_01") CHECK(b.at(id) == score);
  CHECK(read_json(fail_dir / "report.json")["per_task"]["object_composition"].get<double>() == 94.0);
}

TEST_CASE("--runs reports stability") {
  const auto dir = scratch("eval_runs");
  const auto r = cli({"evaluate", manifest(), generated(), "-o", dir.string(), "--stub", "--runs", "5"});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("max_discrepancy = 0\n") != std::string::npos);
  const auto s = read_json(dir / "stability.json");
  CHECK(s["runs"] == 5);
  CHECK(s["max_discrepancy"].get<double>() == 0.0);
  CHECK(cli({"evaluate", manifest(), generated(), "-o", dir.string(), "--stub", "--runs", "0"}).code == 2);
}

TEST_CASE("rule-based stub and verdict cache agree") {
  const auto cache = scratch("eval_cache_store");
  const auto a = scratch("eval_cache_a");
  const auto b = scratch("eval_cache_b");
  REQUIRE(cli({"evaluate", manifest(), generated(), "-o", a.string(), "--stub", "--cache-dir", cache.string()})
              .code == 0);
  CHECK(std::distance(std::filesystem::directory_iterator(cache), {}) == 12);
  REQUIRE(cli({"evaluate", manifest(), generated(), "-o", b.string(), "--stub", "--cache-dir", cache.string()})
              .code == 0);
  CHECK(read_json(a / "report.json")["per_case"] == read_json(b / "report.json")["per_case"]);
}

TEST_CASE("missing generated images") {
  const auto images = scratch("partial_images");
  for (const auto& e : std::filesystem::directory_iterator(kFixtures / "generated"))
    if (e.path().stem() != "spa_02") std::filesystem::copy(e.path(), images / e.path().filename());
  const auto out = scratch("partial_out");

  const auto fatal = cli({"evaluate", manifest(), images.string(), "-o", out.string(), "--stub"});
  CHECK(fatal.code == 1);
  CHECK(fatal.err.find("spa_02") != std::string::npos);

  const auto skipped = cli({"evaluate", manifest(), images.string(), "-o", out.string(), "--stub", "--skip-missing"});
  CHECK(skipped.code == 0);
  CHECK(skipped.err.find("spa_02") != std::string::npos);
  CHECK(read_json(out / "report.json")["per_case"].size() == 11);

  CHECK(cli({"evaluate", manifest(), "/nonexistent/images", "-o", out.string(), "--stub"}).code == 2);
}

TEST_CASE("judge failures exit with 3") {
  const auto dir = scratch("judge_fail");
  auto fx = read_json(kFixtures / "stub_all_pass.json");
  fx["verdicts"]["cmp_01"].erase("A_check_2");
  std::ofstream(dir / "gap.json") << fx.dump();
  const auto gap = cli({"evaluate", manifest(), generated(), "-o", (dir / "out").string(), "--stub-fixture",
                        (dir / "gap.json").string()});
  CHECK(gap.code == 3);
  CHECK(gap.err.find("A_check_2") != std::string::npos);

  std::ofstream(dir / "judge.json") << R"({"base_url": "http://127.0.0.1:9/v1", "model_name": "j",
                                          "max_retries": 1, "backoff_ms": [1], "request_timeout_ms": 300})";
  const auto down = cli({"evaluate", manifest(), generated(), "-o", (dir / "out").string(), "--judge-config",
                         (dir / "judge.json").string()});
  CHECK(down.code == 3);

  std::ofstream(dir / "keyed.json") << R"({"base_url": "http://127.0.0.1:9/v1", "api_key": "sk-x"})";
  const auto keyed = cli({"evaluate", manifest(), generated(), "-o", (dir / "out").string(), "--judge-config",
                          (dir / "keyed.json").string()});
  CHECK(keyed.code == 2);
  CHECK(keyed.err.find("sk-x") == std::string::npos);
}

TEST_CASE("dar-demo") {
  const auto dir = scratch("dar");
  REQUIRE(cli({"dar-fixture", (dir / "fx").string(), "--seed", "3"}).code == 0);

  SUBCASE("gamma 0 leaves the shares unchanged") {
    const auto r = mref::cli::run_dar_demo(dir / "fx", mref::dar::RebalanceConfig{.gamma = 0.0});
    for (const auto& s : r.per_reference) CHECK(s.before == s.after);
    CHECK(r.amplified_before == r.amplified_after);
  }
  SUBCASE("amplified tokens gain share with the defaults") {
    const auto r = mref::cli::run_dar_demo(dir / "fx", mref::dar::RebalanceConfig{});
    REQUIRE(r.amplified_tokens > 0);
    CHECK(r.amplified_after >= r.amplified_before);
    REQUIRE(r.per_reference.size() == 2);
    CHECK(r.per_reference[0].ref_index == 1);
    CHECK(r.per_reference[0].after > r.per_reference[0].before);
  }
  SUBCASE("command output") {
    const auto r = cli({"dar-demo", (dir / "fx").string(), "--stats", (dir / "stats.json").string()});
    REQUIRE(r.code == 0);
    CHECK(r.out.find("| ref 1 |") != std::string::npos);
    const auto stats = mref::dar::stats_from_json(read_json(dir / "stats.json"));
    CHECK(stats.raw_scores.size() == 12);
    CHECK(stats.weights.size() == 24);
    CHECK(cli({"dar-demo", (dir / "fx").string(), "--gamma", "1.5"}).code == 2);
  }
  SUBCASE("malformed magic bytes") {
    std::filesystem::copy(dir / "fx", dir / "bad");
    auto bytes = mref::judge::read_file_bytes(dir / "bad" / "keys.dart");
    bytes[0] = 'X';
    std::ofstream(dir / "bad" / "keys.dart", std::ios::binary) << bytes;
    const auto r = cli({"dar-demo", (dir / "bad").string()});
    CHECK(r.code == 1);
    CHECK(r.err.find("magic") != std::string::npos);
  }
  CHECK(cli({"dar-demo", (dir / "missing").string()}).code == 2);
}

TEST_CASE("synthesize and generate-checkpoints") {
  const auto dir = scratch("synth");
  const std::string pools = (kData / "pools" / "example_pools.json").string();
  const auto a = cli({"synthesize", "--task", "spatial_composition", "--pools", pools, "--count", "6", "--seed", "7"});
  const auto b = cli({"synthesize", "--task", "spatial_composition", "--pools", pools, "--count", "6", "--seed", "7"});
  REQUIRE(a.code == 0);
  CHECK(a.out == b.out);

  REQUIRE(cli({"synthesize", "--task", "object_composition", "--pools", pools, "--count", "10", "--seed", "1", "-o",
               (dir / "obj.json").string()})
              .code == 0);
  const auto cases = mref::bench::read_manifest(dir / "obj.json");
  REQUIRE(cases.size() == 10);
  for (const auto& c : cases) CHECK((c.reference_images.size() == 2 || c.reference_images.size() == 3));

  auto thin = read_json(kData / "pools" / "example_pools.json");
  thin.erase("scenes");
  std::ofstream(dir / "thin.json") << thin.dump();
  const auto missing = cli({"synthesize", "--task", "object_composition", "--pools", (dir / "thin.json").string()});
  CHECK(missing.code != 0);
  CHECK(missing.err.find("scenes") != std::string::npos);
  CHECK(cli({"synthesize", "--task", "painting", "--pools", pools}).code == 1);

  const auto gen = cli({"generate-checkpoints", (dir / "obj.json").string(), "-o", (dir / "obj_cp.json").string(),
                        "--stub", "--text-only"});
  REQUIRE(gen.code == 0);
  CHECK(gen.out.find("generated checklists for 10 of 10 cases") != std::string::npos);
  CHECK(cli({"validate", (dir / "obj_cp.json").string()}).code == 0);
  for (const auto& c : mref::bench::load_manifest(dir / "obj_cp.json")) CHECK_FALSE(c.checkpoints.empty());

  // Reference files of synthesized skeletons do not exist yet.
  CHECK(cli({"generate-checkpoints", (dir / "obj.json").string(), "-o", (dir / "x.json").string(), "--stub"}).code ==
        2);
}

TEST_CASE("report and compare") {
  const std::string rows = (kFixtures / "published_rows.json").string();
  const auto md = cli({"report", rows, "--model", "GPT-Image"});
  REQUIRE(md.code == 0);
  CHECK(md.out.find("| GPT-Image | 96.45 | 94.41 | 93.39 | 87.69 | 90.15 | 85.99 | 91.35 |") != std::string::npos);
  CHECK(cli({"report", rows}).code == 2);
  CHECK(cli({"report", rows, "--model", "GPT-Image", "--format", "xml"}).code == 1);

  const auto cmp = cli({"compare", rows, rows, "--base-model", "BAGEL", "--other-model", "BAGEL + DAR", "--format",
                        "json"});
  REQUIRE(cmp.code == 0);
  const auto j = nlohmann::json::parse(cmp.out);
  CHECK(j["stated_avg_delta"].get<double>() == doctest::Approx(2.76).epsilon(1e-9));

  const auto dir = scratch("compare");
  auto partial = read_json(kFixtures / "published_rows.json")[0];
  partial["per_task"]["story_generation"] = nullptr;
  std::ofstream(dir / "partial.json") << partial.dump();
  CHECK(cli({"compare", rows, (dir / "partial.json").string(), "--base-model", "Nano-Banana"}).code == 1);
}
