#include <CLI11.hpp>

#include <fstream>
#include <ostream>

#include "mref/bench/manifest.hpp"
#include "mref/bench/synthesis.hpp"
#include "mref/cli/cli.hpp"
#include "mref/dar/tensor_io.hpp"

namespace mref::cli {

namespace {

const std::filesystem::path kDataDir = MREF_DEFAULT_DATA_DIR;

void write_text(const std::optional<std::filesystem::path>& path, const std::string& text, std::ostream& out) {
  if (!path) {
    out << text;
    return;
  }
  std::ofstream f(*path, std::ios::binary);
  f << text;
  if (!f) throw IoError("cannot write '" + path->string() + "'");
}

void add_judge_options(CLI::App* cmd, EvaluateOptions& o) {
  cmd->add_flag("--stub", o.stub, "Use the offline rule-based verifier");
  cmd->add_option("--stub-fixture", o.stub_fixture, "Offline verifier replaying authored replies from a JSON file");
  cmd->add_option("--judge-config", o.judge_config, "JSON file with judge settings (endpoint, model, retries)");
  cmd->add_option("--prompts", o.prompts_dir, "Directory with prompt texts replacing the built-in ones");
  cmd->add_option("--references", o.reference_root, "Root for relative reference image paths");
}

int cmd_validate(const std::filesystem::path& manifest, std::ostream& out, std::ostream& err) {
  const auto cases = bench::read_manifest(manifest);
  const auto violations = bench::validate_cases(cases);
  if (!violations.empty()) {
    for (const auto& v : violations) err << v.to_string() << "\n";
    err << violations.size() << " violation(s) in " << manifest.string() << "\n";
    return kExitDataViolation;
  }
  const auto stats = bench::dataset_statistics(cases);
  std::size_t pending = 0;
  for (const auto& c : cases) pending += c.checkpoints.empty();
  out << "ok: " << cases.size() << " cases, " << stats.total.images << " reference images";
  if (pending) out << ", " << pending << " without checkpoints";
  out << "\n| Task | Cases | 2 refs | 3 refs | Other | Images |\n|---|---:|---:|---:|---:|---:|\n";
  for (const auto& [task, n] : stats.per_task) {
    if (!n.cases) continue;
    out << "| " << bench::label(task) << " | " << n.cases << " | " << n.two_ref << " | " << n.three_ref << " | "
        << n.other_ref << " | " << n.images << " |\n";
  }
  return kExitOk;
}

}  // namespace

int exit_code_for(const std::exception& e) noexcept {
  if (dynamic_cast<const JudgeFailure*>(&e) || dynamic_cast<const TransportError*>(&e) ||
      dynamic_cast<const ParseError*>(&e) || dynamic_cast<const GenerationError*>(&e))
    return kExitJudge;
  if (dynamic_cast<const SchemaError*>(&e) || dynamic_cast<const FormatError*>(&e) ||
      dynamic_cast<const CoverageError*>(&e) || dynamic_cast<const DomainError*>(&e) ||
      dynamic_cast<const ShapeError*>(&e))
    return kExitDataViolation;
  return kExitUsage;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Multi-reference image generation benchmark: manifests, judge-based scoring, DAR demo"};
  app.name(args.empty() ? "mref" : std::filesystem::path(args[0]).filename().string());
  app.require_subcommand(1);

  std::filesystem::path manifest;
  auto* validate = app.add_subcommand("validate", "Check a case manifest against the structural rules");
  validate->add_option("manifest", manifest, "Manifest JSON")->required();

  std::string task;
  std::filesystem::path pools;
  std::filesystem::path templates = kDataDir / "templates.json";
  std::size_t count = 10;
  std::uint64_t seed = 0;
  std::optional<std::filesystem::path> output;
  auto* synth = app.add_subcommand("synthesize", "Fill prompt templates from element pools into case skeletons");
  synth->add_option("--task", task, "Task name, e.g. object_composition")->required();
  synth->add_option("--pools", pools, "Element pools JSON")->required();
  synth->add_option("--count", count, "Number of cases")->capture_default_str();
  synth->add_option("--seed", seed, "Random seed")->capture_default_str();
  synth->add_option("--templates", templates, "Template library JSON")->capture_default_str();
  synth->add_option("-o,--output", output, "Output manifest (default: standard output)");

  EvaluateOptions gen_opts;
  std::filesystem::path gen_out;
  bool regenerate = false, text_only = false;
  auto* gen = app.add_subcommand("generate-checkpoints", "Ask the judge for checklists of cases that have none");
  gen->add_option("manifest", gen_opts.manifest, "Manifest JSON")->required();
  gen->add_option("-o,--output", gen_out, "Output manifest")->required();
  gen->add_flag("--all", regenerate, "Regenerate checklists of every case");
  gen->add_flag("--text-only", text_only, "Do not attach reference images");
  add_judge_options(gen, gen_opts);

  EvaluateOptions eval_opts;
  auto* eval = app.add_subcommand("evaluate", "Score generated images against a manifest");
  eval->add_option("manifest", eval_opts.manifest, "Manifest JSON")->required();
  eval->add_option("images", eval_opts.images_dir, "Directory of <case_id>.<ext> generated images")->required();
  eval->add_option("-o,--output", eval_opts.output_dir, "Report directory")->required();
  eval->add_option("--runs", eval_opts.runs, "Repeat the evaluation and report the stability")->capture_default_str();
  eval->add_option("--cache-dir", eval_opts.cache_dir, "Persist verdicts here and reuse them");
  eval->add_flag("--skip-missing", eval_opts.skip_missing, "Skip cases without a generated image");
  eval->add_option("--model", eval_opts.model_name, "Model name for the report")->capture_default_str();
  add_judge_options(eval, eval_opts);

  std::filesystem::path fixture_dir;
  dar::RebalanceConfig dar_cfg;
  bool per_segment = false;
  std::optional<std::filesystem::path> stats_out;
  auto* demo = app.add_subcommand("dar-demo", "Attention shares before and after rebalancing on tensor files");
  demo->add_option("fixture", fixture_dir, "Directory with queries.dart, keys.dart, segments.json")->required();
  demo->add_option("--gamma", dar_cfg.gamma, "Modulation factor")->capture_default_str();
  demo->add_option("--m", dar_cfg.m, "Sampled queries")->capture_default_str();
  demo->add_option("--tau-high", dar_cfg.tau_high, "Amplification threshold")->capture_default_str();
  demo->add_option("--tau-low", dar_cfg.tau_low, "Attenuation threshold")->capture_default_str();
  demo->add_flag("--per-segment", per_segment, "Normalize each reference segment separately");
  demo->add_option("--stats", stats_out, "Write the attention statistics JSON here (default: standard output)");

  std::filesystem::path fixture_out;
  std::uint64_t fixture_seed = 1;
  auto* make_fixture = app.add_subcommand("dar-fixture", "Write a synthetic tensor fixture for dar-demo");
  make_fixture->add_option("dir", fixture_out, "Output directory")->required();
  make_fixture->add_option("--seed", fixture_seed, "Random seed")->capture_default_str();

  std::filesystem::path report_file;
  std::string model, format = "markdown";
  auto* rep = app.add_subcommand("report", "Render a report JSON file");
  rep->add_option("file", report_file, "Report JSON (one report or an array)")->required();
  rep->add_option("--model", model, "Model to render when the file holds several");
  rep->add_option("--format", format, "markdown, json or csv")->capture_default_str();

  std::filesystem::path base_file, other_file;
  std::string base_model, other_model, cmp_format = "markdown";
  auto* cmp = app.add_subcommand("compare", "Per-task and average deltas between two reports");
  cmp->add_option("base", base_file, "Baseline report JSON")->required();
  cmp->add_option("other", other_file, "Report compared against the baseline")->required();
  cmp->add_option("--base-model", base_model, "Baseline model when the file holds several");
  cmp->add_option("--other-model", other_model, "Other model when the file holds several");
  cmp->add_option("--format", cmp_format, "markdown or json")->capture_default_str();

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  if (argv.empty()) argv.push_back("mref");
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  auto pick = [](const std::vector<report::ScoreReport>& rs, const std::string& name) -> const report::ScoreReport& {
    if (!name.empty()) return report::find_report(rs, name);
    if (rs.size() != 1) throw ConfigError("the file holds " + std::to_string(rs.size()) + " reports; name one");
    return rs.front();
  };

  try {
    if (validate->parsed()) return cmd_validate(manifest, out, err);

    if (synth->parsed()) {
      const auto t = bench::parse_task(task);
      const auto cases = bench::synthesize_cases(t, bench::ElementPools::load(pools),
                                                 bench::TemplateLibrary::load(templates), count, seed);
      write_text(output, bench::dump_manifest(cases), out);
      return kExitOk;
    }

    if (gen->parsed()) {
      auto cases = bench::read_manifest(gen_opts.manifest);
      const auto client = make_judge_client(gen_opts);
      const auto root = gen_opts.reference_root.value_or(gen_opts.manifest.parent_path());
      std::size_t generated = 0;
      for (auto& c : cases) {
        if (!c.checkpoints.empty() && !regenerate) continue;
        std::vector<std::string> urls;
        if (!text_only)
          for (const auto& h : c.reference_images) urls.push_back(judge::image_url(h, root));
        c.checkpoints.clear();
        c.checkpoints = client->generate_checkpoints(c, urls);
        ++generated;
      }
      write_text(gen_out, bench::dump_manifest(cases), out);
      out << "generated checklists for " << generated << " of " << cases.size() << " cases\n";
      return kExitOk;
    }

    if (eval->parsed()) {
      const auto result = evaluate(eval_opts, err);
      out << report::markdown_table_header() << report::markdown_row(result.report);
      if (result.stability) {
        out << "stability over " << result.stability->run_scores.size()
            << " runs: max_discrepancy = " << report::format_exact(result.stability->max_discrepancy) << "\n";
      }
      for (const auto& p : result.written) out << "wrote " << p.string() << "\n";
      return kExitOk;
    }

    if (demo->parsed()) {
      dar_cfg.joint_normalization = !per_segment;
      dar_cfg.validate();
      const auto r = run_dar_demo(fixture_dir, dar_cfg);
      out << dar_demo_table(r);
      const std::string json = dar::stats_to_json(r.stats).dump(2) + "\n";
      if (stats_out) {
        write_text(stats_out, json, out);
        out << "wrote " << stats_out->string() << "\n";
      } else {
        out << json;
      }
      return kExitOk;
    }

    if (make_fixture->parsed()) {
      write_dar_fixture(fixture_out, fixture_seed);
      out << "wrote " << fixture_out.string() << "\n";
      return kExitOk;
    }

    if (rep->parsed()) {
      const auto reports = report::load_reports(report_file);
      out << report::emit_report(pick(reports, model), report::parse_format(format));
      return kExitOk;
    }

    if (cmp->parsed()) {
      const auto base = report::load_reports(base_file);
      const auto other = report::load_reports(other_file);
      const auto d = report::compare_reports(pick(base, base_model), pick(other, other_model));
      if (cmp_format == "json") out << report::comparison_to_json(d).dump(2) << "\n";
      else if (cmp_format == "markdown" || cmp_format == "md") out << report::emit_comparison(d);
      else throw FormatError("unknown comparison format '" + cmp_format + "'");
      return kExitOk;
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return exit_code_for(e);
  }
  return kExitUsage;
}

}  // namespace mref::cli
