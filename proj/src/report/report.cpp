#include "mref/report/report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "mref/errors.hpp"

namespace mref::report {

using scoring::CaseScore;
using scoring::DimensionScore;
using bench::EvalDimension;

namespace {

std::string escape_cell(const std::string& s) {
  std::string out;
  for (char ch : s) {
    if (ch == '|') out += '\\';
    out += ch == '\n' ? ' ' : ch;
  }
  return out;
}

std::string signed_2dp(double v) { return (v >= 0 ? "+" : "") + format_2dp(v); }

std::string column(const ScoreReport& r, TaskKind t) {
  const auto it = r.per_task.find(t);
  return it != r.per_task.end() && it->second ? format_2dp(*it->second) : "-";
}

// --- json helpers -----------------------------------------------------------

const nlohmann::json& field(const nlohmann::json& j, const char* name, const std::string& where) {
  if (!j.is_object() || !j.contains(name)) throw SchemaError("", where + ": missing field '" + name + "'");
  return j.at(name);
}

template <class T>
T typed(const nlohmann::json& j, const char* name, const std::string& where) {
  try {
    return field(j, name, where).get<T>();
  } catch (const nlohmann::json::type_error&) {
    throw SchemaError("", where + ": field '" + std::string(name) + "' has the wrong type");
  }
}

nlohmann::json case_to_json(const CaseScore& c) {
  nlohmann::json dims = nlohmann::json::array();
  for (const DimensionScore& d : c.per_dimension) {
    dims.push_back({{"dimension", std::string(bench::to_string(d.dimension))},
                    {"raw", d.raw},
                    {"capped", d.capped},
                    {"hard_failed", d.hard_failed},
                    {"passed", d.passed},
                    {"total", d.total}});
  }
  nlohmann::json j = {{"case_id", c.case_id},
                      {"task", std::string(bench::to_string(c.task))},
                      {"final", c.final},
                      {"per_dimension", dims}};
  if (c.components) {
    j["components"] = {{"checkpoint_part", c.components->checkpoint_part},
                       {"answer_part", c.components->answer_part}};
  }
  return j;
}

CaseScore case_from_json(const nlohmann::json& j) {
  CaseScore c;
  c.case_id = typed<std::string>(j, "case_id", "per_case entry");
  const std::string where = "case '" + c.case_id + "'";
  try {
    c.task = bench::parse_task(typed<std::string>(j, "task", where));
    for (const auto& d : field(j, "per_dimension", where)) {
      DimensionScore s;
      s.dimension = bench::parse_dimension(typed<std::string>(d, "dimension", where));
      s.raw = typed<double>(d, "raw", where);
      s.capped = typed<double>(d, "capped", where);
      s.hard_failed = typed<bool>(d, "hard_failed", where);
      s.passed = typed<std::size_t>(d, "passed", where);
      s.total = typed<std::size_t>(d, "total", where);
      c.per_dimension.push_back(s);
    }
  } catch (const FormatError& e) {
    throw SchemaError("", where + ": " + e.what());
  }
  c.final = typed<double>(j, "final", where);
  if (j.contains("components") && !j["components"].is_null()) {
    const auto& k = j["components"];
    c.components = scoring::StoryComponents{typed<double>(k, "checkpoint_part", where),
                                            typed<double>(k, "answer_part", where)};
  }
  return c;
}

// --- csv helpers ------------------------------------------------------------

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string cell;
  bool quoted = false, any = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char ch = text[i];
    any = true;
    if (quoted) {
      if (ch == '"' && i + 1 < text.size() && text[i + 1] == '"') {
        cell += '"';
        ++i;
      } else if (ch == '"') {
        quoted = false;
      } else {
        cell += ch;
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      row.push_back(std::move(cell));
      cell.clear();
    } else if (ch == '\n') {
      row.push_back(std::move(cell));
      cell.clear();
      rows.push_back(std::move(row));
      row.clear();
      any = false;
    } else if (ch != '\r') {
      cell += ch;
    }
  }
  if (quoted) throw FormatError("csv: unterminated quoted field");
  if (any) {
    row.push_back(std::move(cell));
    rows.push_back(std::move(row));
  }
  return rows;
}

double parse_double(const std::string& s, const std::string& where) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) throw FormatError("csv: bad number '" + s + "' in " + where);
  return v;
}

std::size_t parse_count(const std::string& s, const std::string& where) {
  std::size_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) throw FormatError("csv: bad count '" + s + "' in " + where);
  return v;
}

constexpr const char* kDimFields[] = {"passed", "total", "raw", "capped", "hard_failed"};

std::vector<std::string> csv_header() {
  std::vector<std::string> h = {"row_type", "case_id", "task", "final", "dimensions", "story_checkpoint_part",
                                "story_answer_part"};
  for (EvalDimension d : bench::kAllDimensions)
    for (const char* f : kDimFields) h.push_back(std::string(bench::to_string(d)) + "_" + f);
  return h;
}

std::string csv_line(const std::vector<std::string>& cells) {
  std::string out;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) out += ',';
    out += csv_field(cells[i]);
  }
  return out + "\n";
}

std::string emit_csv(const ScoreReport& r) {
  const auto header = csv_header();
  std::string out = csv_line(header);
  for (const CaseScore& c : r.per_case) {
    std::vector<std::string> cells(header.size());
    cells[0] = "case";
    cells[1] = c.case_id;
    cells[2] = std::string(bench::to_string(c.task));
    cells[3] = format_exact(c.final);
    for (const auto& d : c.per_dimension) cells[4] += bench::to_string(d.dimension);
    if (c.components) {
      cells[5] = format_exact(c.components->checkpoint_part);
      cells[6] = format_exact(c.components->answer_part);
    }
    for (const auto& d : c.per_dimension) {
      const std::size_t base = 7 + static_cast<std::size_t>(d.dimension) * 5;
      cells[base] = std::to_string(d.passed);
      cells[base + 1] = std::to_string(d.total);
      cells[base + 2] = format_exact(d.raw);
      cells[base + 3] = format_exact(d.capped);
      cells[base + 4] = d.hard_failed ? "1" : "0";
    }
    out += csv_line(cells);
  }
  std::vector<std::string> summary(header.size());
  summary[0] = "summary";
  summary[1] = r.model_name;
  summary[3] = format_exact(r.avg());
  out += csv_line(summary);
  return out;
}

// --- markdown ---------------------------------------------------------------

std::string emit_markdown(const ScoreReport& r) {
  std::string out = "## " + escape_cell(r.model_name) + "\n\n" + markdown_table_header() + markdown_row(r);
  if (r.avg_flagged()) {
    out += "\n> Stated average " + format_2dp(*r.stated_avg) + " differs from the recomputed " +
           format_2dp(r.avg()) + " by " + signed_2dp(*r.avg_discrepancy()) + ".\n";
  }
  const auto absent = r.absent_tasks();
  if (!absent.empty()) {
    out += "\nAbsent tasks:";
    for (TaskKind t : absent) out += " " + std::string(bench::label(t));
    out += "\n";
  }
  if (const auto weighted = r.case_weighted_avg()) {
    out += "\nCase-weighted average: " + format_2dp(*weighted) + " over " + std::to_string(r.per_case.size()) +
           " cases.\n";
  }
  if (!r.metadata.judge_model.empty() || !r.metadata.config_digest.empty()) {
    out += "\nJudge: " + r.metadata.judge_model + ", config " + r.metadata.config_digest.substr(0, 12);
    if (!r.metadata.timestamp.empty()) out += ", " + r.metadata.timestamp;
    out += "\n";
  }
  if (r.per_case.empty()) return out;

  const bool story = std::any_of(r.per_case.begin(), r.per_case.end(), [](const CaseScore& c) {
    return c.components.has_value();
  });
  out += "\n### Per-case scores\n\n| Case | Task |";
  for (EvalDimension d : bench::kAllDimensions) out += " " + std::string(bench::to_string(d)) + " |";
  if (story) out += " Checkpoints | Answer set |";
  out += " Final |\n|---|---|";
  for (std::size_t i = 0; i < bench::kAllDimensions.size(); ++i) out += "---:|";
  if (story) out += "---:|---:|";
  out += "---:|\n";
  for (const CaseScore& c : r.per_case) {
    out += "| " + escape_cell(c.case_id) + " | " + std::string(bench::label(c.task)) + " |";
    for (EvalDimension d : bench::kAllDimensions) {
      const auto it = std::find_if(c.per_dimension.begin(), c.per_dimension.end(),
                                   [d](const DimensionScore& s) { return s.dimension == d; });
      if (it == c.per_dimension.end()) {
        out += " |";
        continue;
      }
      out += " " + std::to_string(it->passed) + "/" + std::to_string(it->total);
      if (it->hard_failed) out += " (hard fail)";
      out += " |";
    }
    if (story) {
      out += c.components ? " " + format_2dp(c.components->checkpoint_part) + " | " +
                                format_2dp(c.components->answer_part) + " |"
                          : " | |";
    }
    out += " " + format_2dp(c.final) + " |\n";
  }
  return out;
}

}  // namespace

std::string format_exact(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

std::string format_2dp(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  std::string s(buf);
  return s == "-0.00" ? "0.00" : s;
}

Format parse_format(std::string_view text) {
  if (text == "markdown" || text == "md") return Format::Markdown;
  if (text == "json") return Format::Json;
  if (text == "csv") return Format::Csv;
  throw FormatError("unknown report format '" + std::string(text) + "' (expected markdown, json or csv)");
}

std::string_view extension(Format f) noexcept {
  switch (f) {
    case Format::Markdown: return ".md";
    case Format::Json: return ".json";
    case Format::Csv: return ".csv";
  }
  return "";
}

std::string markdown_table_header() {
  std::string out = "| Model |";
  for (TaskKind t : bench::kAllTasks) out += " " + std::string(bench::label(t)) + " |";
  out += " Avg. Score |\n|---|";
  for (std::size_t i = 0; i <= bench::kAllTasks.size(); ++i) out += "---:|";
  return out + "\n";
}

std::string markdown_row(const ScoreReport& r) {
  std::string out = "| " + escape_cell(r.model_name) + " |";
  for (TaskKind t : bench::kAllTasks) out += " " + column(r, t) + " |";
  return out + " " + format_2dp(r.avg()) + " |\n";
}

nlohmann::json report_to_json(const ScoreReport& r) {
  nlohmann::json tasks = nlohmann::json::object();
  for (TaskKind t : bench::kAllTasks) {
    const auto it = r.per_task.find(t);
    tasks[std::string(bench::to_string(t))] =
        it != r.per_task.end() && it->second ? nlohmann::json(*it->second) : nlohmann::json(nullptr);
  }
  nlohmann::json cases = nlohmann::json::array();
  for (const auto& c : r.per_case) cases.push_back(case_to_json(c));
  nlohmann::json j = {{"model_name", r.model_name},
                      {"per_task", tasks},
                      {"avg", r.avg()},
                      {"per_case", cases},
                      {"metadata",
                       {{"judge_model", r.metadata.judge_model},
                        {"config_digest", r.metadata.config_digest},
                        {"timestamp", r.metadata.timestamp}}}};
  if (r.stated_avg) {
    j["stated_avg"] = *r.stated_avg;
    j["avg_flagged"] = r.avg_flagged();
  }
  if (const auto w = r.case_weighted_avg()) j["case_weighted_avg"] = *w;
  return j;
}

ScoreReport report_from_json(const nlohmann::json& j) {
  const auto name = typed<std::string>(j, "model_name", "report");
  const std::string where = "report '" + name + "'";
  scoring::TaskColumns columns;
  for (TaskKind t : bench::kAllTasks) columns[t] = std::nullopt;
  const auto& tasks = field(j, "per_task", where);
  if (!tasks.is_object()) throw SchemaError("", where + ": field 'per_task' has the wrong type");
  for (const auto& [key, value] : tasks.items()) {
    TaskKind t;
    try {
      t = bench::parse_task(key);
    } catch (const FormatError& e) {
      throw SchemaError("", where + ": " + e.what());
    }
    if (value.is_null()) continue;
    if (!value.is_number()) throw SchemaError("", where + ": score for '" + key + "' is not a number");
    columns[t] = value.get<double>();
  }
  std::optional<double> stated;
  if (j.contains("stated_avg") && !j["stated_avg"].is_null()) stated = typed<double>(j, "stated_avg", where);

  ScoreReport r = scoring::model_report(name, std::move(columns), stated);
  if (j.contains("per_case")) {
    for (const auto& c : j["per_case"]) r.per_case.push_back(case_from_json(c));
  }
  if (j.contains("metadata")) {
    const auto& m = j["metadata"];
    r.metadata.judge_model = m.value("judge_model", "");
    r.metadata.config_digest = m.value("config_digest", "");
    r.metadata.timestamp = m.value("timestamp", "");
  }
  return r;
}

std::vector<ScoreReport> load_reports(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read report file '" + path.string() + "'");
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  std::vector<ScoreReport> out;
  if (doc.is_array()) {
    for (const auto& r : doc) out.push_back(report_from_json(r));
  } else {
    out.push_back(report_from_json(doc));
  }
  return out;
}

const ScoreReport& find_report(const std::vector<ScoreReport>& reports, const std::string& model) {
  for (const auto& r : reports)
    if (r.model_name == model) return r;
  std::string names;
  for (const auto& r : reports) names += (names.empty() ? "" : ", ") + r.model_name;
  throw ConfigError("no report for model '" + model + "' (available: " + names + ")");
}

std::vector<CaseScore> cases_from_csv(const std::string& csv) {
  const auto rows = parse_csv(csv);
  if (rows.empty() || rows.front() != csv_header()) throw FormatError("csv: unexpected header");
  std::vector<CaseScore> out;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& row = rows[i];
    const std::string where = "row " + std::to_string(i + 1);
    if (row.size() != rows.front().size()) throw FormatError("csv: wrong field count in " + where);
    if (row[0] == "summary") continue;
    if (row[0] != "case") throw FormatError("csv: unknown row type '" + row[0] + "' in " + where);
    CaseScore c;
    c.case_id = row[1];
    c.task = bench::parse_task(row[2]);
    c.final = parse_double(row[3], where);
    if (!row[5].empty()) c.components = scoring::StoryComponents{parse_double(row[5], where), parse_double(row[6], where)};
    for (char letter : row[4]) {
      DimensionScore d;
      d.dimension = bench::parse_dimension(std::string(1, letter));
      const std::size_t base = 7 + static_cast<std::size_t>(d.dimension) * 5;
      d.passed = parse_count(row[base], where);
      d.total = parse_count(row[base + 1], where);
      d.raw = parse_double(row[base + 2], where);
      d.capped = parse_double(row[base + 3], where);
      d.hard_failed = row[base + 4] == "1";
      c.per_dimension.push_back(d);
    }
    out.push_back(std::move(c));
  }
  return out;
}

std::string emit_report(const ScoreReport& report, Format format) {
  switch (format) {
    case Format::Markdown: return emit_markdown(report);
    case Format::Json: return report_to_json(report).dump(2) + "\n";
    case Format::Csv: return emit_csv(report);
  }
  throw FormatError("unknown report format");
}

void write_report_files(const ScoreReport& report, const std::filesystem::path& dir, const std::string& stem) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create '" + dir.string() + "': " + ec.message());
  for (Format f : {Format::Markdown, Format::Json, Format::Csv}) {
    const auto path = dir / (stem + std::string(extension(f)));
    std::ofstream out(path, std::ios::binary);
    out << emit_report(report, f);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
  }
}

StabilityResult stability_from_scores(std::vector<double> run_scores) {
  if (run_scores.empty()) throw DomainError("stability needs at least one run score");
  const auto [lo, hi] = std::minmax_element(run_scores.begin(), run_scores.end());
  StabilityResult s;
  s.max_discrepancy = *hi - *lo;
  s.run_scores = std::move(run_scores);
  return s;
}

StabilityResult stability_check(const std::function<double()>& evaluate, std::size_t runs) {
  if (runs < 2) throw DomainError("stability check needs at least 2 runs, got " + std::to_string(runs));
  std::vector<double> scores;
  scores.reserve(runs);
  for (std::size_t i = 0; i < runs; ++i) scores.push_back(evaluate());
  return stability_from_scores(std::move(scores));
}

nlohmann::json stability_to_json(const StabilityResult& s) {
  return {{"runs", s.run_scores.size()}, {"run_scores", s.run_scores}, {"max_discrepancy", s.max_discrepancy}};
}

ReportDelta compare_reports(const ScoreReport& base, const ScoreReport& other) {
  const auto a = base.present_tasks();
  const auto b = other.present_tasks();
  if (a != b) {
    std::vector<std::string> missing, extra;
    for (TaskKind t : a)
      if (std::find(b.begin(), b.end(), t) == b.end()) missing.emplace_back(bench::to_string(t));
    for (TaskKind t : b)
      if (std::find(a.begin(), a.end(), t) == a.end()) extra.emplace_back(bench::to_string(t));
    std::string msg = "reports '" + base.model_name + "' and '" + other.model_name + "' cover different tasks";
    for (const auto& m : missing) msg += "; only in '" + base.model_name + "': " + m;
    for (const auto& e : extra) msg += "; only in '" + other.model_name + "': " + e;
    throw CoverageError(msg, missing, extra);
  }
  ReportDelta d;
  d.base_model = base.model_name;
  d.other_model = other.model_name;
  for (TaskKind t : a) d.per_task[t] = *other.per_task.at(t) - *base.per_task.at(t);
  d.avg_delta = other.avg() - base.avg();
  if (base.stated_avg && other.stated_avg) d.stated_avg_delta = *other.stated_avg - *base.stated_avg;
  return d;
}

std::string emit_comparison(const ReportDelta& d) {
  std::string out = "| Delta |";
  for (const auto& [t, v] : d.per_task) out += " " + std::string(bench::label(t)) + " |";
  out += " Avg. Score |\n|---|";
  for (std::size_t i = 0; i <= d.per_task.size(); ++i) out += "---:|";
  out += "\n| " + escape_cell(d.other_model) + " vs " + escape_cell(d.base_model) + " |";
  for (const auto& [t, v] : d.per_task) out += " " + signed_2dp(v) + " |";
  out += " " + signed_2dp(d.headline_avg_delta()) + " |\n\n";
  if (d.stated_avg_delta) out += "Stated average delta: " + signed_2dp(*d.stated_avg_delta) + "\n";
  out += "Recomputed average delta: " + signed_2dp(d.avg_delta) + "\n";
  return out;
}

nlohmann::json comparison_to_json(const ReportDelta& d) {
  nlohmann::json tasks = nlohmann::json::object();
  for (const auto& [t, v] : d.per_task) tasks[std::string(bench::to_string(t))] = v;
  nlohmann::json j = {{"base_model", d.base_model},
                      {"other_model", d.other_model},
                      {"per_task", tasks},
                      {"avg_delta", d.avg_delta},
                      {"headline_avg_delta", d.headline_avg_delta()}};
  j["stated_avg_delta"] = d.stated_avg_delta ? nlohmann::json(*d.stated_avg_delta) : nlohmann::json(nullptr);
  return j;
}

}  // namespace mref::report
