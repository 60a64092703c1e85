#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "mref/scoring/scoring.hpp"

namespace mref::report {

using scoring::ScoreReport;
using scoring::TaskKind;

enum class Format { Markdown, Json, Csv };

Format parse_format(std::string_view text);  // throws FormatError
std::string_view extension(Format f) noexcept;

/// Renders a report. Pure: the input is never modified.
///  markdown: a table in the published column layout, scores to 2 dp,
///            absent tasks as "-", followed by per-case detail when present.
///  json:     lossless, see report_from_json.
///  csv:      one row per case plus a trailing summary row, lossless for
///            per-case detail, see cases_from_csv.
std::string emit_report(const ScoreReport& report, Format format);

/// Header and separator lines of the markdown score table.
std::string markdown_table_header();
std::string markdown_row(const ScoreReport& report);

nlohmann::json report_to_json(const ScoreReport& report);
ScoreReport report_from_json(const nlohmann::json& j);  // throws SchemaError

/// A report file holds a single report object or an array of them.
std::vector<ScoreReport> load_reports(const std::filesystem::path& path);
/// Picks the report named `model` (throws ConfigError when absent).
const ScoreReport& find_report(const std::vector<ScoreReport>& reports, const std::string& model);

std::vector<scoring::CaseScore> cases_from_csv(const std::string& csv);  // throws FormatError

/// Writes <stem>.md, <stem>.json and <stem>.csv into dir.
void write_report_files(const ScoreReport& report, const std::filesystem::path& dir, const std::string& stem);

struct StabilityResult {
  std::vector<double> run_scores;
  double max_discrepancy = 0.0;

  bool operator==(const StabilityResult&) const = default;
};

/// Runs `evaluate` `runs` times and collects the averages it returns.
/// Throws DomainError when runs < 2.
StabilityResult stability_check(const std::function<double()>& evaluate, std::size_t runs);
StabilityResult stability_from_scores(std::vector<double> run_scores);
nlohmann::json stability_to_json(const StabilityResult& s);

struct ReportDelta {
  std::string base_model;
  std::string other_model;
  /// other - base, for every task present in both.
  std::map<TaskKind, double> per_task;
  double avg_delta = 0.0;
  /// other.stated_avg - base.stated_avg when both rows carry one.
  std::optional<double> stated_avg_delta;

  /// The stated delta when available, else the recomputed one.
  double headline_avg_delta() const { return stated_avg_delta.value_or(avg_delta); }
};

/// Signed deltas `other - base`. Throws CoverageError unless both reports
/// have the same present tasks.
ReportDelta compare_reports(const ScoreReport& base, const ScoreReport& other);
std::string emit_comparison(const ReportDelta& d);
nlohmann::json comparison_to_json(const ReportDelta& d);

/// Shortest text that parses back to the same double.
std::string format_exact(double v);
/// Fixed two decimals, as in the published tables.
std::string format_2dp(double v);

}  // namespace mref::report
