#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mref/bench/types.hpp"

namespace mref::scoring {

using bench::EvalDimension;
using bench::TaskKind;

/// Cap applied to a dimension whose hard checkpoint failed.
inline constexpr double kHardFailureCap = 0.4;
inline constexpr double kStoryCheckpointWeight = 0.4;
inline constexpr double kStoryAnswerWeight = 0.6;
/// |stated - recomputed| at or above this flags a model average.
inline constexpr double kAvgDiscrepancyThreshold = 0.05;

struct Verdict {
  std::string checkpoint_id;
  bool passed = false;
  std::string justification;

  bool operator==(const Verdict&) const = default;
};

struct DimensionScore {
  EvalDimension dimension = EvalDimension::InstructionFollowing;
  double raw = 0.0;
  double capped = 0.0;
  bool hard_failed = false;
  std::size_t passed = 0;
  std::size_t total = 0;

  bool operator==(const DimensionScore&) const = default;
};

struct StoryComponents {
  double checkpoint_part = 0.0;
  double answer_part = 0.0;

  bool operator==(const StoryComponents&) const = default;
};

struct CaseScore {
  std::string case_id;
  TaskKind task = TaskKind::ObjectComposition;
  std::vector<DimensionScore> per_dimension;
  double final = 0.0;
  std::optional<StoryComponents> components;

  bool operator==(const CaseScore&) const = default;
};

/// Scores one dimension. `verdicts` must hold exactly one verdict per
/// checkpoint and nothing else (CoverageError otherwise). `checkpoints` must
/// be non-empty and belong to one dimension. hard_failed is set when a hard
/// checkpoint failed.
DimensionScore dimension_score(std::span<const Verdict> verdicts,
                               std::span<const bench::Checkpoint> checkpoints);

/// 100 x mean of capped dimension scores over the case's active dimensions.
/// The mean is evaluated as an exact fraction and rounded once, so the result
/// does not depend on dimension order. Story cases need `answer_set_score`
/// (on [0,100]) and get the hybrid final.
CaseScore case_score(const bench::EvalCase& c, std::span<const Verdict> verdicts,
                     std::optional<double> answer_set_score = std::nullopt);

/// 0.4 * checkpoint_score + 0.6 * answer_set_score; inputs on [0,100].
double story_score(double checkpoint_score, double answer_set_score);

/// Mean of case finals; throws DomainError on an empty list.
double task_aggregate(std::span<const CaseScore> scores);

/// Per-task aggregate for every task that has at least one case.
std::map<TaskKind, double> task_scores(std::span<const CaseScore> scores);

struct ReportMetadata {
  std::string judge_model;
  std::string config_digest;
  std::string timestamp;

  bool operator==(const ReportMetadata&) const = default;
};

/// nullopt marks a task as absent from the evaluation.
using TaskColumns = std::map<TaskKind, std::optional<double>>;

struct ScoreReport {
  std::string model_name;
  TaskColumns per_task;
  /// Average as printed by a third party, when the row was transcribed.
  std::optional<double> stated_avg;
  std::vector<CaseScore> per_case;
  ReportMetadata metadata;

  /// Unweighted mean of present task columns.
  double avg() const;
  std::vector<TaskKind> present_tasks() const;
  std::vector<TaskKind> absent_tasks() const;
  /// stated_avg - avg(), when a stated average exists.
  std::optional<double> avg_discrepancy() const;
  /// True when |avg_discrepancy| >= kAvgDiscrepancyThreshold.
  bool avg_flagged() const;
  /// Mean over all per_case finals; nullopt without case detail.
  std::optional<double> case_weighted_avg() const;

  bool operator==(const ScoreReport&) const = default;
};

/// Builds a report from task columns. All six tasks must appear in
/// `per_task`, either with a score or as nullopt; at least one must be present.
ScoreReport model_report(std::string model_name, TaskColumns per_task,
                         std::optional<double> stated_avg = std::nullopt);

/// Report built from case detail: per-task columns are task_aggregate over
/// the cases of each task, tasks without cases are absent.
ScoreReport model_report(std::string model_name, std::vector<CaseScore> per_case);

/// Average of task columns weighted by case counts.
double case_weighted_average(const TaskColumns& per_task,
                             const std::map<TaskKind, std::size_t>& case_counts);

}  // namespace mref::scoring
