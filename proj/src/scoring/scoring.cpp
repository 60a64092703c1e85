#include "mref/scoring/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <unordered_map>

#include "mref/errors.hpp"

namespace mref::scoring {

namespace {

// Non-negative fraction num/den, kept reduced.
struct Fraction {
  std::uint64_t num = 0;
  std::uint64_t den = 1;

  void add(std::uint64_t n, std::uint64_t d) {
    const std::uint64_t l = std::lcm(den, d);
    num = num * (l / den) + n * (l / d);
    den = l;
    const std::uint64_t g = std::gcd(num, den);
    if (g > 1) {
      num /= g;
      den /= g;
    }
  }
};

std::string join(const std::vector<std::string>& ids) {
  std::string out;
  for (const auto& id : ids) {
    if (!out.empty()) out += ", ";
    out += id;
  }
  return out;
}

[[noreturn]] void coverage_failure(const std::string& scope, std::vector<std::string> missing,
                                   std::vector<std::string> extra) {
  std::string msg = "verdicts do not cover " + scope;
  if (!missing.empty()) msg += "; missing: " + join(missing);
  if (!extra.empty()) msg += "; unexpected: " + join(extra);
  throw CoverageError(msg, std::move(missing), std::move(extra));
}

void check_range(double v, const char* what) {
  if (!(v >= 0.0 && v <= 100.0)) {
    throw DomainError(std::string(what) + " must lie in [0,100], got " + std::to_string(v));
  }
}

// Capped score of one dimension as an exact fraction.
std::pair<std::uint64_t, std::uint64_t> capped_fraction(const DimensionScore& d) {
  // 0.4 = 2/5; the cap binds when passed/total > 2/5.
  if (d.hard_failed && 5 * d.passed > 2 * d.total) return {2, 5};
  return {d.passed, d.total};
}

}  // namespace

DimensionScore dimension_score(std::span<const Verdict> verdicts,
                               std::span<const bench::Checkpoint> checkpoints) {
  if (checkpoints.empty()) throw DomainError("cannot score a dimension without checkpoints");
  DimensionScore out;
  out.dimension = checkpoints.front().dimension;

  std::unordered_map<std::string_view, const Verdict*> by_id;
  std::vector<std::string> extra;
  for (const Verdict& v : verdicts) {
    if (!by_id.emplace(v.checkpoint_id, &v).second) extra.push_back(v.checkpoint_id);
  }
  std::vector<std::string> missing;
  for (const bench::Checkpoint& cp : checkpoints) {
    if (cp.dimension != out.dimension) {
      throw DomainError("checkpoint " + cp.id + " belongs to dimension " +
                        std::string(bench::to_string(cp.dimension)) + ", not " +
                        std::string(bench::to_string(out.dimension)));
    }
    const auto it = by_id.find(cp.id);
    if (it == by_id.end()) {
      missing.push_back(cp.id);
      continue;
    }
    const bool passed = it->second->passed;
    by_id.erase(it);
    ++out.total;
    if (passed) ++out.passed;
    if (cp.hard && !passed) out.hard_failed = true;
  }
  for (const Verdict& v : verdicts) {
    if (by_id.erase(v.checkpoint_id) > 0) extra.push_back(v.checkpoint_id);
  }
  if (!missing.empty() || !extra.empty()) {
    coverage_failure("dimension " + std::string(bench::to_string(out.dimension)), std::move(missing),
                     std::move(extra));
  }

  out.raw = static_cast<double>(out.passed) / static_cast<double>(out.total);
  out.capped = out.hard_failed ? std::min(out.raw, kHardFailureCap) : out.raw;
  return out;
}

CaseScore case_score(const bench::EvalCase& c, std::span<const Verdict> verdicts,
                     std::optional<double> answer_set_score) {
  CaseScore out;
  out.case_id = c.case_id;
  out.task = c.task;

  const auto dims = c.effective_dimensions();
  if (dims.empty()) throw SchemaError(c.case_id, "no active dimensions");

  // Attach each verdict to its checkpoint; unknown ids and repeats are extra.
  std::unordered_map<std::string_view, std::size_t> index;
  index.reserve(c.checkpoints.size());
  for (std::size_t i = 0; i < c.checkpoints.size(); ++i) index.emplace(c.checkpoints[i].id, i);
  std::vector<const Verdict*> slot(c.checkpoints.size(), nullptr);
  std::vector<std::string> missing;
  std::vector<std::string> extra;
  for (const Verdict& v : verdicts) {
    const auto it = index.find(v.checkpoint_id);
    if (it == index.end() || slot[it->second] != nullptr) {
      extra.push_back(v.checkpoint_id);
    } else {
      slot[it->second] = &v;
    }
  }

  Fraction sum;
  std::vector<bool> scored(c.checkpoints.size(), false);
  for (bench::EvalDimension dim : dims) {
    DimensionScore d;
    d.dimension = dim;
    bool complete = true;
    for (std::size_t i = 0; i < c.checkpoints.size(); ++i) {
      const bench::Checkpoint& cp = c.checkpoints[i];
      if (cp.dimension != dim) continue;
      scored[i] = true;
      ++d.total;
      if (slot[i] == nullptr) {
        missing.push_back(cp.id);
        complete = false;
        continue;
      }
      if (slot[i]->passed) ++d.passed;
      if (cp.hard && !slot[i]->passed) d.hard_failed = true;
    }
    if (d.total == 0) {
      throw SchemaError(c.case_id, "dimension " + std::string(bench::to_string(dim)) +
                                       " has no checkpoints");
    }
    if (!complete) continue;
    d.raw = static_cast<double>(d.passed) / static_cast<double>(d.total);
    d.capped = d.hard_failed ? std::min(d.raw, kHardFailureCap) : d.raw;
    const auto [n, den] = capped_fraction(d);
    sum.add(n, den);
    out.per_dimension.push_back(d);
  }
  // Verdicts for checkpoints on inactive dimensions.
  for (std::size_t i = 0; i < c.checkpoints.size(); ++i) {
    if (!scored[i] && slot[i] != nullptr) extra.push_back(c.checkpoints[i].id);
  }
  if (!missing.empty() || !extra.empty()) {
    coverage_failure("case " + c.case_id, std::move(missing), std::move(extra));
  }

  const double checkpoint_score =
      static_cast<double>(100 * sum.num) / static_cast<double>(sum.den * dims.size());

  if (bench::uses_hybrid_scoring(c.task)) {
    if (!answer_set_score) {
      throw SchemaError(c.case_id, "story case needs an answer-set score");
    }
    out.components = StoryComponents{checkpoint_score, *answer_set_score};
    out.final = story_score(checkpoint_score, *answer_set_score);
  } else {
    out.final = checkpoint_score;
  }
  return out;
}

double story_score(double checkpoint_score, double answer_set_score) {
  check_range(checkpoint_score, "checkpoint score");
  check_range(answer_set_score, "answer-set score");
  // Weights as integers over 10: one rounding in the sum, one in the division.
  const double v = (4.0 * checkpoint_score + 6.0 * answer_set_score) / 10.0;
  return std::clamp(v, 0.0, 100.0);
}

double task_aggregate(std::span<const CaseScore> scores) {
  if (scores.empty()) throw DomainError("task aggregate needs at least one case");
  double sum = 0.0;
  for (const CaseScore& s : scores) sum += s.final;
  return sum / static_cast<double>(scores.size());
}

std::map<TaskKind, double> task_scores(std::span<const CaseScore> scores) {
  std::map<TaskKind, std::vector<CaseScore>> by_task;
  for (const CaseScore& s : scores) by_task[s.task].push_back(s);
  std::map<TaskKind, double> out;
  for (const auto& [task, cases] : by_task) out[task] = task_aggregate(cases);
  return out;
}

double ScoreReport::avg() const {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& [task, score] : per_task) {
    if (score) {
      sum += *score;
      ++n;
    }
  }
  if (n == 0) throw DomainError("report '" + model_name + "' has no task scores");
  return sum / static_cast<double>(n);
}

std::vector<TaskKind> ScoreReport::present_tasks() const {
  std::vector<TaskKind> out;
  for (TaskKind t : bench::kAllTasks) {
    const auto it = per_task.find(t);
    if (it != per_task.end() && it->second) out.push_back(t);
  }
  return out;
}

std::vector<TaskKind> ScoreReport::absent_tasks() const {
  std::vector<TaskKind> out;
  for (TaskKind t : bench::kAllTasks) {
    const auto it = per_task.find(t);
    if (it == per_task.end() || !it->second) out.push_back(t);
  }
  return out;
}

std::optional<double> ScoreReport::avg_discrepancy() const {
  if (!stated_avg) return std::nullopt;
  return *stated_avg - avg();
}

bool ScoreReport::avg_flagged() const {
  const auto d = avg_discrepancy();
  // Compare on a 1e-9 grid so a printed 0.05 gap is not lost to binary noise.
  return d && std::round(std::abs(*d) * 1e9) >= std::round(kAvgDiscrepancyThreshold * 1e9);
}

std::optional<double> ScoreReport::case_weighted_avg() const {
  if (per_case.empty()) return std::nullopt;
  double sum = 0.0;
  for (const CaseScore& s : per_case) sum += s.final;
  return sum / static_cast<double>(per_case.size());
}

ScoreReport model_report(std::string model_name, TaskColumns per_task,
                         std::optional<double> stated_avg) {
  std::vector<std::string> missing;
  for (TaskKind t : bench::kAllTasks) {
    if (!per_task.contains(t)) missing.emplace_back(bench::to_string(t));
  }
  if (!missing.empty()) {
    throw CoverageError("task columns must list every task, present or absent; missing: " +
                            join(missing),
                        missing, {});
  }
  for (const auto& [task, score] : per_task) {
    if (score) check_range(*score, "task score");
  }
  ScoreReport r;
  r.model_name = std::move(model_name);
  r.per_task = std::move(per_task);
  r.stated_avg = stated_avg;
  (void)r.avg();  // at least one present task
  return r;
}

ScoreReport model_report(std::string model_name, std::vector<CaseScore> per_case) {
  TaskColumns columns;
  for (TaskKind t : bench::kAllTasks) columns[t] = std::nullopt;
  for (const auto& [task, score] : task_scores(per_case)) columns[task] = score;
  ScoreReport r = model_report(std::move(model_name), std::move(columns));
  r.per_case = std::move(per_case);
  return r;
}

double case_weighted_average(const TaskColumns& per_task,
                             const std::map<TaskKind, std::size_t>& case_counts) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& [task, score] : per_task) {
    if (!score) continue;
    const auto it = case_counts.find(task);
    if (it == case_counts.end()) {
      throw CoverageError("no case count for task " + std::string(bench::to_string(task)),
                          {std::string(bench::to_string(task))}, {});
    }
    sum += *score * static_cast<double>(it->second);
    n += it->second;
  }
  if (n == 0) throw DomainError("case-weighted average over zero cases");
  return sum / static_cast<double>(n);
}

}  // namespace mref::scoring
