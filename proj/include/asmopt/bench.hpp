#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "asmopt/corpus.hpp"
#include "asmopt/generators.hpp"
#include "asmopt/reward.hpp"
#include "asmopt/sandbox.hpp"
#include "asmopt/timer.hpp"
#include "asmopt/toolchain.hpp"

namespace asmopt {

struct EvaluationConfig {
  ToolchainConfig toolchain;
  ExecPolicy exec;
  TimingProtocol timing;
  RewardConfig reward;  // alpha feeds reward_cgs; both rewards are always recorded
  // Correct candidates measured within (1, 1 + noise_epsilon] of the baseline
  // are flagged noise_suspect.
  double noise_epsilon = 0.02;
  // Time the baseline again, interleaved with the candidate, instead of
  // trusting the baseline_time stored in the corpus.
  bool remeasure_baseline = true;
  unsigned test_jobs = 1;
};

enum class FailureStage { Generation, Build, Tests, Timing };

std::string_view to_string(FailureStage stage);
FailureStage parse_failure_stage(std::string_view text);

struct EvaluationOutcome {
  std::string instance_id;
  std::string generator_id;
  bool compiled = false;
  std::string build_status;  // BuildStatus name, or "NotBuilt"
  double pass_frac = 0.0;
  bool all_pass = false;
  double baseline_seconds = 0.0;
  std::optional<double> candidate_seconds;
  double speedup_clamped = 1.0;
  std::optional<double> ratio_unclamped;
  double reward_cgs = -1.0;
  double reward_so = 0.0;
  std::optional<FailureStage> failure_stage;
  bool noise_suspect = false;
  std::vector<TestStatus> test_statuses;
  std::string detail;  // build diagnostics or error text, truncated

  bool operator==(const EvaluationOutcome&) const = default;
};

/// build -> run tests -> (all pass) time -> speedup and rewards. Candidate
/// failures are encoded in the outcome; only environmental problems throw.
EvaluationOutcome evaluate_candidate(const ProblemInstance& inst, const CandidateProgram& cand,
                                     const EvaluationConfig& cfg, Clock& clock);

/// Outcome for a generator that produced no candidate at all.
EvaluationOutcome generation_failure(const ProblemInstance& inst, const std::string& generator_id,
                                     const std::string& error);

/// Linear interpolation between closest ranks; `ps` in [0, 100].
/// Throws EmptyValues.
std::vector<double> compute_percentiles(std::span<const double> values, std::span<const double> ps);

struct BenchmarkReport {
  std::string generator_id;
  std::string corpus_fingerprint;
  std::string toolchain_fingerprint;
  std::size_t n_instances = 0;
  double compile_pass = 0.0;  // percent
  double test_pass = 0.0;     // percent
  double speedup_p25 = 1.0;
  double speedup_p50 = 1.0;
  double speedup_p75 = 1.0;
  double avg_speedup = 1.0;
  std::string percentile_method = "linear";
  std::string config_json;  // resolved run configuration, serialized
  std::vector<EvaluationOutcome> per_instance;
};

/// Fills the aggregate fields of `report` from report.per_instance.
void aggregate(BenchmarkReport& report);

/// Violated invariants of a report (empty when consistent): aggregates must
/// equal a recomputation from per_instance, and every outcome must obey the
/// speedup/reward/pass relations.
std::vector<std::string> check_consistency(const BenchmarkReport& report);
std::vector<std::string> check_outcome(const EvaluationOutcome& outcome);

struct BenchOptions {
  unsigned jobs = 1;
  // Append-only JSONL of finished outcomes; existing entries are reused when
  // resume is set.
  std::optional<std::filesystem::path> checkpoint;
  bool resume = false;
};

/// Evaluates `generator` once on every instance. Throws EmptySplit on an
/// empty corpus and propagates environmental errors.
BenchmarkReport run_benchmark(std::span<const ProblemInstance> corpus, const Generator& generator,
                              const EvaluationConfig& cfg, const BenchOptions& options, Clock& clock);

/// All tunables of an evaluation, as JSON text, for report headers.
std::string config_to_json(const EvaluationConfig& cfg);

}  // namespace asmopt
