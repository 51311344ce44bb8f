#include "asmopt/bench.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <mutex>
#include <thread>

#include <json.hpp>

#include "asmopt/errors.hpp"
#include "asmopt/report.hpp"

namespace asmopt {
namespace {

constexpr std::size_t kDetailLimit = 2048;

std::string clip(std::string text) {
  if (text.size() > kDetailLimit) {
    text.resize(kDetailLimit);
    text += "\n[truncated]";
  }
  return text;
}

void apply_rewards(EvaluationOutcome& out, const EvaluationConfig& cfg) {
  RewardInput input{out.compiled, out.pass_frac, out.ratio_unclamped};
  out.reward_cgs = reward_cgs(input, cfg.reward.alpha).value;
  out.reward_so = reward_so(input).value;
}

}  // namespace

std::string_view to_string(FailureStage stage) {
  switch (stage) {
    case FailureStage::Generation: return "Generation";
    case FailureStage::Build: return "Build";
    case FailureStage::Tests: return "Tests";
    case FailureStage::Timing: return "Timing";
  }
  return "?";
}

FailureStage parse_failure_stage(std::string_view text) {
  for (auto s : {FailureStage::Generation, FailureStage::Build, FailureStage::Tests, FailureStage::Timing}) {
    if (to_string(s) == text) return s;
  }
  throw FormatError("unknown failure stage: " + std::string(text));
}

EvaluationOutcome generation_failure(const ProblemInstance& inst, const std::string& generator_id,
                                     const std::string& error) {
  EvaluationOutcome out;
  out.instance_id = inst.id;
  out.generator_id = generator_id;
  out.build_status = "NotBuilt";
  out.baseline_seconds = inst.baseline_time;
  out.failure_stage = FailureStage::Generation;
  out.detail = clip(error);
  out.reward_cgs = -1.0;
  out.reward_so = 0.0;
  return out;
}

EvaluationOutcome evaluate_candidate(const ProblemInstance& inst, const CandidateProgram& cand,
                                     const EvaluationConfig& cfg, Clock& clock) {
  EvaluationOutcome out;
  out.instance_id = inst.id;
  out.generator_id = cand.generator_id;
  out.baseline_seconds = inst.baseline_time;

  const auto build = build_candidate(cand.asm_text, cfg.toolchain);
  out.build_status = std::string(to_string(build.status));
  out.compiled = build.ok();
  if (!out.compiled) {
    out.failure_stage = FailureStage::Build;
    out.detail = clip(build.diagnostics);
    apply_rewards(out, cfg);
    return out;
  }

  const auto results = run_tests(*build.binary_path, inst.tests, cfg.exec, cfg.test_jobs);
  for (const auto& r : results) out.test_statuses.push_back(r.status);
  out.pass_frac = pass_fraction(results);
  if (out.pass_frac < 1.0) {
    out.failure_stage = FailureStage::Tests;
    apply_rewards(out, cfg);
    return out;
  }

  // Every test passed: only now is the candidate worth timing.
  double baseline_seconds = inst.baseline_time;
  double candidate_seconds = 0.0;
  try {
    if (cfg.remeasure_baseline) {
      const auto baseline_build = build_candidate(inst.baseline_asm, cfg.toolchain);
      if (!baseline_build.ok()) {
        throw SandboxSetupError("baseline of " + inst.id + " no longer builds: " + baseline_build.diagnostics);
      }
      const auto [base, candidate] =
          time_pair(*baseline_build.binary_path, *build.binary_path, inst.tests, cfg.timing, clock);
      baseline_seconds = base.total_seconds;
      candidate_seconds = candidate.total_seconds;
    } else {
      candidate_seconds = time_binary(*build.binary_path, inst.tests, cfg.timing, clock).total_seconds;
    }
  } catch (const Error& e) {
    std::optional<std::size_t> failed_test;
    std::string binary;
    if (const auto* t = dynamic_cast<const TimeoutDuringTiming*>(&e)) {
      failed_test = t->test_index();
      binary = t->binary();
    } else if (const auto* f = dynamic_cast<const TimingRunFailed*>(&e)) {
      failed_test = f->test_index();
      binary = f->binary();
    }
    const bool candidate_at_fault =
        failed_test && binary == std::filesystem::absolute(*build.binary_path).string();
    if (!candidate_at_fault) throw;
    // The candidate did not reproduce a passing run while being timed; that
    // test counts as failed.
    out.test_statuses[*failed_test] = dynamic_cast<const TimeoutDuringTiming*>(&e)
                                          ? TestStatus::Timeout
                                          : TestStatus::WrongOutput;
    const auto passed = std::count(out.test_statuses.begin(), out.test_statuses.end(), TestStatus::Pass);
    out.pass_frac = static_cast<double>(passed) / static_cast<double>(out.test_statuses.size());
    out.failure_stage = FailureStage::Timing;
    out.detail = clip(e.what());
    apply_rewards(out, cfg);
    return out;
  }

  out.all_pass = true;
  out.baseline_seconds = baseline_seconds;
  out.candidate_seconds = candidate_seconds;
  out.ratio_unclamped = baseline_seconds / candidate_seconds;
  out.speedup_clamped = speedup_metric(baseline_seconds, candidate_seconds, true);
  out.noise_suspect = *out.ratio_unclamped > 1.0 && *out.ratio_unclamped <= 1.0 + cfg.noise_epsilon;
  apply_rewards(out, cfg);
  return out;
}

std::vector<double> compute_percentiles(std::span<const double> values, std::span<const double> ps) {
  if (values.empty()) throw EmptyValues("percentiles of an empty list");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> out;
  out.reserve(ps.size());
  const double last = static_cast<double>(sorted.size() - 1);
  for (double p : ps) {
    if (!(p >= 0.0 && p <= 100.0)) throw ConfigError("percentile outside [0, 100]");
    const double rank = p / 100.0 * last;
    const auto lo = static_cast<std::size_t>(std::floor(rank));
    const auto hi = static_cast<std::size_t>(std::ceil(rank));
    out.push_back(sorted[lo] + (rank - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]));
  }
  return out;
}

void aggregate(BenchmarkReport& report) {
  const auto& outcomes = report.per_instance;
  report.n_instances = outcomes.size();
  if (outcomes.empty()) {
    report.compile_pass = report.test_pass = 0.0;
    report.speedup_p25 = report.speedup_p50 = report.speedup_p75 = report.avg_speedup = 1.0;
    return;
  }
  std::size_t compiled = 0, passed = 0;
  std::vector<double> speedups;
  double sum = 0.0;
  for (const auto& o : outcomes) {
    compiled += o.compiled ? 1 : 0;
    passed += o.all_pass ? 1 : 0;
    speedups.push_back(o.speedup_clamped);
    sum += o.speedup_clamped;
  }
  const auto n = static_cast<double>(outcomes.size());
  report.compile_pass = 100.0 * static_cast<double>(compiled) / n;
  report.test_pass = 100.0 * static_cast<double>(passed) / n;
  const double ps[] = {25.0, 50.0, 75.0};
  const auto pct = compute_percentiles(speedups, ps);
  report.speedup_p25 = pct[0];
  report.speedup_p50 = pct[1];
  report.speedup_p75 = pct[2];
  report.avg_speedup = sum / n;
}

std::vector<std::string> check_outcome(const EvaluationOutcome& o) {
  std::vector<std::string> bad;
  auto expect = [&](bool ok, const std::string& what) {
    if (!ok) bad.push_back(o.instance_id + ": " + what);
  };
  expect(o.speedup_clamped >= 1.0, "speedup_clamped < 1");
  expect(o.all_pass == (o.pass_frac == 1.0), "all_pass disagrees with pass_frac");
  expect(o.candidate_seconds.has_value() == o.all_pass, "candidate_seconds present iff all_pass");
  expect(o.ratio_unclamped.has_value() == o.all_pass, "ratio present iff all_pass");
  expect(o.all_pass || o.speedup_clamped == 1.0, "failed candidate has speedup != 1");
  expect(!(o.reward_so > 0.0) || o.all_pass, "reward_so > 0 without all_pass");
  expect(!(o.reward_cgs >= 1.0) || o.all_pass, "reward_cgs >= 1 without all_pass");
  expect(o.compiled || o.pass_frac == 0.0, "uncompiled candidate with nonzero pass fraction");
  expect(o.compiled || o.reward_cgs == -1.0, "uncompiled candidate with CGS reward != -1");
  expect(o.all_pass == !o.failure_stage.has_value(), "failure_stage present iff not all_pass");
  if (o.all_pass) {
    expect(*o.candidate_seconds > 0.0 && o.baseline_seconds > 0.0, "non-positive timings");
    expect(o.speedup_clamped == speedup_metric(o.baseline_seconds, *o.candidate_seconds, true),
           "speedup_clamped does not match the timings");
  }
  return bad;
}

std::vector<std::string> check_consistency(const BenchmarkReport& report) {
  std::vector<std::string> bad;
  for (const auto& o : report.per_instance) {
    auto more = check_outcome(o);
    bad.insert(bad.end(), more.begin(), more.end());
  }
  BenchmarkReport again = report;
  aggregate(again);
  auto expect = [&](bool ok, const std::string& what) {
    if (!ok) bad.push_back("report: " + what);
  };
  expect(again.n_instances == report.n_instances, "n_instances does not match per_instance");
  expect(again.compile_pass == report.compile_pass, "compile_pass does not match per_instance");
  expect(again.test_pass == report.test_pass, "test_pass does not match per_instance");
  expect(again.speedup_p25 == report.speedup_p25, "p25 does not match per_instance");
  expect(again.speedup_p50 == report.speedup_p50, "p50 does not match per_instance");
  expect(again.speedup_p75 == report.speedup_p75, "p75 does not match per_instance");
  expect(again.avg_speedup == report.avg_speedup, "avg_speedup does not match per_instance");
  expect(report.compile_pass >= report.test_pass, "compile_pass < test_pass");
  expect(report.avg_speedup >= 1.0, "avg_speedup < 1");
  expect(report.speedup_p25 <= report.speedup_p50 && report.speedup_p50 <= report.speedup_p75,
         "percentiles not monotone");
  return bad;
}

BenchmarkReport run_benchmark(std::span<const ProblemInstance> corpus, const Generator& generator,
                              const EvaluationConfig& cfg, const BenchOptions& options, Clock& clock) {
  if (corpus.empty()) throw EmptySplit("benchmark over an empty corpus");
  cfg.reward.validate();

  std::vector<std::optional<EvaluationOutcome>> outcomes(corpus.size());
  if (options.checkpoint && options.resume) {
    std::ifstream in(*options.checkpoint);
    std::string line;
    while (std::getline(in, line)) {
      EvaluationOutcome o;
      try {
        o = outcome_from_json(nlohmann::json::parse(line));
      } catch (const std::exception&) {
        continue;  // a torn final line from an interrupted run
      }
      if (o.generator_id != generator.id()) continue;
      for (std::size_t i = 0; i < corpus.size(); ++i) {
        if (corpus[i].id == o.instance_id && !outcomes[i]) outcomes[i] = o;
      }
    }
  }

  std::ofstream checkpoint;
  std::mutex checkpoint_mu;
  if (options.checkpoint) {
    checkpoint.open(*options.checkpoint, options.resume ? std::ios::app : std::ios::trunc);
    if (!checkpoint) throw IoError("cannot open checkpoint " + options.checkpoint->string());
  }

  auto evaluate = [&](std::size_t i) {
    const auto& inst = corpus[i];
    EvaluationOutcome outcome;
    std::optional<CandidateProgram> cand;
    try {
      cand = generator.generate(inst);
    } catch (const EndpointError& e) {
      outcome = generation_failure(inst, generator.id(), e.what());
    } catch (const ResponseEmpty& e) {
      outcome = generation_failure(inst, generator.id(), e.what());
    }
    if (cand) {
      cand->generator_id = generator.id();
      outcome = evaluate_candidate(inst, *cand, cfg, clock);
    }
    if (checkpoint.is_open()) {
      std::lock_guard lock(checkpoint_mu);
      checkpoint << outcome_to_json(outcome).dump() << '\n' << std::flush;
    }
    outcomes[i] = std::move(outcome);
  };

  std::vector<std::size_t> todo;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    if (!outcomes[i]) todo.push_back(i);
  }
  const unsigned jobs = std::clamp<unsigned>(options.jobs, 1, static_cast<unsigned>(std::max<std::size_t>(todo.size(), 1)));
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  {
    std::vector<std::jthread> workers;
    for (unsigned w = 0; w < jobs; ++w) {
      workers.emplace_back([&] {
        for (std::size_t k = next++; k < todo.size(); k = next++) {
          {
            std::lock_guard lock(failure_mu);
            if (failure) return;
          }
          try {
            evaluate(todo[k]);
          } catch (...) {
            std::lock_guard lock(failure_mu);
            if (!failure) failure = std::current_exception();
          }
        }
      });
    }
  }
  if (failure) std::rethrow_exception(failure);

  BenchmarkReport report;
  report.generator_id = generator.id();
  report.corpus_fingerprint = corpus_fingerprint(corpus);
  report.toolchain_fingerprint = cfg.toolchain.fingerprint();
  report.config_json = config_to_json(cfg);
  for (auto& o : outcomes) report.per_instance.push_back(std::move(*o));
  aggregate(report);
  return report;
}

std::string config_to_json(const EvaluationConfig& cfg) {
  nlohmann::json j = {
      {"toolchain",
       {{"compiler", cfg.toolchain.compiler_path.string()},
        {"baseline_flags", cfg.toolchain.baseline_flags},
        {"unopt_flags", cfg.toolchain.unopt_flags},
        {"link_flags", cfg.toolchain.link_flags},
        {"compile_timeout_s", cfg.toolchain.compile_timeout.count()}}},
      {"exec",
       {{"wall_timeout_s", cfg.exec.wall_timeout.count()},
        {"max_memory_bytes", cfg.exec.max_memory},
        {"max_output_bytes", cfg.exec.max_output},
        {"output_normalization", "strip trailing whitespace per line and trailing blank lines"},
        {"nonzero_exit_fails", true}}},
      {"timing",
       {{"warmup_runs", cfg.timing.warmup_runs},
        {"measured_runs", cfg.timing.measured_runs},
        {"aggregation", "mean per input, summed over inputs"},
        {"run_timeout_s", cfg.timing.run_timeout.count()},
        {"pin_cpu", cfg.timing.pin_cpu ? nlohmann::json(*cfg.timing.pin_cpu) : nlohmann::json(nullptr)},
        {"remeasure_baseline", cfg.remeasure_baseline}}},
      {"reward", {{"kind", to_string(cfg.reward.kind)}, {"alpha", cfg.reward.alpha}}},
      {"noise_epsilon", cfg.noise_epsilon},
      {"percentile_method", "linear"},
  };
  return j.dump();
}

}  // namespace asmopt
