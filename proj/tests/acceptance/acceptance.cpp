// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fail.

#include <signal.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <map>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "asmopt/bench.hpp"
#include "asmopt/corpus.hpp"
#include "asmopt/errors.hpp"
#include "asmopt/generators.hpp"
#include "asmopt/prompt.hpp"
#include "asmopt/report.hpp"
#include "asmopt/reward.hpp"
#include "asmopt/timer.hpp"
#include "support.hpp"

extern char** environ;

using namespace asmopt;
namespace fs = std::filesystem;

namespace {

struct Verdict {
  bool pass = true;
  std::string summary;
  std::vector<std::string> failures;
  std::vector<std::string> notes;

  void expect(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      if (failures.size() < 12) failures.push_back(what);
    }
  }
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

// Shared between criteria.
std::vector<BenchmarkReport> g_reports;
std::vector<std::string> g_corpus_errors;

const std::vector<ProblemInstance>& identity_corpus() {
  static const auto corpus = [] {
    std::vector<ProblemInstance> out;
    CorpusBuildConfig cfg;
    MonotonicClock clock;
    for (const auto& s : testing::load_sources(testing::fixtures_dir() / "identity")) {
      try {
        out.push_back(build_instance(s.name, s.c_source, s.test_inputs, cfg, clock));
      } catch (const Error& e) {
        g_corpus_errors.push_back("building " + s.name + ": " + e.what());
      }
    }
    return out;
  }();
  return corpus;
}

// ------------------------------------------------------------------ 1

Verdict reward_exactness() {
  struct Row {
    RewardInput in;
    double alpha;
    double cgs;
    double so;
  };
  std::vector<Row> rows;
  for (double alpha : {5.0, 10.0}) {
    rows.push_back({{false, 0.0, std::nullopt}, alpha, -1.0, 0.0});
    rows.push_back({{false, 0.5, std::nullopt}, alpha, -1.0, 0.0});
    const double eighths[] = {0.0, 0.125, 0.25, 0.375, 0.5, 0.625, 0.75, 0.875};
    for (double f : eighths) rows.push_back({{true, f, std::nullopt}, alpha, f, 0.0});
  }
  rows.push_back({{true, 1.0, 0.8}, 5.0, 5.0, 0.8});
  rows.push_back({{true, 1.0, 1.0}, 5.0, 6.0, 1.0});
  rows.push_back({{true, 1.0, 1.47}, 5.0, 8.35, 1.47});
  rows.push_back({{true, 1.0, 2.0}, 5.0, 11.0, 2.0});
  rows.push_back({{true, 1.0, 0.8}, 10.0, 9.0, 0.8});
  rows.push_back({{true, 1.0, 1.0}, 10.0, 11.0, 1.0});
  rows.push_back({{true, 1.0, 1.47}, 10.0, 15.7, 1.47});
  rows.push_back({{true, 1.0, 2.0}, 10.0, 21.0, 2.0});

  Verdict v;
  int mismatches = 0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    const double cgs = reward_cgs(r.in, r.alpha).value;
    const double so = reward_so(r.in).value;
    const bool ok = cgs == r.cgs && so == r.so;
    mismatches += !ok;
    v.expect(ok, "row " + std::to_string(i) + ": cgs " + fmt("%.17g", cgs) + " vs " + fmt("%.17g", r.cgs) +
                     ", so " + fmt("%.17g", so) + " vs " + fmt("%.17g", r.so));
  }
  v.summary = std::to_string(rows.size()) + " rows, " + std::to_string(mismatches) + " mismatches";
  return v;
}

// ------------------------------------------------------------------ 2

Verdict clamped_speedup_law() {
  Verdict v;
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> t(1e-7, 100.0);
  int faster = 0;
  for (int i = 0; i < 10000; ++i) {
    const double b = t(rng);
    // Some exact ties, some equal-ish values.
    const double c = (i % 97 == 0) ? b : t(rng);
    const bool correct = (rng() % 4) != 0;
    const double s = speedup_metric(b, c, correct);
    const double want = (correct && c < b) ? b / c : 1.0;
    faster += correct && c < b;
    v.expect(s >= 1.0 && s == want, "triple " + std::to_string(i));
  }
  v.summary = "10000 triples (" + std::to_string(faster) + " correct and faster), zero tolerance";
  return v;
}

// ------------------------------------------------------------------ 3

Verdict timing_protocol() {
  Verdict v;
  const std::size_t n_inputs = 5;
  const TimingProtocol protocol;  // defaults
  v.expect(protocol.warmup_runs == 3 && protocol.measured_runs == 10, "default protocol is not 3 + 10");

  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> d(0.001, 2.0);
  std::vector<double> script(n_inputs * 13);
  for (auto& s : script) s = d(rng);

  std::vector<TestCase> tests;
  for (std::size_t i = 0; i < n_inputs; ++i) tests.push_back({std::to_string(i), ""});
  ScriptedClock clock(script, false);
  const auto r = time_binary(process::find_executable("true"), tests, protocol, clock);

  v.expect(clock.calls() == n_inputs * 13, "consumed " + std::to_string(clock.calls()) + " samples");
  double total = 0.0;
  double worst = 0.0;
  for (std::size_t i = 0; i < n_inputs; ++i) {
    double sum = 0.0;
    for (std::size_t k = 3; k < 13; ++k) sum += script[i * 13 + k];
    const double mean = sum / 10.0;
    total += mean;
    const double got = r.per_input_means.at(i).mean_seconds;
    worst = std::max(worst, std::abs(got - mean) / mean);
    v.expect(r.raw_samples.at(i).size() == 10, "input " + std::to_string(i) + " kept wrong sample count");
  }
  worst = std::max(worst, std::abs(r.total_seconds - total) / total);
  v.expect(worst <= 1e-12, "relative error " + fmt("%.3g", worst));

  // An extra input without samples must be detected, not silently folded.
  ScriptedClock short_clock(std::vector<double>(script.begin(), script.begin() + 20), false);
  bool threw = false;
  try {
    time_binary(process::find_executable("true"), tests, protocol, short_clock);
  } catch (const ClockError&) {
    threw = true;
  }
  v.expect(threw, "short script did not raise ClockError");
  v.summary = std::to_string(clock.calls()) + " samples for " + std::to_string(n_inputs) +
              " inputs, max relative error " + fmt("%.2g", worst);
  return v;
}

// ------------------------------------------------------------------ 4

Verdict identity_end_to_end() {
  Verdict v;
  const auto& corpus = identity_corpus();
  for (const auto& e : g_corpus_errors) v.expect(false, e);
  v.expect(corpus.size() == 10, "corpus has " + std::to_string(corpus.size()) + " instances");

  EvaluationConfig ecfg;
  IdentityGenerator gen;
  MonotonicClock clock;
  const auto report = run_benchmark(corpus, gen, ecfg, {}, clock);
  g_reports.push_back(report);

  std::size_t flagged = 0;
  for (const auto& o : report.per_instance) {
    flagged += o.noise_suspect;
    v.notes.push_back(o.instance_id + ": baseline " + fmt("%.5f s", o.baseline_seconds) + ", candidate " +
                      (o.candidate_seconds ? fmt("%.5f s", *o.candidate_seconds) : "n/a") + ", ratio " +
                      (o.ratio_unclamped ? fmt("%.4f", *o.ratio_unclamped) : "n/a"));
  }
  v.expect(report.compile_pass == 100.0, "compile_pass " + fmt("%.1f", report.compile_pass));
  v.expect(report.test_pass == 100.0, "test_pass " + fmt("%.1f", report.test_pass));
  v.expect(report.avg_speedup >= 1.0 && report.avg_speedup <= 1.02, "avg_speedup " + fmt("%.4f", report.avg_speedup));
  for (const auto& p : check_consistency(report)) v.expect(false, p);
  v.summary = std::to_string(report.n_instances) + " instances, compile " + fmt("%.1f%%", report.compile_pass) +
              ", test " + fmt("%.1f%%", report.test_pass) + ", avg speedup " + fmt("%.4fx", report.avg_speedup) +
              " (p50 " + fmt("%.4fx", report.speedup_p50) + ", " + std::to_string(flagged) + " flagged noise)";
  return v;
}

// ------------------------------------------------------------------ 5

Verdict popcnt_fixture() {
  Verdict v;
  const auto src = testing::read_file(testing::fixtures_dir() / "popcnt" / "popcnt.c");
  const std::vector<Bytes> inputs = {"0\n",
                                     "7\n",
                                     "18446744073709551615\n",
                                     "12297829382473034410\n",
                                     "9223372041149743103\n",
                                     "18446744073709551615 10000000\n"};
  CorpusBuildConfig cfg;
  MonotonicClock clock;
  const auto inst = build_instance("popcnt", src, inputs, cfg, clock);
  v.expect(inst.tests[0].expected_output == "0\n", "f(0) != 0");
  v.expect(inst.tests[1].expected_output == "3\n", "f(7) != 3");
  v.expect(inst.tests[2].expected_output == "64\n", "f(~0) != 64");
  v.expect(inst.tests[3].expected_output == "32\n", "f(0xaaaa...) != 32");
  v.expect(inst.tests[4].expected_output == "33\n", "f(2^63 + 2^32 - 1) != 33");

  const CandidateProgram cand{testing::splice_popcnt(inst.baseline_asm), "popcnt-port", inst.id, std::nullopt};
  const auto o = evaluate_candidate(inst, cand, EvaluationConfig{}, clock);
  for (const auto& p : check_outcome(o)) v.expect(false, p);
  v.expect(o.compiled, "candidate did not build: " + o.detail);
  v.expect(o.all_pass, "candidate failed tests");
  if (o.candidate_seconds) {
    v.expect(*o.candidate_seconds <= o.baseline_seconds, "candidate slower than baseline");
  }
  v.expect(o.speedup_clamped > 1.0, "speedup " + fmt("%.3f", o.speedup_clamped));
  v.summary = "tests " + fmt("%.0f%%", o.pass_frac * 100) + ", baseline " + fmt("%.4f s", o.baseline_seconds) +
              ", candidate " + (o.candidate_seconds ? fmt("%.4f s", *o.candidate_seconds) : "n/a") +
              ", measured speedup " + fmt("%.3fx", o.speedup_clamped) +
              (o.speedup_clamped > 1.2 ? " (above the 1.2x expectation)" : " (below the 1.2x expectation)");
  return v;
}

// ------------------------------------------------------------------ 6

std::vector<double> oracle_percentiles(std::vector<double> xs, const std::vector<double>& ps) {
  std::sort(xs.begin(), xs.end());
  std::vector<double> out;
  for (double p : ps) {
    const double h = (static_cast<double>(xs.size()) - 1.0) * p / 100.0;
    const std::size_t below = static_cast<std::size_t>(h);
    if (below + 1 >= xs.size()) {
      out.push_back(xs[below]);
    } else {
      const double w = h - static_cast<double>(below);
      out.push_back((1.0 - w) * xs[below] + w * xs[below + 1]);
    }
  }
  return out;
}

EvaluationOutcome random_outcome(std::mt19937_64& rng, std::size_t i) {
  EvaluationOutcome o;
  o.instance_id = "r" + std::to_string(i);
  o.generator_id = "random";
  o.baseline_seconds = 0.01 + static_cast<double>(rng() % 1000) / 1000.0;
  switch (rng() % 3) {
    case 0:
      o.build_status = "CompileFail";
      o.failure_stage = FailureStage::Build;
      o.reward_cgs = -1;
      break;
    case 1:
      o.compiled = true;
      o.build_status = "Ok";
      o.pass_frac = static_cast<double>(rng() % 8) / 8.0;
      o.failure_stage = FailureStage::Tests;
      o.reward_cgs = o.pass_frac;
      break;
    default: {
      o.compiled = true;
      o.build_status = "Ok";
      o.pass_frac = 1.0;
      o.all_pass = true;
      o.candidate_seconds = o.baseline_seconds * (0.3 + static_cast<double>(rng() % 1000) / 700.0);
      o.ratio_unclamped = o.baseline_seconds / *o.candidate_seconds;
      o.speedup_clamped = speedup_metric(o.baseline_seconds, *o.candidate_seconds, true);
      o.reward_cgs = 1.0 + 5.0 * *o.ratio_unclamped;
      o.reward_so = *o.ratio_unclamped;
    }
  }
  return o;
}

Verdict percentile_oracle() {
  Verdict v;
  std::mt19937_64 rng(66);
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 1 + rng() % 300;
    std::vector<double> xs(n);
    std::uniform_real_distribution<double> d(0.5, 4.0);
    for (auto& x : xs) x = (trial % 5 == 0) ? std::round(d(rng) * 4) / 4 : d(rng);
    std::vector<double> ps = {0, 25, 50, 75, 100};
    for (int k = 0; k < 5; ++k) ps.push_back(static_cast<double>(rng() % 100001) / 1000.0);
    const auto got = compute_percentiles(xs, ps);
    const auto want = oracle_percentiles(xs, ps);
    for (std::size_t k = 0; k < ps.size(); ++k) worst = std::max(worst, std::abs(got[k] - want[k]));
  }
  v.expect(worst <= 1e-9, "max abs error " + fmt("%.3g", worst));

  // Report self-consistency: every run so far, plus random reports that go
  // through a save/load cycle.
  std::size_t checked = 0;
  for (const auto& r : g_reports) {
    for (const auto& p : check_consistency(r)) v.expect(false, r.generator_id + ": " + p);
    ++checked;
  }
  const auto dir = testing::fresh_dir("accept6");
  for (int k = 0; k < 100; ++k) {
    BenchmarkReport r;
    r.generator_id = "random";
    const std::size_t n = 1 + rng() % 60;
    for (std::size_t i = 0; i < n; ++i) r.per_instance.push_back(random_outcome(rng, i));
    aggregate(r);
    save_report(r, dir / "r.json");
    const auto back = load_report(dir / "r.json");
    for (const auto& p : check_consistency(back)) v.expect(false, "random report: " + p);
    ++checked;
  }
  fs::remove_all(dir);
  v.summary = "1000 vectors, max abs error " + fmt("%.2g", worst) + "; " + std::to_string(checked) +
              " reports self-consistent";
  return v;
}

// ------------------------------------------------------------------ 7

class ListGenerator final : public Generator {
 public:
  explicit ListGenerator(std::map<std::string, std::string> by_instance) : by_instance_(std::move(by_instance)) {}
  std::string id() const override { return "hostile"; }
  CandidateProgram generate(const ProblemInstance& inst) const override {
    return {by_instance_.at(inst.id), id(), inst.id, std::nullopt};
  }

 private:
  std::map<std::string, std::string> by_instance_;
};

Verdict hostile_candidates() {
  Verdict v;
  const auto dir = testing::fixtures_dir() / "hostile";
  CorpusBuildConfig cfg;
  cfg.timing = testing::quick_protocol();
  MonotonicClock clock;
  const std::vector<Bytes> inputs = {"1 2\n", "30 12\n"};
  const auto base = build_instance("echo_sum", testing::read_file(dir / "echo_sum.c"), inputs, cfg, clock);

  // A bystander process of ours that a kill(-1) would take down.
  pid_t bystander = 0;
  char arg0[] = "sleep", arg1[] = "120";
  char* argv[] = {arg0, arg1, nullptr};
  posix_spawnp(&bystander, "sleep", nullptr, nullptr, argv, environ);

  const auto marker = fs::path("/tmp/asmopt_escape_marker");
  fs::remove(marker);

  struct Hostile {
    std::string name;
    std::string asm_text;
    FailureStage stage;
    std::optional<TestStatus> status;
  };
  ToolchainConfig tc;
  auto from_c = [&](const std::string& file) { return compile_c_to_asm(testing::read_file(dir / file), OptLevel::O0, tc); };
  const std::vector<Hostile> suite = {
      {"prose", "I'm sorry, but as an AI I can't produce assembly for this.\n", FailureStage::Build, std::nullopt},
      {"binary-junk", std::string("\x7f" "ELF\x02\x01\x01\0\0\xff\xfe", 12), FailureStage::Build, std::nullopt},
      {"infinite-loop", from_c("spin.c"), FailureStage::Tests, TestStatus::Timeout},
      {"segfault", from_c("segv.c"), FailureStage::Tests, TestStatus::Crash},
      {"gigabyte-printer", from_c("flood.c"), FailureStage::Tests, TestStatus::OutputLimit},
      {"fork-attempt", from_c("forker.c"), FailureStage::Tests, TestStatus::WrongOutput},
      {"kill-everything", from_c("killer.c"), FailureStage::Tests, TestStatus::WrongOutput},
      {"write-outside", from_c("escape.c"), FailureStage::Tests, TestStatus::WrongOutput},
  };

  std::vector<ProblemInstance> corpus;
  std::map<std::string, std::string> cands;
  for (const auto& h : suite) {
    auto inst = base;
    inst.id = h.name;
    corpus.push_back(inst);
    cands[h.name] = h.asm_text;
  }
  EvaluationConfig ecfg;
  ecfg.exec.wall_timeout = Seconds(2);
  ecfg.timing = testing::quick_protocol();
  const auto report = run_benchmark(corpus, ListGenerator(cands), ecfg, {}, clock);
  g_reports.push_back(report);

  std::size_t ok = 0;
  for (std::size_t i = 0; i < suite.size(); ++i) {
    const auto& h = suite[i];
    const auto& o = report.per_instance[i];
    bool good = o.failure_stage == h.stage && o.reward_so == 0.0 && o.speedup_clamped == 1.0 && !o.all_pass &&
                check_outcome(o).empty();
    if (h.stage == FailureStage::Build) good = good && !o.compiled && o.reward_cgs == -1.0;
    if (h.status) {
      good = good && o.compiled && o.reward_cgs == 0.0 && o.pass_frac == 0.0 &&
             std::all_of(o.test_statuses.begin(), o.test_statuses.end(), [&](TestStatus s) { return s == *h.status; });
    }
    ok += good;
    std::string statuses;
    for (auto s : o.test_statuses) statuses += std::string(to_string(s)) + " ";
    v.expect(good, h.name + ": stage " + (o.failure_stage ? std::string(to_string(*o.failure_stage)) : "none") +
                       ", cgs " + fmt("%g", o.reward_cgs) + ", so " + fmt("%g", o.reward_so) + ", tests " + statuses);
  }
  for (const auto& p : check_consistency(report)) v.expect(false, p);
  v.expect(!fs::exists(marker), "a candidate wrote " + marker.string());

  bool bystander_alive = false;
  if (bystander > 0) {
    int st = 0;
    bystander_alive = ::waitpid(bystander, &st, WNOHANG) == 0;
    ::kill(bystander, SIGKILL);
    ::waitpid(bystander, &st, 0);
  }
  v.expect(bystander_alive, "a sibling process of the harness was killed");
  v.summary = std::to_string(ok) + "/" + std::to_string(suite.size()) +
              " hostile candidates handled; harness and sibling process alive";
  return v;
}

// ------------------------------------------------------------------ 8

// Brute force: among all orderings, the one that is non-increasing in gain
// and lexicographically smallest in original index.
std::vector<std::size_t> oracle_ranking(const std::vector<std::pair<std::size_t, double>>& items) {
  std::vector<std::size_t> perm(items.size());
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<std::size_t> best;
  do {
    bool sorted = true;
    for (std::size_t k = 1; k < perm.size(); ++k) sorted = sorted && items[perm[k - 1]].second >= items[perm[k]].second;
    if (!sorted) continue;
    std::vector<std::size_t> idx;
    for (auto p : perm) idx.push_back(items[p].first);
    if (best.empty() || idx < best) best = idx;
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

Verdict corpus_pipeline() {
  Verdict v;
  const auto mini = testing::fixtures_dir() / "mini";
  const auto sources = testing::load_sources(mini);
  v.expect(sources.size() == 5, "mini corpus has " + std::to_string(sources.size()) + " sources");

  CorpusBuildConfig cfg;
  cfg.reference_policy.wall_timeout = Seconds(1);
  cfg.timing = testing::quick_protocol();
  MonotonicClock clock;
  std::vector<ProblemInstance> built;
  std::map<std::string, std::string> rejected;
  for (const auto& s : sources) {
    try {
      built.push_back(build_instance(s.name, s.c_source, s.test_inputs, cfg, clock));
    } catch (const CompileError&) {
      rejected[s.name] = "CompileError";
    } catch (const ReferenceRuntimeError&) {
      rejected[s.name] = "ReferenceRuntimeError";
    }
  }
  v.expect(rejected["hang"] == "ReferenceRuntimeError", "hang.c was not rejected as non-terminating");
  v.expect(rejected["broken"] == "CompileError", "broken.c was not rejected as non-compiling");
  v.expect(built.size() == 3, std::to_string(built.size()) + " instances built");

  // Independent re-execution: plain gcc -O0 build, run through the shell.
  const auto work = testing::fresh_dir("accept8");
  std::size_t compared = 0;
  for (const auto& inst : built) {
    const auto c = work / (inst.id + ".c");
    const auto bin = work / inst.id;
    testing::write_file(c, inst.c_source);
    const auto cc = testing::shell("gcc -O0 '" + c.string() + "' -o '" + bin.string() + "' -lm 2>&1");
    v.expect(cc.status == 0, "oracle build of " + inst.id + " failed");
    for (std::size_t i = 0; i < inst.tests.size(); ++i) {
      const auto r = testing::shell("'" + bin.string() + "'", inst.tests[i].input);
      const bool same = testing::oracle_normalize(r.out) == testing::oracle_normalize(inst.tests[i].expected_output);
      v.expect(r.status == 0 && same, inst.id + " test " + std::to_string(i) + " differs from re-execution");
      ++compared;
    }
  }
  fs::remove_all(work);

  // Ranking against the brute-force oracle with injected timings, ties included.
  std::mt19937_64 rng(88);
  ToolchainConfig tc;
  const int trials = 8;
  for (int t = 0; t < trials; ++t) {
    std::map<std::string, std::pair<double, double>> fake;
    for (const auto& s : sources) {
      const double o3 = 1.0 + static_cast<double>(rng() % 3);
      const double gain = 1.0 + static_cast<double>(rng() % 4) * 0.5;
      fake[s.name] = {o3 * gain, o3};
    }
    const auto r = rank_by_opt_gain(sources, tc, [&](const SourceEntry& s, OptLevel level, const fs::path&) {
      return level == OptLevel::O0 ? fake.at(s.name).first : fake.at(s.name).second;
    });
    std::vector<std::pair<std::size_t, double>> items;
    for (std::size_t i = 0; i < sources.size(); ++i) {
      if (sources[i].name == "broken") continue;
      items.push_back({i, fake[sources[i].name].first / fake[sources[i].name].second});
    }
    std::vector<std::size_t> got;
    for (const auto& x : r.ranked) got.push_back(x.index);
    v.expect(got == oracle_ranking(items), "trial " + std::to_string(t) + ": ranking differs from oracle");
    v.expect(r.skipped.size() == 1 && r.skipped[0].name == "broken", "trial " + std::to_string(t) + ": skip list");
  }
  v.summary = "rejected hang (" + rejected["hang"] + ") and broken (" + rejected["broken"] + "), " +
              std::to_string(compared) + " outputs match re-execution, " + std::to_string(trials) +
              " ranking trials match oracle";
  return v;
}

// ------------------------------------------------------------------ 9

const std::string kTemplate = R"(Given the following C code and assembly code, your task is to generate highly
optimized x86-64 assembly code.

C Code:
<C code here>

Assembly Code:
<baseline assembly code here produced by gcc -O3>

Only output the optimized assembly code. Do not include any other text.
Do not write any comments in the assembly code. Wrap the assembly code in
assembly tags.
Optimized Assembly Code:
)";

std::string with_newline(std::string s) {
  if (s.empty() || s.back() != '\n') s += '\n';
  return s;
}

std::string substitute(std::string t, const std::string& from, const std::string& to) {
  const auto at = t.find(from);
  if (at == std::string::npos) return "<template placeholder missing>";
  return t.replace(at, from.size(), to);
}

std::string expected_prompt(const ProblemInstance& inst, bool with_asm) {
  std::string t = kTemplate;
  if (with_asm) {
    t = substitute(t, "<baseline assembly code here produced by gcc -O3>\n", with_newline(inst.baseline_asm));
  } else {
    t = substitute(t, "C code and assembly code,", "C code,");
    t = substitute(t, "Assembly Code:\n<baseline assembly code here produced by gcc -O3>\n\n", "");
  }
  return substitute(t, "<C code here>\n", with_newline(inst.c_source));
}

Verdict prompt_fidelity() {
  Verdict v;
  std::vector<ProblemInstance> insts = identity_corpus();
  // Copies whose tests are unmistakable tokens, so any leak would show.
  std::mt19937_64 rng(99);
  const auto token = [&] {
    std::string s = "TESTBYTES-";
    for (int i = 0; i < 24; ++i) s += static_cast<char>('a' + rng() % 26);
    return s;
  };
  const std::size_t real = insts.size();
  for (std::size_t i = 0; i < real; ++i) {
    auto copy = insts[i];
    copy.id += "-sentinel";
    for (auto& t : copy.tests) t = {token() + "\n", token() + "\n"};
    insts.push_back(copy);
  }

  std::size_t prompts = 0, scanned = 0;
  for (const auto& inst : insts) {
    for (bool with_asm : {true, false}) {
      const auto p = render_prompt(inst, with_asm).rendered_prompt;
      ++prompts;
      v.expect(p == expected_prompt(inst, with_asm),
               inst.id + (with_asm ? " w/ baseline" : " w/o baseline") + ": prompt differs from template");
      for (const auto& t : inst.tests) {
        ++scanned;
        v.expect(p.find(t.input) == std::string::npos, inst.id + ": test input bytes found in prompt");
      }
    }
  }
  v.summary = std::to_string(prompts) + " prompts byte-identical to the template, " + std::to_string(scanned) +
              " test inputs absent";
  return v;
}

}  // namespace

int main(int argc, char** argv) {
  struct Criterion {
    int number;
    const char* name;
    std::function<Verdict()> run;
  };
  const std::vector<Criterion> criteria = {
      {1, "reward exactness", reward_exactness},
      {2, "clamped-speedup law", clamped_speedup_law},
      {3, "timing protocol", timing_protocol},
      {4, "identity generator end-to-end", identity_end_to_end},
      {5, "popcnt fixture", popcnt_fixture},
      {6, "percentile oracle and report consistency", percentile_oracle},
      {7, "hostile-candidate robustness", hostile_candidates},
      {8, "corpus pipeline", corpus_pipeline},
      {9, "prompt fidelity", prompt_fidelity},
  };

  // Optional arguments pick criteria by number.
  std::vector<int> only;
  for (int i = 1; i < argc; ++i) only.push_back(std::atoi(argv[i]));

  int failed = 0, ran = 0;
  for (const auto& c : criteria) {
    if (!only.empty() && std::find(only.begin(), only.end(), c.number) == only.end()) continue;
    ++ran;
    const auto start = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = c.run();
    } catch (const std::exception& e) {
      v.pass = false;
      v.summary = std::string("exception: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("%s [%d] %s: %s (%.2f s)\n", v.pass ? "PASS" : "FAIL", c.number, c.name, v.summary.c_str(), secs);
    for (const auto& n : v.notes) std::printf("       %s\n", n.c_str());
    for (const auto& f : v.failures) std::printf("       - %s\n", f.c_str());
    std::fflush(stdout);
    failed += !v.pass;
  }
  std::printf("%d/%d criteria passed\n", ran - failed, ran);
  return failed == 0 ? 0 : 1;
}
