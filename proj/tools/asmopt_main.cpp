// asmopt: build assembly-optimization corpora, evaluate candidates and run
// benchmarks.
//
//   asmopt build-corpus --sources DIR --tests DIR --out corpus.jsonl
//   asmopt stats --corpus corpus.jsonl
//   asmopt evaluate --corpus corpus.jsonl --instance ID --candidate cand.s
//   asmopt bench --corpus corpus.jsonl --generator identity --out results/
//   asmopt report results/report.json

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "asmopt/bench.hpp"
#include "asmopt/corpus.hpp"
#include "asmopt/errors.hpp"
#include "asmopt/generators.hpp"
#include "asmopt/report.hpp"

namespace fs = std::filesystem;
using namespace asmopt;

namespace {

unsigned default_jobs() {
  const unsigned n = std::thread::hardware_concurrency();
  return n > 1 ? n - 1 : 1;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
  if (!out.flush()) throw IoError("cannot write " + path.string());
}

// Flags shared by every command that compiles or times programs.
struct CommonFlags {
  std::string compiler = "gcc";
  std::vector<std::string> link_flags{"-lm"};
  double compile_timeout = 30.0;
  double exec_timeout = 10.0;
  unsigned warmup = 3;
  unsigned runs = 10;
  std::optional<int> pin_cpu;
  bool keep_artifacts = false;
  std::string scratch;

  void add_to(CLI::App* app) {
    app->add_option("--compiler", compiler, "C compiler driver")->capture_default_str();
    app->add_option("--link-flags", link_flags, "Flags appended to every link")->capture_default_str();
    app->add_option("--compile-timeout", compile_timeout, "Seconds per compiler invocation")
        ->capture_default_str();
    app->add_option("--timeout", exec_timeout, "Wall-clock seconds per test run")->capture_default_str();
    app->add_option("--warmup", warmup, "Discarded runs per input before timing")->capture_default_str();
    app->add_option("--runs", runs, "Timed runs per input")->capture_default_str();
    app->add_option("--pin-cpu", pin_cpu, "Pin timed runs to this CPU");
    app->add_option("--scratch", scratch, "Directory for temporary build artifacts");
    app->add_flag("--keep-artifacts", keep_artifacts, "Do not delete build directories");
  }

  ToolchainConfig toolchain() const {
    ToolchainConfig cfg;
    cfg.compiler_path = compiler;
    cfg.link_flags = link_flags;
    cfg.compile_timeout = Seconds(compile_timeout);
    cfg.keep_artifacts = keep_artifacts;
    if (!scratch.empty()) cfg.scratch_root = scratch;
    return cfg.resolved();
  }

  ExecPolicy exec() const {
    ExecPolicy p;
    p.wall_timeout = Seconds(exec_timeout);
    if (!scratch.empty()) p.scratch_root = scratch;
    return p;
  }

  TimingProtocol timing() const {
    TimingProtocol t;
    t.warmup_runs = warmup;
    t.measured_runs = runs;
    t.run_timeout = Seconds(exec_timeout);
    t.pin_cpu = pin_cpu;
    if (!scratch.empty()) t.scratch_root = scratch;
    t.validate();
    return t;
  }
};

struct EvalFlags {
  std::string reward = "CGS";
  double alpha = 5.0;
  double noise_epsilon = 0.02;
  bool no_remeasure = false;

  void add_to(CLI::App* app) {
    app->add_option("--reward", reward, "Reward reported as primary: CGS or SO")->capture_default_str();
    app->add_option("--alpha", alpha, "CGS speedup weight")->capture_default_str();
    app->add_option("--noise-epsilon", noise_epsilon, "Ratios in (1, 1+eps] are flagged as noise")
        ->capture_default_str();
    app->add_flag("--no-remeasure-baseline", no_remeasure,
                  "Use the baseline time stored in the corpus instead of re-timing it");
  }

  EvaluationConfig config(const CommonFlags& common) const {
    EvaluationConfig cfg;
    cfg.toolchain = common.toolchain();
    cfg.exec = common.exec();
    cfg.timing = common.timing();
    cfg.reward.kind = parse_reward_kind(reward);
    cfg.reward.alpha = alpha;
    cfg.reward.validate();
    cfg.noise_epsilon = noise_epsilon;
    cfg.remeasure_baseline = !no_remeasure;
    return cfg;
  }
};

// ---------------------------------------------------------------- build-corpus

struct BuildCorpusArgs {
  fs::path sources_dir;
  fs::path tests_dir;
  fs::path out_path;
  std::string split = "corpus";
  std::optional<std::size_t> select_top;
  double reference_timeout = 10.0;
  unsigned jobs = default_jobs();
};

std::vector<SourceEntry> collect_sources(const fs::path& sources_dir, const fs::path& tests_dir,
                                         std::vector<SkipRecord>& skipped) {
  if (!fs::is_directory(sources_dir)) throw IoError("not a directory: " + sources_dir.string());
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(sources_dir)) {
    if (e.is_regular_file() && e.path().extension() == ".c") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());

  std::vector<SourceEntry> sources;
  for (const auto& file : files) {
    SourceEntry src;
    src.name = file.stem().string();
    src.c_source = read_file(file);
    const auto dir = tests_dir / src.name;
    std::vector<fs::path> inputs;
    if (fs::is_directory(dir)) {
      for (const auto& e : fs::directory_iterator(dir)) {
        if (e.is_regular_file()) inputs.push_back(e.path());
      }
    }
    std::sort(inputs.begin(), inputs.end());
    if (inputs.empty()) {
      skipped.push_back({src.name, "no test inputs under " + dir.string()});
      continue;
    }
    for (const auto& in : inputs) src.test_inputs.push_back(read_file(in));
    sources.push_back(std::move(src));
  }
  return sources;
}

int cmd_build_corpus(const BuildCorpusArgs& args, const CommonFlags& common) {
  std::vector<SkipRecord> skipped;
  auto sources = collect_sources(args.sources_dir, args.tests_dir, skipped);
  if (sources.empty()) {
    std::cerr << "error: no usable C sources in " << args.sources_dir << '\n';
    for (const auto& s : skipped) std::cerr << "  skipped " << s.name << ": " << s.reason << '\n';
    return 1;
  }

  CorpusBuildConfig cfg;
  cfg.toolchain = common.toolchain();
  cfg.reference_policy = common.exec();
  cfg.reference_policy.wall_timeout = Seconds(args.reference_timeout);
  cfg.timing = common.timing();
  MonotonicClock clock;

  if (args.select_top) {
    auto ranking = rank_by_opt_gain(sources, cfg.toolchain, cfg.timing, clock);
    std::cout << "O0 -> O3 gain ranking:\n";
    for (const auto& r : ranking.ranked) std::cout << "  " << r.name << "  " << r.gain << "x\n";
    skipped.insert(skipped.end(), ranking.skipped.begin(), ranking.skipped.end());
    std::vector<SourceEntry> kept;
    for (std::size_t k = 0; k < ranking.ranked.size() && k < *args.select_top; ++k) {
      kept.push_back(sources[ranking.ranked[k].index]);
    }
    sources = std::move(kept);
  }

  std::vector<std::optional<ProblemInstance>> built(sources.size());
  std::vector<std::optional<std::string>> errors(sources.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr fatal;
  std::mutex fatal_mu;
  {
    std::vector<std::jthread> workers;
    const unsigned jobs = std::clamp<unsigned>(args.jobs, 1, static_cast<unsigned>(sources.size()));
    for (unsigned w = 0; w < jobs; ++w) {
      workers.emplace_back([&] {
        for (std::size_t i = next++; i < sources.size(); i = next++) {
          try {
            built[i] = build_instance(sources[i].name, sources[i].c_source, sources[i].test_inputs, cfg, clock);
          } catch (const CompileError& e) {
            errors[i] = std::string(e.what()) + "\n" + e.diagnostics();
          } catch (const ReferenceRuntimeError& e) {
            errors[i] = e.what();
          } catch (...) {
            std::lock_guard lock(fatal_mu);
            if (!fatal) fatal = std::current_exception();
          }
        }
      });
    }
  }
  if (fatal) std::rethrow_exception(fatal);

  std::vector<ProblemInstance> instances;
  for (std::size_t i = 0; i < sources.size(); ++i) {
    if (built[i]) instances.push_back(std::move(*built[i]));
    if (errors[i]) skipped.push_back({sources[i].name, *errors[i]});
  }

  for (const auto& s : skipped) {
    auto reason = s.reason.substr(0, s.reason.find('\n'));
    std::cout << "skipped " << s.name << ": " << reason << '\n';
  }
  if (instances.empty()) {
    std::cerr << "error: every source was rejected; no corpus written\n";
    return 1;
  }

  save_corpus(instances, args.out_path, cfg.toolchain.fingerprint());
  const auto stats = compute_stats(instances, args.split);
  nlohmann::json stats_json = {{"split", stats.split_name},
                               {"program_count", stats.program_count},
                               {"avg_tests", stats.avg_tests},
                               {"avg_c_loc", stats.avg_c_loc},
                               {"avg_asm_loc", stats.avg_asm_loc}};
  nlohmann::json skip_json = nlohmann::json::array();
  for (const auto& s : skipped) skip_json.push_back({{"name", s.name}, {"reason", s.reason}});
  auto summary_path = args.out_path;
  summary_path += ".summary.json";
  write_file(summary_path, nlohmann::json{{"stats", stats_json}, {"skipped", skip_json}}.dump(2) + "\n");

  std::cout << "wrote " << instances.size() << " instances to " << args.out_path.string() << " ("
            << skipped.size() << " skipped)\n\n"
            << render_stats(std::span(&stats, 1));
  return 0;
}

// ---------------------------------------------------------------- stats

int cmd_stats(const fs::path& corpus_path, const std::string& split) {
  const auto instances = load_corpus(corpus_path);
  const auto stats = compute_stats(instances, split);
  std::cout << render_stats(std::span(&stats, 1));
  return 0;
}

// ---------------------------------------------------------------- evaluate

int cmd_evaluate(const fs::path& corpus_path, const fs::path& candidate_path, const std::string& instance_id,
                 const std::optional<fs::path>& out_dir, const EvaluationConfig& cfg) {
  const auto instances = load_corpus(corpus_path);
  const auto it = std::find_if(instances.begin(), instances.end(),
                               [&](const ProblemInstance& p) { return p.id == instance_id; });
  if (it == instances.end()) throw UnknownInstance("no instance '" + instance_id + "' in " + corpus_path.string());

  CandidateProgram cand{read_file(candidate_path), "file:" + candidate_path.filename().string(), it->id,
                        std::nullopt};
  MonotonicClock clock;
  const auto outcome = evaluate_candidate(*it, cand, cfg, clock);
  std::cout << render_outcome(outcome);
  if (out_dir) {
    fs::create_directories(*out_dir);
    nlohmann::json j = outcome_to_json(outcome);
    j["config"] = nlohmann::json::parse(config_to_json(cfg));
    j["toolchain_fingerprint"] = cfg.toolchain.fingerprint();
    write_file(*out_dir / "outcome.json", j.dump(2) + "\n");
  }
  return 0;
}

// ---------------------------------------------------------------- bench

struct BenchArgs {
  fs::path corpus_path;
  std::string generator = "identity";
  fs::path out_dir;
  bool no_baseline_in_prompt = false;
  unsigned jobs = default_jobs();
  bool resume = false;
  double temperature = 0.5;
  int max_tokens = 2000;
  unsigned max_in_flight = 4;
};

int cmd_bench(const BenchArgs& args, const EvaluationConfig& cfg) {
  const auto instances = load_corpus(args.corpus_path);
  const auto generator = make_generator(args.generator, !args.no_baseline_in_prompt, args.max_in_flight,
                                        llm::SamplingParams{args.temperature, args.max_tokens});

  fs::create_directories(args.out_dir);
  BenchOptions options;
  options.jobs = args.jobs;
  options.checkpoint = args.out_dir / "outcomes.jsonl";
  options.resume = args.resume;

  MonotonicClock clock;
  auto report = run_benchmark(instances, *generator, cfg, options, clock);

  auto config = nlohmann::json::parse(report.config_json);
  config["corpus"] = fs::absolute(args.corpus_path).string();
  config["generator"] = args.generator;
  config["include_baseline_in_prompt"] = !args.no_baseline_in_prompt;
  config["jobs"] = args.jobs;
  if (args.generator.rfind("llm:", 0) == 0) {
    config["sampling"] = {{"temperature", args.temperature}, {"max_tokens", args.max_tokens}};
  }
  report.config_json = config.dump();

  const auto problems = check_consistency(report);
  for (const auto& p : problems) std::cerr << "inconsistent: " << p << '\n';

  save_report(report, args.out_dir / "report.json");
  const auto table = render_table(std::span(&report, 1));
  write_file(args.out_dir / "report.txt", table);
  std::cout << table;
  return problems.empty() ? 0 : 1;
}

// ---------------------------------------------------------------- report

int cmd_report(const std::vector<fs::path>& paths) {
  std::vector<BenchmarkReport> reports;
  int status = 0;
  for (const auto& p : paths) {
    reports.push_back(load_report(p));
    for (const auto& problem : check_consistency(reports.back())) {
      std::cerr << p.string() << ": inconsistent: " << problem << '\n';
      status = 1;
    }
  }
  std::cout << render_table(reports);
  return status;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Assembly optimization benchmark harness"};
  app.require_subcommand(1);

  CommonFlags common;
  EvalFlags eval;

  BuildCorpusArgs build_args;
  auto* build = app.add_subcommand("build-corpus", "Build a corpus from C sources and test inputs");
  build->add_option("--sources", build_args.sources_dir, "Directory of NAME.c files")->required();
  build->add_option("--tests", build_args.tests_dir, "Directory with one NAME/ folder of input files per source")
      ->required();
  build->add_option("--out", build_args.out_path, "Corpus file to write")->required();
  build->add_option("--split", build_args.split, "Split name for the statistics")->capture_default_str();
  build->add_option("--select-top", build_args.select_top, "Keep the K sources with the largest O0->O3 gain");
  build->add_option("--reference-timeout", build_args.reference_timeout,
                    "Seconds allowed per reference run when regenerating outputs")
      ->capture_default_str();
  build->add_option("--jobs", build_args.jobs, "Parallel instance builds")->capture_default_str();
  common.add_to(build);

  fs::path stats_corpus;
  std::string stats_split = "corpus";
  auto* stats = app.add_subcommand("stats", "Print corpus statistics");
  stats->add_option("--corpus", stats_corpus)->required();
  stats->add_option("--split", stats_split)->capture_default_str();

  fs::path eval_corpus, eval_candidate;
  std::string eval_instance;
  std::optional<fs::path> eval_out;
  auto* evaluate = app.add_subcommand("evaluate", "Evaluate one candidate assembly file");
  evaluate->add_option("--corpus", eval_corpus)->required();
  evaluate->add_option("--candidate", eval_candidate, "Assembly file")->required();
  evaluate->add_option("--instance", eval_instance, "Instance id")->required();
  evaluate->add_option("--out", eval_out, "Directory for outcome.json");
  common.add_to(evaluate);
  eval.add_to(evaluate);

  BenchArgs bench_args;
  auto* bench = app.add_subcommand("bench", "Run a generator over a corpus");
  bench->add_option("--corpus", bench_args.corpus_path)->required();
  bench->add_option("--generator", bench_args.generator, "identity | mutate:SEED,STEPS | llm:BASE_URL,MODEL")
      ->capture_default_str();
  bench->add_option("--out", bench_args.out_dir, "Output directory")->required();
  bench->add_flag("--no-baseline-in-prompt", bench_args.no_baseline_in_prompt,
                  "Prompt with the C source only");
  bench->add_option("--jobs", bench_args.jobs, "Parallel evaluations")->capture_default_str();
  bench->add_flag("--resume", bench_args.resume, "Reuse outcomes already in OUT/outcomes.jsonl");
  bench->add_option("--temperature", bench_args.temperature)->capture_default_str();
  bench->add_option("--max-tokens", bench_args.max_tokens)->capture_default_str();
  bench->add_option("--max-in-flight", bench_args.max_in_flight, "Concurrent model requests")
      ->capture_default_str();
  common.add_to(bench);
  eval.add_to(bench);

  std::vector<fs::path> report_paths;
  auto* report = app.add_subcommand("report", "Re-read reports, verify them and print the table");
  report->add_option("reports", report_paths, "report.json files")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*build) return cmd_build_corpus(build_args, common);
    if (*stats) return cmd_stats(stats_corpus, stats_split);
    if (*evaluate) return cmd_evaluate(eval_corpus, eval_candidate, eval_instance, eval_out, eval.config(common));
    if (*bench) return cmd_bench(bench_args, eval.config(common));
    if (*report) return cmd_report(report_paths);
  } catch (const UnknownInstance& e) {
    std::cerr << "UnknownInstance: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
