#include "asmopt/timer.hpp"

#include <chrono>
#include <fstream>
#include <numeric>

#include "asmopt/errors.hpp"

namespace asmopt {

void TimingProtocol::validate() const {
  if (measured_runs < 1) throw ConfigError("timing protocol needs at least one measured run");
  if (run_timeout.count() <= 0) throw ConfigError("timing run timeout must be positive");
}

double MonotonicClock::elapsed_seconds(const std::function<void()>& body) {
  const auto start = std::chrono::steady_clock::now();
  body();
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

double ScriptedClock::elapsed_seconds(const std::function<void()>& body) {
  if (calls_ >= samples_.size()) throw ClockError("scripted clock exhausted");
  if (run_body_) body();
  return samples_[calls_++];
}

std::mutex& measurement_lock() {
  static std::mutex mu;
  return mu;
}

namespace {

// Executes one timed run of a binary on a prepared stdin file.
class TimedRunner {
 public:
  TimedRunner(const std::filesystem::path& binary, const TimingProtocol& protocol,
              const process::ScratchDir& scratch) {
    cmd_.argv = {std::filesystem::absolute(binary).string()};
    cmd_.cwd = scratch.path();
    cmd_.stdout_mode = process::StdoutMode::Discard;
    limits_.wall_timeout = protocol.run_timeout;
    limits_.max_memory = std::uint64_t{1} << 30;
    limits_.max_stderr = 4096;
    limits_.isolate = true;
    limits_.clean_env = true;
    limits_.writable_dir = scratch.path();
    limits_.pin_cpu = protocol.pin_cpu;
  }

  double run(Clock& clock, const std::filesystem::path& input_file, std::size_t test_index) {
    cmd_.stdin_file = input_file;
    process::Result result;
    const double seconds = clock.elapsed_seconds([&] { result = process::run(cmd_, limits_); });
    if (result.termination == process::Termination::TimedOut) {
      throw TimeoutDuringTiming("timed run exceeded " + std::to_string(limits_.wall_timeout->count()) +
                                    " s on test " + std::to_string(test_index),
                                test_index, cmd_.argv[0]);
    }
    if (!result.ok()) {
      throw TimingRunFailed("timed run failed on test " + std::to_string(test_index), test_index,
                            cmd_.argv[0]);
    }
    return seconds;
  }

 private:
  process::Command cmd_;
  process::Limits limits_;
};

std::vector<std::filesystem::path> write_inputs(std::span<const TestCase> tests,
                                                const process::ScratchDir& dir) {
  std::vector<std::filesystem::path> files;
  files.reserve(tests.size());
  for (std::size_t i = 0; i < tests.size(); ++i) {
    auto path = dir.path() / ("input-" + std::to_string(i));
    std::ofstream out(path, std::ios::binary);
    out.write(tests[i].input.data(), static_cast<std::streamsize>(tests[i].input.size()));
    if (!out) throw SandboxSetupError("cannot write " + path.string());
    files.push_back(std::move(path));
  }
  return files;
}

}  // namespace

TimingResult fold_samples(std::vector<std::vector<double>> samples) {
  TimingResult result;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& s = samples[i];
    if (s.empty()) throw ClockError("no measured samples for input " + std::to_string(i));
    const double mean = std::accumulate(s.begin(), s.end(), 0.0) / static_cast<double>(s.size());
    result.per_input_means.push_back({i, mean});
    result.total_seconds += mean;
  }
  if (!(result.total_seconds > 0.0)) throw ClockError("non-positive total execution time");
  result.raw_samples = std::move(samples);
  return result;
}

TimingResult time_binary(const std::filesystem::path& binary, std::span<const TestCase> tests,
                         const TimingProtocol& protocol, Clock& clock) {
  protocol.validate();
  process::ScratchDir scratch(protocol.scratch_root, "time");
  const auto inputs = write_inputs(tests, scratch);
  TimedRunner runner(binary, protocol, scratch);

  std::lock_guard lock(measurement_lock());
  std::vector<std::vector<double>> samples(tests.size());
  for (std::size_t i = 0; i < tests.size(); ++i) {
    for (unsigned w = 0; w < protocol.warmup_runs; ++w) runner.run(clock, inputs[i], i);
    samples[i].reserve(protocol.measured_runs);
    for (unsigned m = 0; m < protocol.measured_runs; ++m) {
      samples[i].push_back(runner.run(clock, inputs[i], i));
    }
  }
  return fold_samples(std::move(samples));
}

std::pair<TimingResult, TimingResult> time_pair(const std::filesystem::path& first,
                                                const std::filesystem::path& second,
                                                std::span<const TestCase> tests,
                                                const TimingProtocol& protocol, Clock& clock) {
  protocol.validate();
  process::ScratchDir scratch(protocol.scratch_root, "time");
  const auto inputs = write_inputs(tests, scratch);
  TimedRunner run_a(first, protocol, scratch);
  TimedRunner run_b(second, protocol, scratch);

  std::lock_guard lock(measurement_lock());
  std::vector<std::vector<double>> a(tests.size()), b(tests.size());
  for (std::size_t i = 0; i < tests.size(); ++i) {
    for (unsigned w = 0; w < protocol.warmup_runs; ++w) {
      run_a.run(clock, inputs[i], i);
      run_b.run(clock, inputs[i], i);
    }
    for (unsigned m = 0; m < protocol.measured_runs; ++m) {
      // Alternate which side goes first so neither always follows the other.
      if (m % 2 == 0) {
        a[i].push_back(run_a.run(clock, inputs[i], i));
        b[i].push_back(run_b.run(clock, inputs[i], i));
      } else {
        b[i].push_back(run_b.run(clock, inputs[i], i));
        a[i].push_back(run_a.run(clock, inputs[i], i));
      }
    }
  }
  return {fold_samples(std::move(a)), fold_samples(std::move(b))};
}

double speedup_metric(double baseline_seconds, double candidate_seconds, bool correct) {
  if (correct && candidate_seconds < baseline_seconds) return baseline_seconds / candidate_seconds;
  return 1.0;
}

double speedup_metric(const TimingResult& baseline, const TimingResult& candidate, bool correct) {
  return speedup_metric(baseline.total_seconds, candidate.total_seconds, correct);
}

}  // namespace asmopt
