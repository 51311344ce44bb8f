#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <mutex>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "asmopt/process.hpp"
#include "asmopt/test_case.hpp"

namespace asmopt {

/// Warmup-and-repeat measurement: per input, `warmup_runs` discarded runs
/// followed by `measured_runs` timed runs whose arithmetic mean is kept.
struct TimingProtocol {
  unsigned warmup_runs = 3;
  unsigned measured_runs = 10;
  Seconds run_timeout{10.0};
  std::optional<int> pin_cpu;
  std::filesystem::path scratch_root = process::default_scratch_root();

  void validate() const;  // throws ConfigError
};

struct InputMean {
  std::size_t test_index = 0;
  double mean_seconds = 0.0;
};

struct TimingResult {
  std::vector<InputMean> per_input_means;
  double total_seconds = 0.0;  // t(.) of the program: sum of per-input means
  std::vector<std::vector<double>> raw_samples;  // measured samples per input
};

/// Time source for a single run. The production clock reads a monotonic
/// clock around `body`; tests substitute scripted samples.
class Clock {
 public:
  virtual ~Clock() = default;
  virtual double elapsed_seconds(const std::function<void()>& body) = 0;
};

class MonotonicClock final : public Clock {
 public:
  double elapsed_seconds(const std::function<void()>& body) override;
};

/// Replays a fixed list of samples, one per run, and counts calls. Running
/// past the end of the script raises ClockError.
class ScriptedClock final : public Clock {
 public:
  explicit ScriptedClock(std::vector<double> samples, bool run_body = true)
      : samples_(std::move(samples)), run_body_(run_body) {}

  double elapsed_seconds(const std::function<void()>& body) override;
  std::size_t calls() const { return calls_; }

 private:
  std::vector<double> samples_;
  bool run_body_;
  std::size_t calls_ = 0;
};

/// The global measurement lock: at most one timed execution is in flight.
std::mutex& measurement_lock();

/// Measures t(binary) over the test inputs. The caller guarantees the binary
/// is correct on these tests. Throws TimeoutDuringTiming, TimingRunFailed,
/// ClockError.
TimingResult time_binary(const std::filesystem::path& binary, std::span<const TestCase> tests,
                         const TimingProtocol& protocol, Clock& clock);

/// Times two binaries with their runs interleaved (A, B, A, B, ...) per
/// input, so slow drift in machine state affects both equally. Each side
/// still gets exactly warmup_runs + measured_runs executions per input.
std::pair<TimingResult, TimingResult> time_pair(const std::filesystem::path& first,
                                                const std::filesystem::path& second,
                                                std::span<const TestCase> tests,
                                                const TimingProtocol& protocol, Clock& clock);

/// Arithmetic of a timing result from raw samples: means and their sum.
TimingResult fold_samples(std::vector<std::vector<double>> samples);

/// Clamped evaluation speedup: baseline/candidate when the candidate is
/// correct and strictly faster, otherwise 1.
double speedup_metric(double baseline_seconds, double candidate_seconds, bool correct);
double speedup_metric(const TimingResult& baseline, const TimingResult& candidate, bool correct);

}  // namespace asmopt
