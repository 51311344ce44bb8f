#include "asmopt/sandbox.hpp"

#include <algorithm>
#include <atomic>
#include <mutex>
#include <thread>

#include "asmopt/errors.hpp"

namespace asmopt {

void ExecPolicy::validate() const {
  if (wall_timeout.count() <= 0) throw ConfigError("wall timeout must be positive");
  if (max_memory == 0) throw ConfigError("memory limit must be positive");
  if (!kill_on_timeout) throw ConfigError("kill_on_timeout cannot be disabled");
}

std::string_view to_string(TestStatus status) {
  switch (status) {
    case TestStatus::Pass: return "Pass";
    case TestStatus::WrongOutput: return "WrongOutput";
    case TestStatus::Crash: return "Crash";
    case TestStatus::Timeout: return "Timeout";
    case TestStatus::OutputLimit: return "OutputLimit";
  }
  return "?";
}

std::string normalize_output(std::string_view bytes) {
  std::string out;
  out.reserve(bytes.size());
  std::size_t pos = 0;
  while (pos <= bytes.size()) {
    auto nl = bytes.find('\n', pos);
    const bool last = nl == std::string_view::npos;
    if (last) nl = bytes.size();
    auto line = bytes.substr(pos, nl - pos);
    while (!line.empty() && (line.back() == ' ' || line.back() == '\t' || line.back() == '\r')) {
      line.remove_suffix(1);
    }
    out += line;
    if (last) break;
    out += '\n';
    pos = nl + 1;
  }
  while (!out.empty() && out.back() == '\n') out.pop_back();
  return out;
}

bool outputs_match(std::string_view actual, std::string_view expected) {
  return normalize_output(actual) == normalize_output(expected);
}

process::Result execute_sandboxed(const std::filesystem::path& binary, const Bytes& input,
                                  const ExecPolicy& policy) {
  process::ScratchDir scratch(policy.scratch_root, "exec");
  process::Command cmd;
  cmd.argv = {std::filesystem::absolute(binary).string()};
  cmd.cwd = scratch.path();
  cmd.stdin_data = input;

  process::Limits limits;
  limits.wall_timeout = policy.wall_timeout;
  limits.max_memory = policy.max_memory;
  limits.max_output = policy.max_output;
  limits.max_stderr = 64 << 10;
  limits.isolate = true;
  limits.clean_env = true;
  limits.writable_dir = scratch.path();
  return process::run(cmd, limits);
}

namespace {

TestRunResult judge(std::size_t index, process::Result r, const TestCase& test) {
  TestRunResult out;
  out.test_index = index;
  out.actual_output = std::move(r.out);
  switch (r.termination) {
    case process::Termination::TimedOut:
      out.status = TestStatus::Timeout;
      break;
    case process::Termination::OutputLimit:
      out.status = TestStatus::OutputLimit;
      break;
    case process::Termination::Signaled:
      out.status = TestStatus::Crash;
      out.term_signal = r.signal;
      break;
    case process::Termination::Exited:
      out.exit_code = r.exit_code;
      out.status = (r.exit_code == 0 && outputs_match(out.actual_output, test.expected_output))
                       ? TestStatus::Pass
                       : TestStatus::WrongOutput;
      break;
  }
  return out;
}

}  // namespace

std::vector<TestRunResult> run_tests(const std::filesystem::path& binary,
                                     std::span<const TestCase> tests, const ExecPolicy& policy,
                                     unsigned jobs) {
  policy.validate();
  std::vector<TestRunResult> results(tests.size());
  auto run_one = [&](std::size_t i) {
    results[i] = judge(i, execute_sandboxed(binary, tests[i].input, policy), tests[i]);
  };

  jobs = std::clamp<unsigned>(jobs, 1, static_cast<unsigned>(std::max<std::size_t>(tests.size(), 1)));
  if (jobs == 1) {
    for (std::size_t i = 0; i < tests.size(); ++i) run_one(i);
    return results;
  }

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  {
    std::vector<std::jthread> workers;
    for (unsigned w = 0; w < jobs; ++w) {
      workers.emplace_back([&] {
        for (std::size_t i = next++; i < tests.size(); i = next++) {
          try {
            run_one(i);
          } catch (...) {
            std::lock_guard lock(failure_mu);
            if (!failure) failure = std::current_exception();
          }
        }
      });
    }
  }
  if (failure) std::rethrow_exception(failure);
  return results;
}

double pass_fraction(std::span<const TestRunResult> results) {
  if (results.empty()) throw EmptyResults("pass fraction of an empty result list");
  const auto passed = std::count_if(results.begin(), results.end(),
                                    [](const TestRunResult& r) { return r.status == TestStatus::Pass; });
  return static_cast<double>(passed) / static_cast<double>(results.size());
}

}  // namespace asmopt
