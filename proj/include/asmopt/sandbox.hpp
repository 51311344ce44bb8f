#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "asmopt/process.hpp"
#include "asmopt/test_case.hpp"

namespace asmopt {

struct ExecPolicy {
  Seconds wall_timeout{10.0};
  std::uint64_t max_memory = std::uint64_t{1} << 30;
  std::uint64_t max_output = std::uint64_t{16} << 20;
  bool kill_on_timeout = true;  // always honoured
  std::filesystem::path scratch_root = process::default_scratch_root();

  void validate() const;  // throws ConfigError
};

enum class TestStatus { Pass, WrongOutput, Crash, Timeout, OutputLimit };

std::string_view to_string(TestStatus status);

struct TestRunResult {
  std::size_t test_index = 0;
  TestStatus status = TestStatus::WrongOutput;
  Bytes actual_output;             // truncated at max_output
  std::optional<int> exit_code;    // absent when killed by a signal or limit
  std::optional<int> term_signal;  // present for Crash
};

/// Strips trailing spaces/tabs/CRs from every line and drops trailing blank
/// lines. Output comparison happens on normalized bytes.
std::string normalize_output(std::string_view bytes);

bool outputs_match(std::string_view actual, std::string_view expected);

/// Runs `binary` on every test in order, each with a fresh scratch working
/// directory, isolated from the network and from the rest of the filesystem.
/// `jobs` > 1 runs tests concurrently; result order is unaffected.
/// Throws SandboxSetupError only.
std::vector<TestRunResult> run_tests(const std::filesystem::path& binary,
                                     std::span<const TestCase> tests, const ExecPolicy& policy,
                                     unsigned jobs = 1);

/// Single execution with the sandbox limits; used when regenerating
/// reference outputs.
process::Result execute_sandboxed(const std::filesystem::path& binary, const Bytes& input,
                                  const ExecPolicy& policy);

/// Fraction of results with status Pass. Throws EmptyResults.
double pass_fraction(std::span<const TestRunResult> results);

}  // namespace asmopt
