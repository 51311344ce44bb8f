#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "asmopt/sandbox.hpp"
#include "asmopt/test_case.hpp"
#include "asmopt/timer.hpp"
#include "asmopt/toolchain.hpp"

namespace asmopt {

struct InstanceMeta {
  std::size_t c_loc = 0;
  std::size_t asm_loc = 0;
  std::size_t test_count = 0;

  bool operator==(const InstanceMeta&) const = default;
};

/// One benchmark problem: the C program, its -O3 assembly (the 1x
/// reference), the test set and the reference's measured runtime.
struct ProblemInstance {
  std::string id;
  std::string c_source;
  std::string baseline_asm;
  std::vector<TestCase> tests;
  double baseline_time = 0.0;  // seconds
  InstanceMeta meta;

  bool operator==(const ProblemInstance&) const = default;
};

struct CorpusStats {
  std::string split_name;
  std::size_t program_count = 0;
  double avg_tests = 0.0;
  double avg_c_loc = 0.0;
  double avg_asm_loc = 0.0;
};

struct CorpusBuildConfig {
  ToolchainConfig toolchain;
  ExecPolicy reference_policy;  // wall_timeout is the per-test regeneration bound
  TimingProtocol timing;
};

/// Lines containing at least one non-whitespace character.
std::size_t count_loc(std::string_view text);

/// Compiles `c_source` at -O3, regenerates every expected output by running
/// the reference binary, checks that the baseline passes its own tests and
/// measures baseline_time. Throws CompileError or ReferenceRuntimeError.
ProblemInstance build_instance(std::string id, std::string_view c_source,
                               std::span<const Bytes> test_inputs, const CorpusBuildConfig& cfg,
                               Clock& clock);

/// A C program with its test inputs, before it becomes an instance.
struct SourceEntry {
  std::string name;
  std::string c_source;
  std::vector<Bytes> test_inputs;
};

struct SkipRecord {
  std::string name;
  std::string reason;
};

struct RankedSource {
  std::size_t index = 0;  // position in the input list
  std::string name;
  double gain = 0.0;  // t(O0) / t(O3)
};

struct RankingResult {
  std::vector<RankedSource> ranked;  // descending gain, stable
  std::vector<SkipRecord> skipped;
};

/// Seconds taken by `binary` (the build of `source` at `level`).
using GainTimer =
    std::function<double(const SourceEntry& source, OptLevel level, const std::filesystem::path& binary)>;

/// Ranks sources by how much -O3 speeds them up over -O0. Sources that fail
/// to build or time at either level are skipped, never fatal.
RankingResult rank_by_opt_gain(std::span<const SourceEntry> sources, const ToolchainConfig& toolchain,
                               const GainTimer& timer);

/// Same, timing each binary with time_binary over the source's inputs.
RankingResult rank_by_opt_gain(std::span<const SourceEntry> sources, const ToolchainConfig& toolchain,
                               const TimingProtocol& protocol, Clock& clock);

/// Throws EmptySplit.
CorpusStats compute_stats(std::span<const ProblemInstance> instances, std::string split_name);

struct CorpusHeader {
  int version = 0;
  std::string toolchain_fingerprint;
};

inline constexpr int kCorpusFormatVersion = 1;

/// Writes the line-delimited corpus file: a header record, one record per
/// instance, and an end record carrying the instance count.
/// Throws IoError, FormatError (text fields that are not valid UTF-8).
void save_corpus(std::span<const ProblemInstance> instances, const std::filesystem::path& path,
                 const std::string& toolchain_fingerprint = {});

/// Throws IoError, FormatError.
std::vector<ProblemInstance> load_corpus(const std::filesystem::path& path);
std::vector<ProblemInstance> load_corpus(const std::filesystem::path& path, CorpusHeader& header);

/// SHA-256 over the canonical serialization of the instances.
std::string corpus_fingerprint(std::span<const ProblemInstance> instances);

}  // namespace asmopt
