#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "asmopt/process.hpp"

namespace asmopt {

enum class OptLevel { O0, O3 };

std::string_view to_string(OptLevel level);

struct ToolchainConfig {
  std::filesystem::path compiler_path = "gcc";
  std::vector<std::string> baseline_flags{"-O3"};
  std::vector<std::string> unopt_flags{"-O0"};
  std::vector<std::string> link_flags{"-lm"};
  Seconds compile_timeout{30.0};
  bool keep_artifacts = false;
  std::filesystem::path scratch_root = process::default_scratch_root();

  /// Checks the invariants and resolves compiler_path against PATH.
  /// Throws ConfigError.
  ToolchainConfig resolved() const;

  const std::vector<std::string>& flags_for(OptLevel level) const {
    return level == OptLevel::O3 ? baseline_flags : unopt_flags;
  }

  /// First line of `<compiler> --version` followed by all flag sets.
  std::string fingerprint() const;
};

enum class BuildStatus { Ok, CompileFail, LinkFail, Timeout };

std::string_view to_string(BuildStatus status);

struct BuildResult {
  BuildStatus status = BuildStatus::CompileFail;
  std::optional<std::filesystem::path> binary_path;
  std::string diagnostics;
  // Keeps the build directory (and the binary in it) alive.
  std::shared_ptr<process::ScratchDir> scratch;

  bool ok() const { return status == BuildStatus::Ok; }
};

/// Textual assembly of `c_source` at `level`. Throws CompileError.
std::string compile_c_to_asm(std::string_view c_source, OptLevel level, const ToolchainConfig& cfg);

/// Assembles and links arbitrary text. Malformed input is reported through
/// the status, never thrown; only a failure to run the compiler at all
/// raises SandboxSetupError.
BuildResult build_candidate(std::string_view asm_text, const ToolchainConfig& cfg);

}  // namespace asmopt
