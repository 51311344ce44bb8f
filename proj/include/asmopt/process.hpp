#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace asmopt {

using Seconds = std::chrono::duration<double>;

namespace process {

/// Resource and isolation settings for one child process.
///
/// `isolate` installs a seccomp filter that denies process creation,
/// sockets, ptrace and signals aimed at anything but the child itself, and
/// (when the kernel supports Landlock) confines filesystem writes to
/// `writable_dir`. It is meant for untrusted programs; compilers need it off.
struct Limits {
  std::optional<Seconds> wall_timeout;
  std::optional<std::uint64_t> max_memory;  // RLIMIT_AS, bytes
  std::optional<std::uint64_t> max_output;  // captured stdout, bytes
  std::optional<std::uint64_t> max_file_size = std::uint64_t{64} << 20;
  std::size_t max_stderr = 1 << 20;
  bool isolate = false;
  bool clean_env = false;
  std::optional<std::filesystem::path> writable_dir;
  std::optional<int> pin_cpu;
};

enum class StdoutMode { Capture, Discard };

struct Command {
  std::vector<std::string> argv;  // argv[0] must be an absolute path
  std::filesystem::path cwd;
  std::string stdin_data;
  std::optional<std::filesystem::path> stdin_file;  // overrides stdin_data
  StdoutMode stdout_mode = StdoutMode::Capture;
};

enum class Termination { Exited, Signaled, TimedOut, OutputLimit };

struct Result {
  Termination termination = Termination::Exited;
  int exit_code = 0;  // valid when termination == Exited
  int signal = 0;     // valid when termination == Signaled
  std::string out;
  std::string err;
  double wall_seconds = 0.0;

  bool ok() const { return termination == Termination::Exited && exit_code == 0; }
};

/// Runs `cmd` to completion under `limits`. The child is placed in its own
/// process group, and the whole group is killed once the child exits, times
/// out or exceeds its output budget. Throws SandboxSetupError if the process
/// cannot be started.
Result run(const Command& cmd, const Limits& limits);

/// Resolves a program name against PATH; absolute paths are returned as is.
/// Throws ConfigError when nothing executable is found.
std::filesystem::path find_executable(const std::filesystem::path& name);

/// Owns a fresh directory under `root`; removes it on destruction unless
/// released with keep().
class ScratchDir {
 public:
  explicit ScratchDir(const std::filesystem::path& root, const std::string& prefix = "run");
  ScratchDir(const ScratchDir&) = delete;
  ScratchDir& operator=(const ScratchDir&) = delete;
  ScratchDir(ScratchDir&& other) noexcept;
  ScratchDir& operator=(ScratchDir&& other) noexcept;
  ~ScratchDir();

  const std::filesystem::path& path() const { return path_; }
  void keep() { keep_ = true; }

 private:
  void remove() noexcept;

  std::filesystem::path path_;
  bool keep_ = false;
};

std::filesystem::path default_scratch_root();

}  // namespace process
}  // namespace asmopt
