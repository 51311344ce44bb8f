#include "asmopt/toolchain.hpp"

#include <fstream>
#include <mutex>
#include <unordered_map>

#include "asmopt/errors.hpp"

namespace asmopt {
namespace {

void write_file(const std::filesystem::path& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary);
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw SandboxSetupError("cannot write " + path.string());
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SandboxSetupError("cannot read " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

process::Result run_compiler(const ToolchainConfig& cfg, std::vector<std::string> args,
                             const std::filesystem::path& cwd) {
  process::Command cmd;
  cmd.argv.reserve(args.size() + 1);
  cmd.argv.push_back(process::find_executable(cfg.compiler_path).string());
  for (auto& a : args) cmd.argv.push_back(std::move(a));
  cmd.cwd = cwd;
  process::Limits limits;
  limits.wall_timeout = cfg.compile_timeout;
  limits.max_output = 1 << 20;
  return process::run(cmd, limits);
}

std::string join_flags(const std::vector<std::string>& flags) {
  std::string out;
  for (const auto& f : flags) {
    if (!out.empty()) out += ' ';
    out += f;
  }
  return out;
}

std::string strip_level(const std::vector<std::string>& flags) {
  std::string out;
  for (const auto& f : flags) {
    if (f.rfind("-O", 0) == 0) continue;
    out += f;
    out += '\x1f';
  }
  return out;
}

}  // namespace

std::string_view to_string(OptLevel level) { return level == OptLevel::O3 ? "O3" : "O0"; }

std::string_view to_string(BuildStatus status) {
  switch (status) {
    case BuildStatus::Ok: return "Ok";
    case BuildStatus::CompileFail: return "CompileFail";
    case BuildStatus::LinkFail: return "LinkFail";
    case BuildStatus::Timeout: return "Timeout";
  }
  return "?";
}

ToolchainConfig ToolchainConfig::resolved() const {
  ToolchainConfig out = *this;
  out.compiler_path = process::find_executable(compiler_path);
  if (strip_level(baseline_flags) != strip_level(unopt_flags)) {
    throw ConfigError("baseline and unoptimized flags must differ only in optimization level");
  }
  if (compile_timeout.count() <= 0) throw ConfigError("compile timeout must be positive");
  return out;
}

std::string ToolchainConfig::fingerprint() const {
  static std::mutex mu;
  static std::unordered_map<std::string, std::string> cache;
  const auto exe = process::find_executable(compiler_path).string();
  std::string version;
  {
    std::lock_guard lock(mu);
    if (auto it = cache.find(exe); it != cache.end()) version = it->second;
  }
  if (version.empty()) {
    process::Command cmd;
    cmd.argv = {exe, "--version"};
    process::Limits limits;
    limits.wall_timeout = compile_timeout;
    const auto r = process::run(cmd, limits);
    version = r.out.substr(0, r.out.find('\n'));
    if (version.empty()) version = exe;
    std::lock_guard lock(mu);
    cache[exe] = version;
  }
  return version + " | O3: " + join_flags(baseline_flags) + " | O0: " + join_flags(unopt_flags) +
         " | link: " + join_flags(link_flags);
}

std::string compile_c_to_asm(std::string_view c_source, OptLevel level, const ToolchainConfig& cfg) {
  process::ScratchDir scratch(cfg.scratch_root, "cc");
  if (cfg.keep_artifacts) scratch.keep();
  write_file(scratch.path() / "prog.c", c_source);

  std::vector<std::string> args = cfg.flags_for(level);
  args.insert(args.end(), {"-S", "prog.c", "-o", "prog.s"});
  const auto r = run_compiler(cfg, std::move(args), scratch.path());
  if (r.termination == process::Termination::TimedOut) {
    throw CompileError("compiler timed out", r.err);
  }
  if (!r.ok()) throw CompileError("C source rejected by compiler", r.err);
  return read_file(scratch.path() / "prog.s");
}

BuildResult build_candidate(std::string_view asm_text, const ToolchainConfig& cfg) {
  BuildResult result;
  result.scratch = std::make_shared<process::ScratchDir>(cfg.scratch_root, "build");
  if (cfg.keep_artifacts) result.scratch->keep();
  const auto& dir = result.scratch->path();
  write_file(dir / "cand.s", asm_text);

  auto assembled = run_compiler(cfg, {"-c", "cand.s", "-o", "cand.o"}, dir);
  result.diagnostics = std::move(assembled.err);
  if (assembled.termination == process::Termination::TimedOut) {
    result.status = BuildStatus::Timeout;
    return result;
  }
  if (!assembled.ok()) {
    result.status = BuildStatus::CompileFail;
    return result;
  }

  std::vector<std::string> link_args{"cand.o", "-o", "cand"};
  link_args.insert(link_args.end(), cfg.link_flags.begin(), cfg.link_flags.end());
  auto linked = run_compiler(cfg, std::move(link_args), dir);
  result.diagnostics += linked.err;
  if (linked.termination == process::Termination::TimedOut) {
    result.status = BuildStatus::Timeout;
    return result;
  }
  if (!linked.ok()) {
    result.status = BuildStatus::LinkFail;
    return result;
  }
  result.status = BuildStatus::Ok;
  result.binary_path = dir / "cand";
  return result;
}

}  // namespace asmopt
