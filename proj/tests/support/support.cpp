#include "support.hpp"

#include <sys/wait.h>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

namespace fs = std::filesystem;

namespace asmopt::testing {

fs::path fixtures_dir() { return ASMOPT_FIXTURES_DIR; }
fs::path cli_path() { return ASMOPT_CLI_PATH; }

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

std::vector<SourceEntry> load_sources(const fs::path& dir) {
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir / "src")) {
    if (e.path().extension() == ".c") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<SourceEntry> out;
  for (const auto& f : files) {
    SourceEntry s;
    s.name = f.stem().string();
    s.c_source = read_file(f);
    std::vector<fs::path> inputs;
    for (const auto& e : fs::directory_iterator(dir / "tests" / s.name)) inputs.push_back(e.path());
    std::sort(inputs.begin(), inputs.end());
    for (const auto& in : inputs) s.test_inputs.push_back(read_file(in));
    out.push_back(std::move(s));
  }
  return out;
}

ShellResult shell(const std::string& command, std::string_view input) {
  const auto dir = fresh_dir("sh");
  write_file(dir / "stdin", input);
  const std::string full = command + " < '" + (dir / "stdin").string() + "'";
  ShellResult r;
  FILE* p = ::popen(full.c_str(), "r");
  if (!p) throw std::runtime_error("popen failed");
  char buf[4096];
  std::size_t n;
  while ((n = std::fread(buf, 1, sizeof buf, p)) > 0) r.out.append(buf, n);
  const int st = ::pclose(p);
  r.status = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
  fs::remove_all(dir);
  return r;
}

std::string oracle_normalize(std::string_view bytes) {
  std::vector<std::string> lines;
  std::string cur;
  for (char c : bytes) {
    if (c == '\n') {
      lines.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  lines.push_back(cur);
  for (auto& l : lines) {
    while (!l.empty() && (l.back() == ' ' || l.back() == '\t' || l.back() == '\r')) l.pop_back();
  }
  while (!lines.empty() && lines.back().empty()) lines.pop_back();
  std::string out;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (i) out += '\n';
    out += lines[i];
  }
  return out;
}

TimingProtocol quick_protocol() {
  TimingProtocol p;
  p.warmup_runs = 1;
  p.measured_runs = 2;
  p.run_timeout = Seconds(5.0);
  return p;
}

std::string splice_popcnt(const std::string& baseline_asm) {
  const auto start = baseline_asm.find("\nf:\n");
  const auto end = baseline_asm.find("\t.size\tf, .-f");
  if (start == std::string::npos || end == std::string::npos || end < start) {
    throw std::runtime_error("function f not found in baseline");
  }
  const auto body = start + 4;
  return baseline_asm.substr(0, body) + "\tpopcntq\t%rdi, %rax\n\tret\n" + baseline_asm.substr(end);
}

fs::path fresh_dir(const std::string& tag) {
  static std::mt19937_64 rng(std::random_device{}());
  for (;;) {
    auto p = fs::temp_directory_path() / ("asmopt-test-" + tag + "-" + std::to_string(rng()));
    if (fs::create_directory(p)) return p;
  }
}

}  // namespace asmopt::testing
