#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "asmopt/corpus.hpp"
#include "asmopt/timer.hpp"

namespace asmopt::testing {

std::filesystem::path fixtures_dir();
std::filesystem::path cli_path();

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view bytes);

// src/NAME.c with inputs under tests/NAME/, both sorted by name.
std::vector<SourceEntry> load_sources(const std::filesystem::path& dir);

// Independent of the library: runs `command` through /bin/sh with `input`
// on stdin and returns stdout plus the exit status.
struct ShellResult {
  std::string out;
  int status = -1;
};
ShellResult shell(const std::string& command, std::string_view input = {});

// Reference semantics of output comparison, written out separately.
std::string oracle_normalize(std::string_view bytes);

// Short protocol for tests that only need the mechanics, not the numbers.
TimingProtocol quick_protocol();

// Replaces the body of f with popcnt + ret.
std::string splice_popcnt(const std::string& baseline_asm);

// Unique empty directory under the system temp dir, removed by the caller.
std::filesystem::path fresh_dir(const std::string& tag);

}  // namespace asmopt::testing
