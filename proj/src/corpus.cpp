#include "asmopt/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "asmopt/codec.hpp"
#include "asmopt/errors.hpp"

namespace asmopt {

using nlohmann::json;

namespace {

constexpr std::string_view kFormatName = "asmopt-corpus";

std::string describe_failure(const process::Result& r) {
  switch (r.termination) {
    case process::Termination::TimedOut: return "timed out";
    case process::Termination::OutputLimit: return "exceeded the output limit";
    case process::Termination::Signaled: return "killed by signal " + std::to_string(r.signal);
    case process::Termination::Exited: return "exited with status " + std::to_string(r.exit_code);
  }
  return "failed";
}

json instance_to_json(const ProblemInstance& inst) {
  json tests = json::array();
  for (const auto& t : inst.tests) {
    tests.push_back({{"input", codec::base64_encode(t.input)},
                     {"expected_output", codec::base64_encode(t.expected_output)}});
  }
  return {{"record", "instance"},
          {"id", inst.id},
          {"c_source", inst.c_source},
          {"baseline_asm", inst.baseline_asm},
          {"baseline_time", inst.baseline_time},
          {"meta",
           {{"c_loc", inst.meta.c_loc},
            {"asm_loc", inst.meta.asm_loc},
            {"test_count", inst.meta.test_count}}},
          {"tests", std::move(tests)}};
}

ProblemInstance instance_from_json(const json& j) {
  ProblemInstance inst;
  inst.id = j.at("id").get<std::string>();
  inst.c_source = j.at("c_source").get<std::string>();
  inst.baseline_asm = j.at("baseline_asm").get<std::string>();
  inst.baseline_time = j.at("baseline_time").get<double>();
  const auto& meta = j.at("meta");
  inst.meta.c_loc = meta.at("c_loc").get<std::size_t>();
  inst.meta.asm_loc = meta.at("asm_loc").get<std::size_t>();
  inst.meta.test_count = meta.at("test_count").get<std::size_t>();
  for (const auto& t : j.at("tests")) {
    inst.tests.push_back({codec::base64_decode(t.at("input").get<std::string>()),
                          codec::base64_decode(t.at("expected_output").get<std::string>())});
  }
  if (inst.tests.empty()) throw FormatError("instance " + inst.id + " has no tests");
  if (inst.meta.test_count != inst.tests.size()) {
    throw FormatError("instance " + inst.id + ": test_count does not match tests");
  }
  return inst;
}

std::string dump_line(const json& j) {
  try {
    return j.dump();
  } catch (const json::type_error& e) {
    throw FormatError(std::string("corpus text field is not valid UTF-8: ") + e.what());
  }
}

}  // namespace

std::size_t count_loc(std::string_view text) {
  std::size_t count = 0;
  bool has_content = false;
  for (char c : text) {
    if (c == '\n') {
      count += has_content ? 1 : 0;
      has_content = false;
    } else if (!std::isspace(static_cast<unsigned char>(c))) {
      has_content = true;
    }
  }
  return count + (has_content ? 1 : 0);
}

ProblemInstance build_instance(std::string id, std::string_view c_source,
                               std::span<const Bytes> test_inputs, const CorpusBuildConfig& cfg,
                               Clock& clock) {
  if (test_inputs.empty()) throw ConfigError("instance " + id + " has no test inputs");

  ProblemInstance inst;
  inst.id = std::move(id);
  inst.c_source = std::string(c_source);
  inst.baseline_asm = compile_c_to_asm(c_source, OptLevel::O3, cfg.toolchain);

  const auto build = build_candidate(inst.baseline_asm, cfg.toolchain);
  if (!build.ok()) {
    throw CompileError("baseline assembly of " + inst.id + " does not build", build.diagnostics);
  }

  for (std::size_t i = 0; i < test_inputs.size(); ++i) {
    const auto r = execute_sandboxed(*build.binary_path, test_inputs[i], cfg.reference_policy);
    if (!r.ok()) {
      throw ReferenceRuntimeError("reference binary of " + inst.id + " " + describe_failure(r) +
                                  " on test " + std::to_string(i));
    }
    inst.tests.push_back({test_inputs[i], r.out});
  }

  // A program that cannot reproduce its own outputs is unusable as a
  // reference (nondeterminism, dependence on the environment).
  const auto rerun = run_tests(*build.binary_path, inst.tests, cfg.reference_policy);
  for (const auto& r : rerun) {
    if (r.status != TestStatus::Pass) {
      throw ReferenceRuntimeError("reference binary of " + inst.id + " fails its own test " +
                                  std::to_string(r.test_index) + " (" +
                                  std::string(to_string(r.status)) + ")");
    }
  }

  try {
    inst.baseline_time = time_binary(*build.binary_path, inst.tests, cfg.timing, clock).total_seconds;
  } catch (const TimeoutDuringTiming& e) {
    throw ReferenceRuntimeError("reference binary of " + inst.id + ": " + e.what());
  } catch (const TimingRunFailed& e) {
    throw ReferenceRuntimeError("reference binary of " + inst.id + ": " + e.what());
  }

  inst.meta.c_loc = count_loc(inst.c_source);
  inst.meta.asm_loc = count_loc(inst.baseline_asm);
  inst.meta.test_count = inst.tests.size();
  return inst;
}

RankingResult rank_by_opt_gain(std::span<const SourceEntry> sources, const ToolchainConfig& toolchain,
                               const GainTimer& timer) {
  RankingResult result;
  for (std::size_t i = 0; i < sources.size(); ++i) {
    const auto& src = sources[i];
    try {
      double seconds[2] = {0.0, 0.0};
      for (auto level : {OptLevel::O0, OptLevel::O3}) {
        const auto asm_text = compile_c_to_asm(src.c_source, level, toolchain);
        const auto build = build_candidate(asm_text, toolchain);
        if (!build.ok()) {
          throw CompileError(std::string("-") + std::string(to_string(level)) + " build failed",
                             build.diagnostics);
        }
        seconds[level == OptLevel::O3] = timer(src, level, *build.binary_path);
      }
      if (!(seconds[1] > 0.0)) throw ClockError("non-positive -O3 time");
      result.ranked.push_back({i, src.name, seconds[0] / seconds[1]});
    } catch (const Error& e) {
      result.skipped.push_back({src.name, e.what()});
    }
  }
  std::stable_sort(result.ranked.begin(), result.ranked.end(),
                   [](const RankedSource& a, const RankedSource& b) { return a.gain > b.gain; });
  return result;
}

RankingResult rank_by_opt_gain(std::span<const SourceEntry> sources, const ToolchainConfig& toolchain,
                               const TimingProtocol& protocol, Clock& clock) {
  return rank_by_opt_gain(
      sources, toolchain,
      [&](const SourceEntry& src, OptLevel, const std::filesystem::path& binary) {
        std::vector<TestCase> tests;
        for (const auto& in : src.test_inputs) tests.push_back({in, {}});
        return time_binary(binary, tests, protocol, clock).total_seconds;
      });
}

CorpusStats compute_stats(std::span<const ProblemInstance> instances, std::string split_name) {
  if (instances.empty()) throw EmptySplit("split " + split_name + " has no instances");
  CorpusStats stats;
  stats.split_name = std::move(split_name);
  stats.program_count = instances.size();
  double tests = 0, c_loc = 0, asm_loc = 0;
  for (const auto& inst : instances) {
    tests += static_cast<double>(inst.meta.test_count);
    c_loc += static_cast<double>(inst.meta.c_loc);
    asm_loc += static_cast<double>(inst.meta.asm_loc);
  }
  const auto n = static_cast<double>(instances.size());
  stats.avg_tests = tests / n;
  stats.avg_c_loc = c_loc / n;
  stats.avg_asm_loc = asm_loc / n;
  return stats;
}

void save_corpus(std::span<const ProblemInstance> instances, const std::filesystem::path& path,
                 const std::string& toolchain_fingerprint) {
  std::ostringstream body;
  body << dump_line({{"record", "header"},
                     {"format", kFormatName},
                     {"version", kCorpusFormatVersion},
                     {"toolchain", toolchain_fingerprint}})
       << '\n';
  for (const auto& inst : instances) body << dump_line(instance_to_json(inst)) << '\n';
  body << dump_line({{"record", "end"}, {"count", instances.size()}}) << '\n';

  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
    const auto text = body.str();
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out.flush()) throw IoError("write failed: " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot move corpus into place: " + ec.message());
}

std::vector<ProblemInstance> load_corpus(const std::filesystem::path& path, CorpusHeader& header) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open corpus " + path.string());

  std::vector<ProblemInstance> instances;
  std::string line;
  std::size_t line_no = 0;
  bool seen_header = false;
  bool seen_end = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (seen_end) throw FormatError("data after end record at line " + std::to_string(line_no));
    json j;
    try {
      j = json::parse(line);
      const auto kind = j.at("record").get<std::string>();
      if (!seen_header) {
        if (kind != "header" || j.at("format").get<std::string>() != kFormatName) {
          throw FormatError("missing corpus header");
        }
        header.version = j.at("version").get<int>();
        if (header.version != kCorpusFormatVersion) {
          throw FormatError("unsupported corpus version " + std::to_string(header.version));
        }
        header.toolchain_fingerprint = j.at("toolchain").get<std::string>();
        seen_header = true;
      } else if (kind == "instance") {
        instances.push_back(instance_from_json(j));
      } else if (kind == "end") {
        if (j.at("count").get<std::size_t>() != instances.size()) {
          throw FormatError("end record count does not match instances");
        }
        seen_end = true;
      } else {
        throw FormatError("unknown record kind " + kind);
      }
    } catch (const json::exception& e) {
      throw FormatError("corpus line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (!seen_header) throw FormatError("empty corpus file");
  if (!seen_end) throw FormatError("corpus file is truncated (no end record)");
  return instances;
}

std::vector<ProblemInstance> load_corpus(const std::filesystem::path& path) {
  CorpusHeader header;
  return load_corpus(path, header);
}

std::string corpus_fingerprint(std::span<const ProblemInstance> instances) {
  std::string canonical;
  for (const auto& inst : instances) {
    canonical += dump_line(instance_to_json(inst));
    canonical += '\n';
  }
  return codec::sha256_hex(canonical);
}

}  // namespace asmopt
