#include "asmopt/report.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "asmopt/errors.hpp"

namespace asmopt {

using nlohmann::json;

namespace {

constexpr std::string_view kReportFormat = "asmopt-report";
constexpr int kReportVersion = 1;

template <typename T>
json optional_to_json(const std::optional<T>& v) {
  return v ? json(*v) : json(nullptr);
}

template <typename T>
std::optional<T> optional_from_json(const json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<T>();
}

TestStatus parse_test_status(const std::string& s) {
  for (auto st : {TestStatus::Pass, TestStatus::WrongOutput, TestStatus::Crash, TestStatus::Timeout,
                  TestStatus::OutputLimit}) {
    if (to_string(st) == s) return st;
  }
  throw FormatError("unknown test status: " + s);
}

std::string fmt(const char* format, double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, format, value);
  return buf;
}

std::string pad(std::string s, std::size_t width) {
  if (s.size() < width) s.insert(0, width - s.size(), ' ');
  return s;
}

}  // namespace

json outcome_to_json(const EvaluationOutcome& o) {
  json statuses = json::array();
  for (auto s : o.test_statuses) statuses.push_back(to_string(s));
  return {{"instance_id", o.instance_id},
          {"generator_id", o.generator_id},
          {"compiled", o.compiled},
          {"build_status", o.build_status},
          {"pass_frac", o.pass_frac},
          {"all_pass", o.all_pass},
          {"baseline_seconds", o.baseline_seconds},
          {"candidate_seconds", optional_to_json(o.candidate_seconds)},
          {"speedup_clamped", o.speedup_clamped},
          {"ratio_unclamped", optional_to_json(o.ratio_unclamped)},
          {"reward_cgs", o.reward_cgs},
          {"reward_so", o.reward_so},
          {"failure_stage", o.failure_stage ? json(to_string(*o.failure_stage)) : json(nullptr)},
          {"noise_suspect", o.noise_suspect},
          {"test_statuses", std::move(statuses)},
          {"detail", o.detail}};
}

EvaluationOutcome outcome_from_json(const json& j) {
  try {
    EvaluationOutcome o;
    o.instance_id = j.at("instance_id").get<std::string>();
    o.generator_id = j.at("generator_id").get<std::string>();
    o.compiled = j.at("compiled").get<bool>();
    o.build_status = j.at("build_status").get<std::string>();
    o.pass_frac = j.at("pass_frac").get<double>();
    o.all_pass = j.at("all_pass").get<bool>();
    o.baseline_seconds = j.at("baseline_seconds").get<double>();
    o.candidate_seconds = optional_from_json<double>(j.at("candidate_seconds"));
    o.speedup_clamped = j.at("speedup_clamped").get<double>();
    o.ratio_unclamped = optional_from_json<double>(j.at("ratio_unclamped"));
    o.reward_cgs = j.at("reward_cgs").get<double>();
    o.reward_so = j.at("reward_so").get<double>();
    if (const auto& fs = j.at("failure_stage"); !fs.is_null()) {
      o.failure_stage = parse_failure_stage(fs.get<std::string>());
    }
    o.noise_suspect = j.at("noise_suspect").get<bool>();
    for (const auto& s : j.at("test_statuses")) o.test_statuses.push_back(parse_test_status(s.get<std::string>()));
    o.detail = j.at("detail").get<std::string>();
    return o;
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed outcome record: ") + e.what());
  }
}

json report_to_json(const BenchmarkReport& r) {
  json per = json::array();
  for (const auto& o : r.per_instance) per.push_back(outcome_to_json(o));
  json config = r.config_json.empty() ? json::object() : json::parse(r.config_json);
  return {{"format", kReportFormat},
          {"version", kReportVersion},
          {"generator_id", r.generator_id},
          {"corpus_fingerprint", r.corpus_fingerprint},
          {"toolchain_fingerprint", r.toolchain_fingerprint},
          {"n_instances", r.n_instances},
          {"compile_pass", r.compile_pass},
          {"test_pass", r.test_pass},
          {"speedup_p25", r.speedup_p25},
          {"speedup_p50", r.speedup_p50},
          {"speedup_p75", r.speedup_p75},
          {"avg_speedup", r.avg_speedup},
          {"percentile_method", r.percentile_method},
          {"config", std::move(config)},
          {"per_instance", std::move(per)}};
}

BenchmarkReport report_from_json(const json& j) {
  try {
    if (j.at("format").get<std::string>() != kReportFormat) throw FormatError("not a benchmark report");
    if (j.at("version").get<int>() != kReportVersion) throw FormatError("unsupported report version");
    BenchmarkReport r;
    r.generator_id = j.at("generator_id").get<std::string>();
    r.corpus_fingerprint = j.at("corpus_fingerprint").get<std::string>();
    r.toolchain_fingerprint = j.at("toolchain_fingerprint").get<std::string>();
    r.n_instances = j.at("n_instances").get<std::size_t>();
    r.compile_pass = j.at("compile_pass").get<double>();
    r.test_pass = j.at("test_pass").get<double>();
    r.speedup_p25 = j.at("speedup_p25").get<double>();
    r.speedup_p50 = j.at("speedup_p50").get<double>();
    r.speedup_p75 = j.at("speedup_p75").get<double>();
    r.avg_speedup = j.at("avg_speedup").get<double>();
    r.percentile_method = j.at("percentile_method").get<std::string>();
    r.config_json = j.at("config").dump();
    for (const auto& o : j.at("per_instance")) r.per_instance.push_back(outcome_from_json(o));
    return r;
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed report: ") + e.what());
  }
}

void save_report(const BenchmarkReport& report, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << report_to_json(report).dump(2) << '\n';
  if (!out.flush()) throw IoError("write failed: " + path.string());
}

BenchmarkReport load_report(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open report " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw FormatError(std::string("report is not JSON: ") + e.what());
  }
  return report_from_json(j);
}

std::string render_table(std::span<const BenchmarkReport> reports) {
  std::size_t name_width = 9;
  for (const auto& r : reports) name_width = std::max(name_width, r.generator_id.size());
  std::ostringstream out;
  out << std::string(name_width, ' ') << "  " << pad("Compile", 8) << "  " << pad("Test", 6) << "  "
      << pad("Speedup Percentiles", 26) << "  " << pad("Average", 8) << '\n';
  out << pad("Generator", name_width) << "  " << pad("Pass", 8) << "  " << pad("Pass", 6) << "  "
      << pad("25th", 8) << ' ' << pad("50th", 8) << ' ' << pad("75th", 8) << "  " << pad("Speedup", 8)
      << '\n';
  out << std::string(name_width + 58, '-') << '\n';
  for (const auto& r : reports) {
    std::string name = r.generator_id;
    name.resize(name_width, ' ');
    out << name << "  " << pad(fmt("%.1f%%", r.compile_pass), 8) << "  " << pad(fmt("%.1f%%", r.test_pass), 6)
        << "  " << pad(fmt("%.2fx", r.speedup_p25), 8) << ' ' << pad(fmt("%.2fx", r.speedup_p50), 8) << ' '
        << pad(fmt("%.2fx", r.speedup_p75), 8) << "  " << pad(fmt("%.2fx", r.avg_speedup), 8) << '\n';
  }
  for (const auto& r : reports) {
    out << "# " << r.generator_id << ": n=" << r.n_instances << " corpus=" << r.corpus_fingerprint.substr(0, 16)
        << " percentiles=" << r.percentile_method << '\n'
        << "# toolchain: " << r.toolchain_fingerprint << '\n';
    if (!r.config_json.empty()) out << "# config: " << r.config_json << '\n';
  }
  return out.str();
}

std::string render_outcome(const EvaluationOutcome& o) {
  std::ostringstream out;
  out << "instance:        " << o.instance_id << '\n'
      << "generator:       " << o.generator_id << '\n'
      << "build:           " << o.build_status << '\n'
      << "pass fraction:   " << fmt("%.4f", o.pass_frac) << " (" << o.test_statuses.size() << " tests)\n"
      << "baseline time:   " << fmt("%.6f s", o.baseline_seconds) << '\n';
  if (o.candidate_seconds) out << "candidate time:  " << fmt("%.6f s", *o.candidate_seconds) << '\n';
  if (o.ratio_unclamped) out << "ratio:           " << fmt("%.4f", *o.ratio_unclamped) << '\n';
  out << "speedup:         " << fmt("%.4fx", o.speedup_clamped) << (o.noise_suspect ? " (within noise band)" : "")
      << '\n'
      << "reward CGS:      " << fmt("%.4f", o.reward_cgs) << '\n'
      << "reward SO:       " << fmt("%.4f", o.reward_so) << '\n';
  if (o.failure_stage) out << "failure stage:   " << to_string(*o.failure_stage) << '\n';
  if (!o.test_statuses.empty()) {
    out << "tests:          ";
    for (auto s : o.test_statuses) out << ' ' << to_string(s);
    out << '\n';
  }
  if (!o.detail.empty()) out << "detail:\n" << o.detail << (o.detail.back() == '\n' ? "" : "\n");
  return out.str();
}

std::string render_stats(std::span<const CorpusStats> stats) {
  std::ostringstream out;
  out << pad("Split", 12) << "  " << pad("# Prog.", 8) << "  " << pad("Avg. Tests", 10) << "  "
      << pad("Avg. LOC C", 10) << "  " << pad("Avg. LOC Asm", 12) << '\n';
  for (const auto& s : stats) {
    out << pad(s.split_name, 12) << "  " << pad(std::to_string(s.program_count), 8) << "  "
        << pad(fmt("%.2f", s.avg_tests), 10) << "  " << pad(fmt("%.1f", s.avg_c_loc), 10) << "  "
        << pad(fmt("%.1f", s.avg_asm_loc), 12) << '\n';
  }
  return out.str();
}

}  // namespace asmopt
