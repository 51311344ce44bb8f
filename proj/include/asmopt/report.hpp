#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "asmopt/bench.hpp"
#include "asmopt/corpus.hpp"

namespace asmopt {

nlohmann::json outcome_to_json(const EvaluationOutcome& outcome);
EvaluationOutcome outcome_from_json(const nlohmann::json& j);  // throws FormatError

nlohmann::json report_to_json(const BenchmarkReport& report);
BenchmarkReport report_from_json(const nlohmann::json& j);  // throws FormatError

void save_report(const BenchmarkReport& report, const std::filesystem::path& path);
BenchmarkReport load_report(const std::filesystem::path& path);  // throws IoError, FormatError

/// Fixed-width table with one row per report, columns as in the usual
/// model-comparison layout: compile pass, test pass, speedup p25/p50/p75,
/// average speedup.
std::string render_table(std::span<const BenchmarkReport> reports);

/// Human-readable block for a single evaluation.
std::string render_outcome(const EvaluationOutcome& outcome);

/// Program count, average tests and LOC in the dataset-statistics layout.
std::string render_stats(std::span<const CorpusStats> stats);

}  // namespace asmopt
