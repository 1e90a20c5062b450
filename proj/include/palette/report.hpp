#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "palette/postprocess.hpp"

namespace palette {

enum class ReportFormat { Text, Csv };

// Human-readable summary: probability table with standard errors, 2-dp
// probabilities, Bayes-factor matrix and pairs, transition matrix and
// diagnostics. Output is deterministic for a given report.
std::string render_text_report(const PosteriorReport& report);

// One row per model: model,name,prior,indicator,indicator_mcse,...
std::string render_csv_report(const PosteriorReport& report);

// Writes report.txt (Text) or report.csv plus trace_<c>.csv per chain (Csv)
// into `dir`, returning the files written. Throws ContractViolation when the
// report has no post-burn-in iterations and IoError when `dir` is unwritable.
std::vector<std::filesystem::path> emit_report(const PosteriorReport& report, ReportFormat format,
                                               const std::filesystem::path& dir);

// Reports serialize without their cumulative traces.
void to_json(nlohmann::json& j, const PosteriorReport& report);
void from_json(const nlohmann::json& j, PosteriorReport& report);

}  // namespace palette
