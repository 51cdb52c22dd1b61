#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "forage/experiment.hpp"

namespace forage {

/// Writes summary.csv, results_<model>.csv, cv_<model>_<problem>_min<k>.csv,
/// importances_<problem>_min<k>.csv, results.json and, when `split` is
/// given, split.json. Everything is rendered before the first file is
/// written, so a failure leaves no partial report. Returns the paths written.
std::vector<std::filesystem::path> emit_reports(std::span<const ExperimentResult> results, const SplitPlan* split,
                                                const std::filesystem::path& out_dir);

/// Per model, the mean train/valid/test score over each problem's
/// non-skipped offsets, with the number of tasks averaged.
std::string summary_csv(std::span<const ExperimentResult> results);

/// Fixed 4-decimal rendering used by every CSV.
std::string format_score(double v);

nlohmann::ordered_json results_to_json(std::span<const ExperimentResult> results);
std::vector<ExperimentResult> results_from_json(const nlohmann::json& doc);

}  // namespace forage
