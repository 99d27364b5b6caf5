#ifndef NLSPARSE_REPORT_IO_HPP_
#define NLSPARSE_REPORT_IO_HPP_

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "nlsparse/harness.hpp"

namespace nlsparse {

/// Raised for malformed spec documents, unknown keys and bad overrides.
class SpecError : public std::runtime_error {
 public:
  explicit SpecError(const std::string& what) : std::runtime_error(what) {}
};

/// Shortest decimal string that parses back to the same double. Non-finite
/// values print as "NaN", "inf" or "-inf".
std::string format_double(double value);

/// Every recognised key with its default value. Optional sections ("sweep",
/// "rate_study") are not part of the defaults.
nlohmann::json default_spec_json();

/// Merges `doc` over the defaults, rejecting keys that the defaults do not
/// define (the optional sections are passed through).
nlohmann::json merge_spec_json(const nlohmann::json& doc);

/// Applies "dotted.key=value" overrides. The value is parsed as JSON when
/// possible and taken as a plain string otherwise. Throws SpecError when the
/// key does not already exist in `doc`.
void apply_overrides(nlohmann::json& doc, const std::vector<std::string>& overrides);

ExperimentSpec spec_from_json(const nlohmann::json& doc);
nlohmann::json spec_to_json(const ExperimentSpec& spec);

/// Reads and merges a spec file. Throws SpecError on IO or parse errors.
nlohmann::json load_spec_file(const std::filesystem::path& path);

nlohmann::json trial_to_json(const TrialRecord& trial);
nlohmann::json report_to_json(const ExperimentReport& report);
nlohmann::json sweep_to_json(const SweepReport& report);
nlohmann::json rate_study_to_json(const RateStudyReport& report);

/// Columns k, objective, residual, gap, support, step.
std::string trace_to_csv(const SolverTrace& trace);

/// One line per trial with the scalar metrics.
std::string trials_to_csv(const ExperimentReport& report);

/// Sweep axes parsed from the "sweep" section of a spec document.
SweepGrid sweep_grid_from_json(const nlohmann::json& doc);

enum class SweepMetric { snr, iterations };

/// Table-shaped CSV. A one-dimensional sweep prints the axis values across the
/// header and one row per metric; a two-dimensional sweep prints one row per
/// row-axis value for `metric`. Divergent cells print as "NaN".
std::string sweep_table_csv(const SweepReport& report, SweepMetric metric);

std::string rate_study_to_csv(const RateStudyReport& report);

/// Writes to a temporary file in the same directory and renames it over the
/// target.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

}  // namespace nlsparse

#endif  // NLSPARSE_REPORT_IO_HPP_
