#pragma once

// Versioned experiment configs, seeded runs and the canonical suites.

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace cat0lab {

inline constexpr int kConfigVersion = 1;

/// Exit status contract of `lab`.
enum ExitStatus : int { kPass = 0, kFail = 1, kError = 2 };

struct RunOutcome {
  int status = kError;
  nlohmann::json report;  ///< includes a "timing" object, nothing else varies
  std::vector<std::string> artifacts;
  std::string error;      ///< set when status is kError
};

std::vector<std::string> experiment_kinds();

/// Throws InvalidInput naming the offending field.
void validate_config(const nlohmann::json& config);

/// Runs one experiment. Relative paths in the config resolve against
/// `base_dir`; reports and CSV files go to the config's `output` entries or,
/// when `out_dir` is given, into that directory under the experiment name.
/// Never throws: execution errors come back as kError.
RunOutcome run_experiment(const nlohmann::json& config, const std::filesystem::path& base_dir,
                          const std::optional<std::filesystem::path>& out_dir);

RunOutcome run_config_file(const std::filesystem::path& path, const std::optional<std::filesystem::path>& out_dir);

std::vector<std::string> suite_names();

/// Runs a shipped suite (oracle, theorem, negative-controls or all). A member
/// passes when its verdict matches the expected one; the aggregate report
/// lists every member.
RunOutcome run_suite(const std::string& name, const std::filesystem::path& suite_dir,
                     const std::optional<std::filesystem::path>& out_dir);

/// Directory of the suites shipped with the source tree.
std::filesystem::path default_suite_dir();

/// Report without its timing fields, for reproducibility comparisons.
nlohmann::json strip_timing(nlohmann::json report);

}  // namespace cat0lab
