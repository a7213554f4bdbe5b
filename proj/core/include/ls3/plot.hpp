#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

namespace ls3 {

inline constexpr std::size_t kRateWindow = 10;

/// Per-trajectory outcomes of one seed's online rollouts, in collection order.
struct SeedCurve {
  std::vector<double> reward;
  std::vector<double> success;
  std::vector<double> violation;
};

SeedCurve curve_from_records(const std::vector<nlohmann::json>& records);

/// Trailing running mean over at most `window` entries.
std::vector<double> running_mean(const std::vector<double>& v, std::size_t window);

struct LearningCurves {
  std::size_t seeds = 0;
  std::vector<double> reward_mean;
  std::vector<double> reward_stderr;
  std::vector<double> success_rate;    // running mean, averaged over seeds
  std::vector<double> violation_rate;  // running mean, averaged over seeds
  std::vector<std::string> warnings;
};

/// Aggregates seeds row-wise; unequal lengths are truncated to the shortest with a warning.
LearningCurves aggregate_curves(const std::vector<SeedCurve>& seeds, std::size_t window = kRateWindow);

std::string curves_csv(const LearningCurves& curves);
std::string curves_svg(const LearningCurves& curves);

/// Reads the metrics files and writes `<out>.csv` and `<out>.svg` (a trailing
/// .csv or .svg on `out` is dropped first). Returns the warnings.
std::vector<std::string> write_learning_curves(const std::vector<std::filesystem::path>& metrics,
                                               const std::filesystem::path& out);

}  // namespace ls3
