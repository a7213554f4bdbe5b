#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <vector>

#include "ls3/orchestrator.hpp"

namespace ls3 {

std::string_view version_string() noexcept;

// Files written into a run directory.
inline constexpr std::string_view kMetricsFile = "metrics.jsonl";
inline constexpr std::string_view kTimingFile = "timing.jsonl";
inline constexpr std::string_view kDatasetFile = "dataset.jsonl";
inline constexpr std::string_view kRunManifestFile = "run_manifest.json";
inline constexpr std::string_view kEvalSummaryFile = "eval_summary.json";

std::filesystem::path round_checkpoint_dir(const std::filesystem::path& out_dir, int round);

/// Highest round with a complete checkpoint, or -1.
int last_checkpoint_round(const std::filesystem::path& out_dir);

struct RunSummary {
  EvalSummary final_eval;
  int rounds_completed = 0;
  int resumed_from = -1;  // checkpoint round the run resumed after, -1 if fresh
};

/// Offline collection and training, U online rounds, final evaluation. Writes
/// metrics, timing, checkpoints, dataset and manifest under `out_dir`.
RunSummary execute_run(const RunConfig& config, const std::filesystem::path& out_dir, std::uint64_t seed,
                       bool resume, std::ostream* log);

/// Rebuilds a bundle from a checkpoint directory using the config it carries.
std::pair<RunConfig, ModelBundle> load_run_checkpoint(const std::filesystem::path& dir);

// CLI entry points; return the process exit status (0 ok, 1 validation, 2 runtime).
int cmd_run(const std::filesystem::path& config_path, const std::filesystem::path& out_dir, std::uint64_t seed,
            bool resume, std::ostream& out, std::ostream& err);
int cmd_eval(const std::filesystem::path& checkpoint_dir, std::size_t n_episodes, std::uint64_t seed,
             std::ostream& out, std::ostream& err);
int cmd_plot(const std::vector<std::filesystem::path>& metrics, const std::filesystem::path& out_path,
             std::ostream& out, std::ostream& err);

}  // namespace ls3
