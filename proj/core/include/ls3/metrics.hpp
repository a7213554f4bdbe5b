#pragma once

#include <filesystem>
#include <fstream>
#include <string>

#include "json.hpp"
#include "ls3/orchestrator.hpp"

namespace ls3 {

/// Append-only line-delimited JSON stream; each record is flushed as written.
class JsonlWriter {
 public:
  JsonlWriter() = default;
  JsonlWriter(const std::filesystem::path& path, bool append);
  void write(const nlohmann::json& record);
  bool is_open() const { return out_.is_open(); }

 private:
  std::ofstream out_;
  std::filesystem::path path_;
};

/// Deterministic fields of an episode (wall time excluded). `kind` is
/// "trajectory" for online rollouts and "eval" for evaluation episodes.
nlohmann::json episode_json(const EpisodeRecord& rec, std::string_view kind);
nlohmann::json step_json(const EpisodeRecord& rec, const StepDiagnostics& step);
nlohmann::json fit_json(int round, const FitReport& fit);
nlohmann::json eval_summary_json(int round, const EvalSummary& summary);
nlohmann::json timing_json(const EpisodeRecord& rec, std::string_view kind);

/// Reads every record of a metrics file; blank lines are skipped.
std::vector<nlohmann::json> read_jsonl(const std::filesystem::path& path);

}  // namespace ls3
