#include "ls3/metrics.hpp"

#include <stdexcept>

namespace ls3 {

using nlohmann::json;

JsonlWriter::JsonlWriter(const std::filesystem::path& path, bool append)
    : out_(path, append ? std::ios::app : std::ios::trunc), path_(path) {
  if (!out_) throw std::runtime_error("cannot open " + path.string() + " for writing");
}

void JsonlWriter::write(const json& record) {
  out_ << record.dump() << '\n';
  out_.flush();
  if (!out_) throw std::runtime_error("failed writing " + path_.string());
}

json episode_json(const EpisodeRecord& rec, std::string_view kind) {
  return {
      {"kind", kind},
      {"round", rec.round},
      {"trajectory_id", rec.trajectory_id},
      {"episode", rec.episode},
      {"total_reward", rec.total_reward},
      {"success", rec.success},
      {"violation", rec.violation},
      {"steps_to_goal", rec.steps_to_goal},
      {"planned_steps", rec.planned_steps},
      {"mean_safe_frac", rec.mean_safe_frac},
      {"delta_ss_decays", rec.delta_ss_decays},
      {"safe_set_fallbacks", rec.safe_set_fallbacks},
      {"mean_final_feasible", rec.mean_final_feasible},
  };
}

json step_json(const EpisodeRecord& rec, const StepDiagnostics& s) {
  return {
      {"kind", "step"},
      {"round", rec.round},
      {"trajectory_id", rec.trajectory_id},
      {"step", s.step},
      {"score", s.score},
      {"safe_frac", s.safe_frac},
      {"delta_ss_decays", s.delta_ss_decays},
      {"safe_set_fallback", s.safe_set_fallback},
      {"feasible_counts", s.feasible_counts},
  };
}

json fit_json(int round, const FitReport& fit) {
  return {
      {"kind", "fit"},
      {"round", round},
      {"dynamics_nll", fit.dynamics_nll},
      {"goal_loss", fit.goal_loss},
      {"constraint_loss", fit.constraint_loss},
      {"safe_set_loss", fit.safe_set_loss},
      {"value_loss", fit.value_loss},
  };
}

json eval_summary_json(int round, const EvalSummary& s) {
  return {
      {"kind", "eval_summary"},
      {"round", round},
      {"episodes", s.episodes},
      {"success_rate", s.success_rate},
      {"violation_rate", s.violation_rate},
      {"mean_reward", s.mean_reward},
      {"reward_stderr", s.reward_stderr},
  };
}

json timing_json(const EpisodeRecord& rec, std::string_view kind) {
  return {{"kind", kind}, {"round", rec.round}, {"trajectory_id", rec.trajectory_id}, {"wall_seconds", rec.wall_seconds}};
}

std::vector<json> read_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::vector<json> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(json::parse(line));
    } catch (const json::parse_error& e) {
      throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace ls3
