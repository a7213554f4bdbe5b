#include "ls3/runner.hpp"

#include <chrono>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "ls3/checkpoint.hpp"
#include "ls3/config.hpp"
#include "ls3/metrics.hpp"
#include "ls3/plot.hpp"

#ifndef LS3_VERSION
#define LS3_VERSION "0.0.0"
#endif

namespace ls3 {

namespace fs = std::filesystem;
using nlohmann::json;

std::string_view version_string() noexcept { return LS3_VERSION; }

fs::path round_checkpoint_dir(const fs::path& out_dir, int round) {
  std::ostringstream name;
  name << "round_" << std::setw(3) << std::setfill('0') << round;
  return out_dir / "checkpoints" / name.str();
}

int last_checkpoint_round(const fs::path& out_dir) {
  const fs::path root = out_dir / "checkpoints";
  if (!fs::is_directory(root)) return -1;
  int best = -1;
  for (const auto& entry : fs::directory_iterator(root)) {
    const std::string name = entry.path().filename().string();
    if (name.rfind("round_", 0) != 0) continue;
    if (!fs::exists(entry.path() / kManifestFile) || !fs::exists(entry.path() / kParamsFile)) continue;
    try {
      best = std::max(best, std::stoi(name.substr(6)));
    } catch (const std::exception&) {
    }
  }
  return best;
}

namespace {

std::string utc_timestamp() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

void write_json_file(const fs::path& path, const json& doc) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << doc.dump(2) << '\n';
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

json checkpoint_metadata(const json& snapshot, std::uint64_t seed, int round) {
  return {{"config", snapshot}, {"seed", seed}, {"round", round}, {"version", version_string()}};
}

// Keeps trajectories collected up to and including `round`.
Dataset truncate_dataset(const Dataset& full, int round) {
  Dataset out;
  const auto& trs = full.transitions();
  for (const auto& info : full.trajectories()) {
    if (info.round > round) continue;
    Trajectory t;
    t.success = info.success;
    t.violation = info.violation;
    for (std::size_t i = info.begin; i < info.end; ++i) {
      t.transitions.push_back(trs[i]);
      t.total_reward += trs[i].reward;
    }
    out.add(std::move(t), info.source, info.round);
  }
  return out;
}

// Rewrites a jsonl file keeping per-round records up to `round`. Final
// evaluation records are dropped since they are regenerated.
void truncate_records(const fs::path& path, int round) {
  if (!fs::exists(path)) return;
  const auto records = read_jsonl(path);
  JsonlWriter w(path, false);
  for (const auto& r : records) {
    const std::string kind = r.value("kind", "");
    if (kind == "eval" || kind == "eval_summary") continue;
    if (r.value("round", 0) > round) continue;
    w.write(r);
  }
}

void save_round(const ModelBundle& models, const Dataset& dataset, const RunConfig& config, const json& snapshot,
                const fs::path& out_dir, std::uint64_t seed, int round) {
  // dataset first: a checkpoint is only considered complete once its data is on disk
  if (config.output.save_dataset) save_dataset_jsonl(dataset, out_dir / kDatasetFile);
  save_checkpoint(models, round_checkpoint_dir(out_dir, round), checkpoint_metadata(snapshot, seed, round));
}

void log_line(std::ostream* log, const std::string& s) {
  if (log) *log << s << std::endl;
}

}  // namespace

std::pair<RunConfig, ModelBundle> load_run_checkpoint(const fs::path& dir) {
  const json manifest = read_manifest(dir);
  if (!manifest.contains("metadata") || !manifest["metadata"].contains("config"))
    throw std::runtime_error(dir.string() + ": checkpoint carries no config");
  RunConfig config = config_from_json(manifest["metadata"]["config"]);
  Rng rng(0);
  ModelBundle models = make_bundle(config, rng);
  load_checkpoint(models, dir);
  return {std::move(config), std::move(models)};
}

RunSummary execute_run(const RunConfig& config, const fs::path& out_dir, std::uint64_t seed, bool resume,
                       std::ostream* log) {
  config.validate();
  fs::create_directories(out_dir);
  const json snapshot = config_to_json(config);
  const fs::path metrics_path = out_dir / kMetricsFile;
  const fs::path timing_path = out_dir / kTimingFile;

  RunSummary summary;
  Dataset dataset;
  Learner learner;
  int start_round = 1;

  const int resume_round = resume ? last_checkpoint_round(out_dir) : -1;
  if (resume && resume_round < 0) log_line(log, "no checkpoint found in " + out_dir.string() + "; starting fresh");

  if (resume_round >= 0) {
    const fs::path ckpt = round_checkpoint_dir(out_dir, resume_round);
    const json meta = read_manifest(ckpt).value("metadata", json::object());
    if (meta.value("config", json()) != snapshot)
      throw std::runtime_error("resume: config differs from the one stored in " + ckpt.string());
    if (meta.value("seed", std::uint64_t{0}) != seed)
      throw std::runtime_error("resume: seed differs from the one stored in " + ckpt.string());
    if (!fs::exists(out_dir / kDatasetFile))
      throw std::runtime_error("resume: " + (out_dir / kDatasetFile).string() + " missing");
    dataset = truncate_dataset(load_dataset_jsonl(out_dir / kDatasetFile), resume_round);
    Rng rng(0);
    learner.models = make_bundle(config, rng);
    load_checkpoint(learner.models, ckpt);
    learner.cache = LatentCache(learner.models.encoder.latent_dim());
    learner.cache.extend(learner.models.encoder, dataset);
    truncate_records(metrics_path, resume_round);
    truncate_records(timing_path, resume_round);
    start_round = resume_round + 1;
    summary.resumed_from = resume_round;
    log_line(log, "resuming after round " + std::to_string(resume_round));
  } else {
    JsonlWriter(metrics_path, false);
    JsonlWriter(timing_path, false);
    Rng data_rng(derive_seed(seed, "offline_data"));
    dataset = collect_offline(config, data_rng);
    log_line(log, "offline data: " + std::to_string(dataset.trajectories().size()) + " trajectories, " +
                      std::to_string(dataset.size()) + " transitions");
    Rng train_rng(derive_seed(seed, "offline_train"));
    learner = train_offline(dataset, config, train_rng);
    quantize_to_checkpoint_precision(learner.models);
    // latents must come from the same encoder weights a resumed run would load
    learner.cache = LatentCache(learner.models.encoder.latent_dim());
    learner.cache.extend(learner.models.encoder, dataset);
    JsonlWriter(metrics_path, true).write(fit_json(0, learner.offline_fit));
    save_round(learner.models, dataset, config, snapshot, out_dir, seed, 0);
    log_line(log, "offline training done");
  }

  {
    JsonlWriter metrics(metrics_path, true);
    JsonlWriter timing(timing_path, true);
    for (int r = start_round; r <= config.run.rounds; ++r) {
      RoundResult res = run_round(learner, dataset, config, r, seed);
      std::size_t succ = 0, viol = 0;
      for (const auto& rec : res.episodes) {
        metrics.write(episode_json(rec, "trajectory"));
        if (config.output.per_step_metrics)
          for (const auto& s : rec.steps) metrics.write(step_json(rec, s));
        timing.write(timing_json(rec, "trajectory"));
        succ += rec.success;
        viol += rec.violation;
      }
      metrics.write(fit_json(r, res.fit));
      quantize_to_checkpoint_precision(learner.models);
      save_round(learner.models, dataset, config, snapshot, out_dir, seed, r);
      log_line(log, "round " + std::to_string(r) + "/" + std::to_string(config.run.rounds) + ": " +
                        std::to_string(succ) + " successes, " + std::to_string(viol) + " violations");
    }
  }
  summary.rounds_completed = config.run.rounds;

  summary.final_eval = evaluate(learner.models, config, config.run.eval_episodes, derive_seed(seed, "final_eval"));
  {
    JsonlWriter metrics(metrics_path, true);
    JsonlWriter timing(timing_path, true);
    for (auto& rec : summary.final_eval.records) {
      rec.round = config.run.rounds;
      metrics.write(episode_json(rec, "eval"));
      timing.write(timing_json(rec, "eval"));
    }
    const json s = eval_summary_json(config.run.rounds, summary.final_eval);
    metrics.write(s);
    write_json_file(out_dir / kEvalSummaryFile, s);
  }

  json checkpoints = json::array();
  for (int r = 0; r <= config.run.rounds; ++r)
    checkpoints.push_back(fs::relative(round_checkpoint_dir(out_dir, r), out_dir).generic_string());
  write_json_file(out_dir / kRunManifestFile, {{"version", version_string()},
                                               {"seed", seed},
                                               {"created_utc", utc_timestamp()},
                                               {"resumed_from", summary.resumed_from},
                                               {"config", snapshot},
                                               {"metrics", std::string(kMetricsFile)},
                                               {"timing", std::string(kTimingFile)},
                                               {"dataset", config.output.save_dataset ? json(std::string(kDatasetFile)) : json()},
                                               {"checkpoints", checkpoints}});
  return summary;
}

namespace {

std::string format_summary(const EvalSummary& s) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(3) << "episodes " << s.episodes << "  success " << s.success_rate
     << "  violation " << s.violation_rate << "  reward " << std::setprecision(2) << s.mean_reward << " +/- "
     << s.reward_stderr;
  return os.str();
}

template <class F>
int guarded(std::ostream& err, F&& body) {
  try {
    body();
    return 0;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
}

}  // namespace

int cmd_run(const fs::path& config_path, const fs::path& out_dir, std::uint64_t seed, bool resume, std::ostream& out,
            std::ostream& err) {
  return guarded(err, [&] {
    const RunConfig config = load_config(config_path);
    const RunSummary s = execute_run(config, out_dir, seed, resume, &out);
    out << "final evaluation: " << format_summary(s.final_eval) << '\n';
  });
}

int cmd_eval(const fs::path& checkpoint_dir, std::size_t n_episodes, std::uint64_t seed, std::ostream& out,
             std::ostream& err) {
  return guarded(err, [&] {
    auto [config, models] = load_run_checkpoint(checkpoint_dir);
    const EvalSummary s = evaluate(models, config, n_episodes, seed);
    json rec = eval_summary_json(read_manifest(checkpoint_dir)["metadata"].value("round", 0), s);
    rec["seed"] = seed;
    rec["checkpoint"] = checkpoint_dir.generic_string();
    const fs::path path = checkpoint_dir / ("eval_seed" + std::to_string(seed) + ".json");
    write_json_file(path, rec);
    out << format_summary(s) << '\n' << "summary written to " << path.string() << '\n';
  });
}

int cmd_plot(const std::vector<fs::path>& metrics, const fs::path& out_path, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    if (metrics.empty()) throw std::runtime_error("plot: no metrics files given");
    for (const auto& w : write_learning_curves(metrics, out_path)) err << "warning: " << w << '\n';
    fs::path stem = out_path;
    if (stem.extension() == ".csv" || stem.extension() == ".svg") stem.replace_extension();
    out << "wrote " << stem.string() << ".csv and " << stem.string() << ".svg\n";
  });
}

}  // namespace ls3
