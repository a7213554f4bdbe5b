#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "ls3/bundle.hpp"
#include "ls3/dataset.hpp"
#include "ls3/navigation.hpp"
#include "ls3/planner.hpp"
#include "ls3/rng.hpp"

namespace ls3 {

struct LatentConfig {
  EncoderMode mode = EncoderMode::learned;
  EncoderSettings encoder;
  std::size_t vae_epochs = 30;
  double vae_lr = 1e-4;
  bool augment_shift = false;
};

struct ModelsConfig {
  DynamicsSettings dynamics;
  ValueSettings value;
  std::vector<std::size_t> classifier_hidden{64, 64, 64};
  Activation classifier_activation = Activation::relu;
  double gamma_ss = 0.3;
};

struct DataConfig {
  std::size_t n_demo_success = 50;
  std::size_t n_demo_constraint = 50;
  std::size_t n_rand = 0;
  int demo_retry_cap = 5;
  int constraint_retry_cap = 20;
};

struct TrainConfig {
  std::size_t batch_size = 256;
  double lr = 1e-4;
  double dynamics_lr = 1e-3;
  std::size_t offline_steps = 2000;  // per model
  std::size_t round_dynamics_steps = 200;
  std::size_t round_classifier_steps = 200;
  std::size_t round_value_steps = 500;
  std::size_t ss_refit_interval = 50;  // safe-set targets recomputed this often
  bool balanced_classes = true;        // 50/50 minibatches for f_G and f_C
  bool reinitialize = false;           // refit from scratch each round instead of incrementally
};

struct ScheduleConfig {
  int rounds = 25;                 // U
  std::size_t rollouts_per_round = 10;  // K
  std::size_t eval_episodes = 20;
};

struct OutputConfig {
  bool save_dataset = true;
  bool per_step_metrics = false;
};

struct RunConfig {
  NavigationConfig env;
  LatentConfig latent;
  ModelsConfig models;
  PlanConfig planner;
  DataConfig data;
  TrainConfig train;
  ScheduleConfig run;
  OutputConfig output;

  void validate() const;
};

/// Encoder outputs for every stored transition. The encoder is frozen once the
/// offline phase ends, so means and deviations are computed once and training
/// minibatches resample z = mean + stddev * eps.
class LatentCache {
 public:
  LatentCache() = default;
  explicit LatentCache(std::size_t latent_dim) : dim_(latent_dim) {}

  /// Encodes transitions [size(), dataset.size()).
  void extend(const EncoderModel& encoder, const Dataset& dataset);
  std::size_t size() const noexcept { return count_; }
  std::size_t dim() const noexcept { return dim_; }

  Tensor sample_obs(std::span<const std::size_t> idx, Rng& rng) const;
  Tensor sample_next(std::span<const std::size_t> idx, Rng& rng) const;
  Tensor mean_obs(std::span<const std::size_t> idx) const;
  Tensor mean_next(std::span<const std::size_t> idx) const;

 private:
  Tensor gather(const std::vector<double>& mean, const std::vector<double>& stddev,
                std::span<const std::size_t> idx, Rng* rng) const;

  std::size_t dim_ = 0;
  std::size_t count_ = 0;
  std::vector<double> obs_mean_, obs_std_, next_mean_, next_std_;
};

/// Untrained models sized from the config.
ModelBundle make_bundle(const RunConfig& config, Rng& rng);

/// Offline dataset: scripted demonstrations, constraint demonstrations and
/// optional random-policy data.
Dataset collect_offline(const RunConfig& config, Rng& rng);

struct FitBudget {
  std::size_t dynamics_steps = 0;
  std::size_t classifier_steps = 0;
  std::size_t value_steps = 0;
  bool td_value = false;  // false: Monte Carlo targets
};

struct FitReport {
  double dynamics_nll = 0.0;
  double goal_loss = 0.0;
  double constraint_loss = 0.0;
  double safe_set_loss = 0.0;
  double value_loss = 0.0;
};

/// Trains the VAE on every stored observation, then fits the normalization.
std::vector<VaeEpochLoss> train_encoder(EncoderModel& encoder, const Dataset& dataset, const RunConfig& config,
                                        Rng& rng);

/// Fits dynamics, goal, constraint, safe-set and value models on cached latents.
FitReport fit_models(ModelBundle& models, const Dataset& dataset, const LatentCache& cache, const RunConfig& config,
                     const FitBudget& budget, Rng& rng);

struct Learner {
  ModelBundle models;
  LatentCache cache;
  FitReport offline_fit;
};

/// Encoder first, then every latent-space model with the offline budget and
/// Monte Carlo value targets. Ends with a target-network sync.
Learner train_offline(const Dataset& dataset, const RunConfig& config, Rng& rng);

struct StepDiagnostics {
  int step = 0;
  double score = 0.0;
  double safe_frac = 0.0;
  int delta_ss_decays = 0;
  bool safe_set_fallback = false;
  std::vector<std::size_t> feasible_counts;
};

struct EpisodeRecord {
  int round = 0;
  std::int64_t trajectory_id = 0;
  std::size_t episode = 0;
  double total_reward = 0.0;
  bool success = false;
  bool violation = false;
  int steps_to_goal = -1;
  std::size_t planned_steps = 0;
  double mean_safe_frac = 0.0;
  int delta_ss_decays = 0;
  int safe_set_fallbacks = 0;
  double mean_final_feasible = 0.0;  // feasible candidates in the last scored iteration
  double wall_seconds = 0.0;         // excluded from deterministic outputs
  std::vector<StepDiagnostics> steps;
};

/// Rolls one episode with the planner in the loop.
std::pair<Trajectory, EpisodeRecord> planned_episode(const ModelBundle& models, const RunConfig& config,
                                                     const PlanConfig& planner, std::uint64_t seed,
                                                     std::int64_t trajectory_id);

struct RoundResult {
  std::vector<EpisodeRecord> episodes;
  FitReport fit;
};

/// K planned rollouts appended to the dataset, then a refit of every model but
/// the encoder. `round_index` starts at 1.
RoundResult run_round(Learner& learner, Dataset& dataset, const RunConfig& config, int round_index,
                      std::uint64_t seed);

struct EvalSummary {
  std::size_t episodes = 0;
  double success_rate = 0.0;
  double violation_rate = 0.0;
  double mean_reward = 0.0;
  double reward_stderr = 0.0;
  std::vector<EpisodeRecord> records;
};

/// Planner rollouts with no data collection and no training. Encoding uses
/// latent means.
EvalSummary evaluate(const ModelBundle& models, const RunConfig& config, std::size_t n_episodes, std::uint64_t seed);

/// Sample standard deviation over sqrt(n); zero for n < 2.
double standard_error(std::span<const double> values);

}  // namespace ls3
