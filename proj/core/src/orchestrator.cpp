#include "ls3/orchestrator.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace ls3 {

void RunConfig::validate() const {
  env.validate();
  planner.validate();
  auto fail = [](const std::string& msg) { throw std::invalid_argument(msg); };
  if (latent.mode == EncoderMode::learned && latent.encoder.latent_dim < 1) fail("latent.d must be >= 1");
  if (latent.augment_shift && env.obs_mode != ObsMode::raster) fail("latent.augment_shift requires env.obs_mode=raster");
  if (!(latent.vae_lr > 0.0)) fail("latent.lr must be > 0");
  if (latent.encoder.beta < 0.0) fail("latent.beta must be >= 0");
  if (models.dynamics.ensemble_size < 1) fail("models.dynamics_ensemble must be >= 1");
  if (models.value.ensemble_size < 1) fail("models.value_ensemble must be >= 1");
  if (!(models.value.gamma > 0.0 && models.value.gamma < 1.0)) fail("models.gamma must be in (0, 1)");
  if (models.value.sync_period < 1) fail("models.target_sync_period must be >= 1");
  if (!(models.gamma_ss >= 0.0 && models.gamma_ss <= 1.0)) fail("models.gamma_ss must be in [0, 1]");
  if (planner.action_dim != 2) fail("planner.action_dim must be 2 for navigation");
  if (planner.action_high > env.max_speed || planner.action_low < -env.max_speed) {
    fail("planner action bounds exceed env.max_speed");
  }
  if (data.n_demo_success < 1) fail("data.n_demo_success must be >= 1");
  if (data.demo_retry_cap < 1) fail("data.demo_retry_cap must be >= 1");
  if (data.constraint_retry_cap < 1) fail("data.constraint_retry_cap must be >= 1");
  if (train.batch_size < 1) fail("train.batch_size must be >= 1");
  if (!(train.lr > 0.0)) fail("train.lr must be > 0");
  if (!(train.dynamics_lr > 0.0)) fail("train.dynamics_lr must be > 0");
  if (train.ss_refit_interval < 1) fail("train.ss_refit_interval must be >= 1");
  if (run.rounds < 0) fail("run.rounds must be >= 0");
  if (run.rollouts_per_round < 1) fail("run.rollouts_per_round must be >= 1");
  if (run.eval_episodes < 1) fail("run.eval_episodes must be >= 1");
}

// ---------------------------------------------------------------------------
// Latent cache

void LatentCache::extend(const EncoderModel& encoder, const Dataset& dataset) {
  if (dim_ != encoder.latent_dim()) throw std::invalid_argument("LatentCache: latent dim mismatch");
  const auto& trs = dataset.transitions();
  constexpr std::size_t kChunk = 1024;
  for (std::size_t begin = count_; begin < trs.size(); begin += kChunk) {
    const std::size_t end = std::min(trs.size(), begin + kChunk);
    std::vector<const Observation*> obs, next;
    for (std::size_t i = begin; i < end; ++i) {
      obs.push_back(&trs[i].obs);
      next.push_back(&trs[i].next_obs);
    }
    const auto a = encoder.encode_batch(stack_observations(obs));
    const auto b = encoder.encode_batch(stack_observations(next));
    obs_mean_.insert(obs_mean_.end(), a.mean.data().begin(), a.mean.data().end());
    obs_std_.insert(obs_std_.end(), a.stddev.data().begin(), a.stddev.data().end());
    next_mean_.insert(next_mean_.end(), b.mean.data().begin(), b.mean.data().end());
    next_std_.insert(next_std_.end(), b.stddev.data().begin(), b.stddev.data().end());
  }
  count_ = trs.size();
}

Tensor LatentCache::gather(const std::vector<double>& mean, const std::vector<double>& stddev,
                           std::span<const std::size_t> idx, Rng* rng) const {
  Tensor out({idx.size(), dim_});
  for (std::size_t r = 0; r < idx.size(); ++r) {
    if (idx[r] >= count_) throw std::out_of_range("LatentCache: index " + std::to_string(idx[r]) + " not cached");
    const std::size_t off = idx[r] * dim_;
    for (std::size_t j = 0; j < dim_; ++j) {
      out(r, j) = mean[off + j] + (rng ? stddev[off + j] * rng->normal() : 0.0);
    }
  }
  return out;
}

Tensor LatentCache::sample_obs(std::span<const std::size_t> idx, Rng& rng) const {
  return gather(obs_mean_, obs_std_, idx, &rng);
}
Tensor LatentCache::sample_next(std::span<const std::size_t> idx, Rng& rng) const {
  return gather(next_mean_, next_std_, idx, &rng);
}
Tensor LatentCache::mean_obs(std::span<const std::size_t> idx) const {
  return gather(obs_mean_, obs_std_, idx, nullptr);
}
Tensor LatentCache::mean_next(std::span<const std::size_t> idx) const {
  return gather(next_mean_, next_std_, idx, nullptr);
}

// ---------------------------------------------------------------------------
// Models and data

namespace {

void init_latent_models(ModelBundle& b, const RunConfig& config, Rng& rng) {
  const std::size_t d = b.encoder.latent_dim();
  DynamicsSettings ds = config.models.dynamics;
  ds.latent_dim = d;
  ds.action_dim = 2;
  ds.action_scale = config.env.max_speed;
  b.dynamics = DynamicsEnsemble::make(ds, rng);
  ValueSettings vs = config.models.value;
  vs.latent_dim = d;
  b.value = ValueEnsemble::make(vs, rng);
  const auto& hidden = config.models.classifier_hidden;
  const auto act = config.models.classifier_activation;
  b.goal = Classifier::make(d, hidden, act, rng);
  b.constraint = Classifier::make(d, hidden, act, rng);
  b.safe_set = {Classifier::make(d, hidden, act, rng), config.models.gamma_ss};
}

}  // namespace

ModelBundle make_bundle(const RunConfig& config, Rng& rng) {
  ModelBundle b;
  if (config.latent.mode == EncoderMode::identity) {
    b.encoder = EncoderModel::identity(config.env.observation_dim());
  } else {
    EncoderSettings es = config.latent.encoder;
    es.obs_dim = config.env.observation_dim();
    b.encoder = EncoderModel::learned(es, rng);
  }
  init_latent_models(b, config, rng);
  return b;
}

Dataset collect_offline(const RunConfig& config, Rng& rng) {
  const auto& env = config.env;
  Dataset ds;
  const Policy demo = [&env](const EnvState& s, const Observation&) { return demo_policy(s, env); };

  std::size_t attempts = 0;
  for (std::size_t k = 0; k < config.data.n_demo_success; ++k) {
    bool ok = false;
    for (int attempt = 0; attempt < config.data.demo_retry_cap && !ok; ++attempt) {
      ++attempts;
      auto traj = collect_trajectory(demo, env, rng, ds.next_trajectory_id());
      if (traj.success) {
        ds.add(std::move(traj), TrajectorySource::demo, 0);
        ok = true;
      }
    }
    const double rate = static_cast<double>(k + (ok ? 1 : 0)) / static_cast<double>(attempts);
    if (!ok || rate < 0.5) {
      throw std::runtime_error("demonstrator failed to reach the goal (success rate " + std::to_string(rate) +
                               " after " + std::to_string(attempts) + " attempts); check env settings");
    }
  }

  for (std::size_t k = 0; k < config.data.n_demo_constraint; ++k) {
    bool ok = false;
    for (int attempt = 0; attempt < config.data.constraint_retry_cap && !ok; ++attempt) {
      const ConstraintDemoPolicy cpol(env, rng);
      const Vec2 start = sample_free_position(env, rng);
      const Policy p = [&cpol](const EnvState& s, const Observation&) { return cpol(s); };
      auto traj = collect_trajectory(p, env, rng, ds.next_trajectory_id(), start);
      if (traj.violation) {
        ds.add(std::move(traj), TrajectorySource::constraint_demo, 0);
        ok = true;
      }
    }
    if (!ok) throw std::runtime_error("constraint demonstrator never reached the obstacle");
  }

  for (std::size_t k = 0; k < config.data.n_rand; ++k) {
    const Vec2 start = sample_free_position(env, rng);
    const Policy p = [&env, &rng](const EnvState&, const Observation&) { return random_policy(env, rng); };
    auto traj = collect_trajectory(p, env, rng, ds.next_trajectory_id(), start);
    ds.add(std::move(traj), TrajectorySource::random, 0);
  }
  return ds;
}

std::vector<VaeEpochLoss> train_encoder(EncoderModel& encoder, const Dataset& dataset, const RunConfig& config,
                                        Rng& rng) {
  std::vector<VaeEpochLoss> losses;
  std::vector<const Observation*> obs;
  const auto& trs = dataset.transitions();
  for (const auto& info : dataset.trajectories()) {
    for (std::size_t i = info.begin; i < info.end; ++i) obs.push_back(&trs[i].obs);
    if (info.end > info.begin) obs.push_back(&trs[info.end - 1].next_obs);
  }
  const Tensor batch = stack_observations(obs);
  VaeTrainOptions opt;
  opt.batch_size = config.train.batch_size;
  opt.lr = config.latent.vae_lr;
  opt.augment_shift = config.latent.augment_shift;
  opt.raster_side = config.env.raster_size;
  if (encoder.mode() == EncoderMode::learned) {
    for (std::size_t e = 0; e < config.latent.vae_epochs; ++e) losses.push_back(train_vae_epoch(encoder, batch, opt, rng));
  }
  encoder.fit_normalization(batch);
  return losses;
}

namespace {

std::vector<std::size_t> draw(std::span<const std::size_t> pool, std::size_t n, Rng& rng) {
  std::vector<std::size_t> out(n);
  for (auto& v : out) v = pool[rng.index(pool.size())];
  return out;
}

/// Minibatch for a binary classifier from positive/negative pools of
/// next-state latents. Balanced batches split evenly when both pools exist.
double classifier_step(Classifier& f, const std::vector<std::size_t>& pos, const std::vector<std::size_t>& neg,
                       const LatentCache& cache, const RunConfig& config, Rng& rng) {
  const std::size_t b = config.train.batch_size;
  if (pos.empty() && neg.empty()) return 0.0;
  std::size_t n_pos = 0;
  if (config.train.balanced_classes && !pos.empty() && !neg.empty()) {
    n_pos = b / 2;
  } else {
    // Uniform over the union.
    const double frac = static_cast<double>(pos.size()) / static_cast<double>(pos.size() + neg.size());
    for (std::size_t i = 0; i < b; ++i) n_pos += rng.uniform() < frac ? 1 : 0;
  }
  const auto ip = draw(pos, n_pos, rng);
  const auto in = draw(neg, b - n_pos, rng);
  std::vector<double> labels(b, 0.0);
  std::fill_n(labels.begin(), n_pos, 1.0);
  const Tensor z = concat_rows(cache.sample_next(ip, rng), cache.sample_next(in, rng));
  return classifier_train_step(f, z, labels, config.train.lr);
}

double mean_of(const std::vector<double>& v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

FitReport fit_models(ModelBundle& models, const Dataset& dataset, const LatentCache& cache, const RunConfig& config,
                     const FitBudget& budget, Rng& rng) {
  if (cache.size() != dataset.size()) throw std::logic_error("fit_models: latent cache out of date");
  if (dataset.empty()) throw std::invalid_argument("fit_models: empty dataset");
  const auto& trs = dataset.transitions();
  const std::size_t n = trs.size();
  const std::size_t b = config.train.batch_size;
  FitReport report;

  std::vector<std::size_t> all(n);
  std::iota(all.begin(), all.end(), 0);

  // Dynamics on every consecutive pair.
  std::vector<double> nll;
  for (std::size_t s = 0; s < budget.dynamics_steps; ++s) {
    const auto idx = draw(all, b, rng);
    LatentTransitionBatch batch{cache.sample_obs(idx, rng), Tensor({b, 2}), cache.sample_next(idx, rng)};
    for (std::size_t r = 0; r < b; ++r) {
      batch.action(r, 0) = trs[idx[r]].action[0];
      batch.action(r, 1) = trs[idx[r]].action[1];
    }
    nll = dyn_train_step(models.dynamics, batch, config.train.dynamics_lr, rng);
  }
  report.dynamics_nll = mean_of(nll);

  // Goal and constraint estimators on next states.
  std::vector<std::size_t> goal_pos, goal_neg, con_pos, con_neg;
  for (std::size_t i = 0; i < n; ++i) {
    (trs[i].in_goal ? goal_pos : goal_neg).push_back(i);
    (trs[i].constraint_violation ? con_pos : con_neg).push_back(i);
  }
  for (std::size_t s = 0; s < budget.classifier_steps; ++s) {
    report.goal_loss = classifier_step(models.goal, goal_pos, goal_neg, cache, config, rng);
  }
  for (std::size_t s = 0; s < budget.classifier_steps; ++s) {
    report.constraint_loss = classifier_step(models.constraint, con_pos, con_neg, cache, config, rng);
  }

  // Safe set: each transition trains its start state against its successor,
  // and each trajectory's final state is its own successor.
  std::vector<double> indicator(n);
  for (std::size_t i = 0; i < n; ++i) indicator[i] = trs[i].in_success_trajectory ? 1.0 : 0.0;
  std::vector<std::size_t> terminal;
  for (const auto& info : dataset.trajectories()) {
    if (info.end > info.begin) terminal.push_back(info.end - 1);
  }
  const std::size_t n_points = n + terminal.size();
  const Tensor next_means = cache.mean_next(all);
  std::vector<double> targets;
  for (std::size_t s = 0; s < budget.classifier_steps; ++s) {
    if (s % config.train.ss_refit_interval == 0) targets = safe_set_targets(models.safe_set, next_means, indicator);
    std::vector<std::size_t> obs_idx, next_idx;
    std::vector<double> labels;
    std::vector<double> obs_labels, next_labels;
    for (std::size_t r = 0; r < b; ++r) {
      const std::size_t p = rng.index(n_points);
      if (p < n) {
        obs_idx.push_back(p);
        obs_labels.push_back(targets[p]);
      } else {
        next_idx.push_back(terminal[p - n]);
        next_labels.push_back(targets[terminal[p - n]]);
      }
    }
    Tensor z = concat_rows(cache.sample_obs(obs_idx, rng), cache.sample_next(next_idx, rng));
    labels = obs_labels;
    labels.insert(labels.end(), next_labels.begin(), next_labels.end());
    report.safe_set_loss = classifier_train_step(models.safe_set.classifier, z, labels, config.train.lr);
  }

  // Value on demonstrator and online data only.
  const auto value_idx = dataset.indices_from({TrajectorySource::demo, TrajectorySource::online});
  if (!value_idx.empty() && budget.value_steps > 0) {
    std::vector<double> mc(n, 0.0);
    if (!budget.td_value) {
      for (const auto& info : dataset.trajectories()) {
        std::vector<double> rewards;
        for (std::size_t i = info.begin; i < info.end; ++i) rewards.push_back(trs[i].reward);
        const auto g = value_offline_targets(rewards, models.value.gamma());
        std::copy(g.begin(), g.end(), mc.begin() + static_cast<std::ptrdiff_t>(info.begin));
      }
    }
    for (std::size_t s = 0; s < budget.value_steps; ++s) {
      const auto idx = draw(value_idx, b, rng);
      const Tensor z = cache.sample_obs(idx, rng);
      if (budget.td_value) {
        std::vector<double> rewards(b);
        for (std::size_t r = 0; r < b; ++r) rewards[r] = trs[idx[r]].reward;
        report.value_loss = value_td_step(models.value, z, rewards, cache.sample_next(idx, rng), config.train.lr);
      } else {
        std::vector<double> t(b);
        for (std::size_t r = 0; r < b; ++r) t[r] = mc[idx[r]];
        report.value_loss = value_mc_step(models.value, z, t, config.train.lr);
      }
    }
  }
  return report;
}

Learner train_offline(const Dataset& dataset, const RunConfig& config, Rng& rng) {
  if (dataset.success_indices().empty() || dataset.constraint_indices().empty()) {
    throw std::invalid_argument("train_offline: dataset needs both successful and constraint-violating trajectories");
  }
  Learner learner{make_bundle(config, rng), LatentCache{}, {}};
  train_encoder(learner.models.encoder, dataset, config, rng);
  learner.cache = LatentCache(learner.models.encoder.latent_dim());
  learner.cache.extend(learner.models.encoder, dataset);
  const std::size_t steps = config.train.offline_steps;
  learner.offline_fit = fit_models(learner.models, dataset, learner.cache, config, {steps, steps, steps, false}, rng);
  learner.models.value.sync_target();
  return learner;
}

// ---------------------------------------------------------------------------
// Rollouts

std::pair<Trajectory, EpisodeRecord> planned_episode(const ModelBundle& models, const RunConfig& config,
                                                     const PlanConfig& planner, std::uint64_t seed,
                                                     std::int64_t trajectory_id) {
  const auto t0 = std::chrono::steady_clock::now();
  Rng env_rng(derive_seed(seed, "env"));
  Rng plan_rng(derive_seed(seed, "plan"));
  EpisodeRecord rec;
  rec.trajectory_id = trajectory_id;
  std::optional<WarmStart> warm;
  double safe_sum = 0.0, feasible_sum = 0.0;

  const Policy policy = [&](const EnvState& state, const Observation& obs) {
    ActResult res = act(models, obs, planner, warm, plan_rng);
    warm = std::move(res.warm_start);
    const auto& plan = res.plan;
    ++rec.planned_steps;
    safe_sum += plan.best_safe_frac;
    rec.delta_ss_decays += plan.delta_ss_decays;
    rec.safe_set_fallbacks += plan.safe_set_fallback ? 1 : 0;
    feasible_sum += plan.feasible_counts.empty() ? 0.0 : static_cast<double>(plan.feasible_counts.back());
    if (config.output.per_step_metrics) {
      rec.steps.push_back({state.t, plan.best_score, plan.best_safe_frac, plan.delta_ss_decays,
                           plan.safe_set_fallback, plan.feasible_counts});
    }
    return res.action;
  };
  Trajectory traj = collect_trajectory(policy, config.env, env_rng, trajectory_id);

  rec.total_reward = traj.total_reward;
  rec.success = traj.success;
  rec.violation = traj.violation;
  rec.steps_to_goal = traj.steps_to_goal;
  if (rec.planned_steps > 0) {
    rec.mean_safe_frac = safe_sum / static_cast<double>(rec.planned_steps);
    rec.mean_final_feasible = feasible_sum / static_cast<double>(rec.planned_steps);
  }
  rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return {std::move(traj), std::move(rec)};
}

RoundResult run_round(Learner& learner, Dataset& dataset, const RunConfig& config, int round_index,
                      std::uint64_t seed) {
  if (round_index < 1) throw std::invalid_argument("run_round: rounds are numbered from 1");
  RoundResult out;
  const auto r = static_cast<std::uint64_t>(round_index);
  for (std::size_t k = 0; k < config.run.rollouts_per_round; ++k) {
    const std::int64_t id = dataset.next_trajectory_id();
    auto [traj, rec] = planned_episode(learner.models, config, config.planner,
                                       derive_seed(seed, "rollout", {r, k}), id);
    rec.round = round_index;
    rec.episode = k;
    dataset.add(std::move(traj), TrajectorySource::online, round_index);
    out.episodes.push_back(std::move(rec));
  }
  learner.cache.extend(learner.models.encoder, dataset);

  Rng rng(derive_seed(seed, "fit", {r}));
  FitBudget budget{config.train.round_dynamics_steps, config.train.round_classifier_steps,
                   config.train.round_value_steps, true};
  if (config.train.reinitialize) {
    init_latent_models(learner.models, config, rng);
    budget = {config.train.offline_steps, config.train.offline_steps, config.train.offline_steps, false};
  }
  out.fit = fit_models(learner.models, dataset, learner.cache, config, budget, rng);
  if (config.train.reinitialize) learner.models.value.sync_target();
  return out;
}

double standard_error(std::span<const double> values) {
  const std::size_t n = values.size();
  if (n < 2) return 0.0;
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(n);
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return std::sqrt(ss / static_cast<double>(n - 1)) / std::sqrt(static_cast<double>(n));
}

EvalSummary evaluate(const ModelBundle& models, const RunConfig& config, std::size_t n_episodes, std::uint64_t seed) {
  EvalSummary s;
  PlanConfig planner = config.planner;
  planner.stochastic_encoding = false;
  std::vector<double> rewards;
  for (std::size_t k = 0; k < n_episodes; ++k) {
    auto [traj, rec] = planned_episode(models, config, planner, derive_seed(seed, "eval", {k}),
                                       static_cast<std::int64_t>(k));
    rec.episode = k;
    s.success_rate += rec.success ? 1.0 : 0.0;
    s.violation_rate += rec.violation ? 1.0 : 0.0;
    rewards.push_back(rec.total_reward);
    s.records.push_back(std::move(rec));
  }
  s.episodes = n_episodes;
  if (n_episodes > 0) {
    s.success_rate /= static_cast<double>(n_episodes);
    s.violation_rate /= static_cast<double>(n_episodes);
    s.mean_reward = mean_of(rewards);
  }
  s.reward_stderr = standard_error(rewards);
  return s;
}

}  // namespace ls3
