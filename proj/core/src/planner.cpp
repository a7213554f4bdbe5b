#include "ls3/planner.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace ls3 {

namespace {
constexpr double kFractionTolerance = 1e-12;
}

std::string_view to_string(ConstraintRule r) noexcept {
  return r == ConstraintRule::particle_threshold ? "particle_threshold" : "mean_probability";
}

ConstraintRule parse_constraint_rule(std::string_view s) {
  if (s == "particle_threshold") return ConstraintRule::particle_threshold;
  if (s == "mean_probability") return ConstraintRule::mean_probability;
  throw std::invalid_argument("unknown constraint rule '" + std::string(s) + "'");
}

void PlanConfig::validate() const {
  if (horizon < 1 || n_candidate < 1 || n_elite < 1 || n_cem_iters < 1 || n_particle < 1 || action_dim < 1) {
    throw std::invalid_argument("planner counts must all be >= 1");
  }
  if (n_elite > n_candidate) throw std::invalid_argument("planner.n_elite must be <= planner.n_candidate");
  if (!(p_random >= 0.0 && p_random <= 1.0)) throw std::invalid_argument("planner.p_random must be in [0, 1]");
  if (!(delta_c > 0.0 && delta_c <= 1.0)) throw std::invalid_argument("planner.delta_c must be in (0, 1]");
  if (!(delta_ss_init > 0.0 && delta_ss_init <= 1.0)) throw std::invalid_argument("planner.delta_ss must be in (0, 1]");
  if (!(delta_ss_decay > 0.0 && delta_ss_decay < 1.0)) throw std::invalid_argument("planner.delta_ss_decay must be in (0, 1)");
  if (!(action_low < action_high)) throw std::invalid_argument("planner action bounds are empty");
}

LatentPlanObjective::LatentPlanObjective(const ModelBundle& models, Tensor z0, const PlanConfig& config)
    : models_(models), z0_(std::move(z0)), config_(config) {
  if (z0_.size() != models_.dynamics.latent_dim()) throw std::invalid_argument("planner: z0 has wrong latent dim");
  z0_ = z0_.reshaped({1, z0_.size()});
}

std::vector<RolloutStats> LatentPlanObjective::evaluate(std::span<const Tensor> candidates,
                                                        std::uint64_t seed) const {
  const std::size_t c = candidates.size();
  const std::size_t p = config_.n_particle;
  const std::size_t h = config_.horizon;
  const std::size_t d = models_.dynamics.latent_dim();
  const std::size_t a = models_.dynamics.action_dim();
  const std::size_t n = c * p;
  const std::size_t ensemble = models_.dynamics.size();

  // Per-candidate streams keyed by content so evaluation is order free.
  std::vector<std::size_t> members(h * n);
  Tensor noise({h, n, d});
  for (std::size_t ci = 0; ci < c; ++ci) {
    Rng rng(config_.shared_particle_noise ? seed : hash_doubles(seed, candidates[ci].data()));
    for (std::size_t k = 0; k < h; ++k) {
      for (std::size_t pi = 0; pi < p; ++pi) {
        const std::size_t row = ci * p + pi;
        members[k * n + row] = rng.index(ensemble);
        for (std::size_t j = 0; j < d; ++j) noise[(k * n + row) * d + j] = rng.normal();
      }
    }
  }

  std::vector<RolloutStats> stats(c);
  for (auto& s : stats) {
    if (config_.use_safe_set) s.terminal_safe_prob.assign(p, 0.0);
    if (config_.use_constraints) s.step_violation_prob.assign(h, std::vector<double>(p, 0.0));
  }
  if (config_.use_constraints) {
    const double c0 = models_.constraint.probability(z0_)[0];
    for (auto& s : stats) std::fill(s.step_violation_prob[0].begin(), s.step_violation_prob[0].end(), c0);
  }

  Tensor z({n, d});
  for (std::size_t r = 0; r < n; ++r) std::copy_n(z0_.data().begin(), d, z.row(r).begin());
  Tensor act({n, a});
  Tensor step_noise({n, d});
  for (std::size_t k = 0; k < h; ++k) {
    for (std::size_t ci = 0; ci < c; ++ci) {
      auto src = candidates[ci].row(k);
      for (std::size_t pi = 0; pi < p; ++pi) std::copy(src.begin(), src.end(), act.row(ci * p + pi).begin());
    }
    std::copy_n(noise.data().begin() + static_cast<std::ptrdiff_t>(k * n * d), n * d, step_noise.data().begin());
    z = ts1_step(models_.dynamics, z, act, std::span<const std::size_t>(members).subspan(k * n, n), step_noise);

    const std::size_t i = k + 1;  // z now holds z_{t+i}
    if (i < h) {
      const Tensor g = models_.goal.probability(z);
      for (std::size_t ci = 0; ci < c; ++ci) {
        double sum = 0.0;
        for (std::size_t pi = 0; pi < p; ++pi) sum += g[ci * p + pi];
        stats[ci].goal_sum += sum / static_cast<double>(p);
      }
      if (config_.use_constraints) {
        const Tensor v = models_.constraint.probability(z);
        for (std::size_t ci = 0; ci < c; ++ci) {
          for (std::size_t pi = 0; pi < p; ++pi) stats[ci].step_violation_prob[i][pi] = v[ci * p + pi];
        }
      }
    }
  }
  const Tensor value = models_.value.predict(z);
  for (std::size_t ci = 0; ci < c; ++ci) {
    double sum = 0.0;
    for (std::size_t pi = 0; pi < p; ++pi) sum += value[ci * p + pi];
    stats[ci].terminal_value = sum / static_cast<double>(p);
  }
  if (config_.use_safe_set) {
    const Tensor s = models_.safe_set.classifier.probability(z);
    for (std::size_t ci = 0; ci < c; ++ci) {
      for (std::size_t pi = 0; pi < p; ++pi) stats[ci].terminal_safe_prob[pi] = s[ci * p + pi];
    }
  }
  return stats;
}

std::vector<CandidatePlan> assess_candidates(std::span<const Tensor> candidates,
                                             std::span<const RolloutStats> stats, const PlanConfig& config,
                                             double delta_ss) {
  if (candidates.size() != stats.size()) throw std::invalid_argument("assess_candidates: size mismatch");
  std::vector<CandidatePlan> out(candidates.size());
  for (std::size_t ci = 0; ci < candidates.size(); ++ci) {
    const auto& st = stats[ci];
    auto& plan = out[ci];
    plan.actions = candidates[ci];
    plan.goal_sum = st.goal_sum;
    plan.terminal_value = st.terminal_value;

    if (!st.terminal_safe_prob.empty()) {
      std::size_t inside = 0;
      for (double prob : st.terminal_safe_prob) inside += prob >= delta_ss ? 1 : 0;
      plan.safe_frac = static_cast<double>(inside) / static_cast<double>(st.terminal_safe_prob.size());
    }
    plan.safe_feasible = !config.use_safe_set || plan.safe_frac + kFractionTolerance >= 1.0 - delta_ss;

    plan.violation_fracs.clear();
    for (const auto& step : st.step_violation_prob) {
      double frac = 0.0;
      if (!step.empty()) {
        if (config.constraint_rule == ConstraintRule::particle_threshold) {
          std::size_t bad = 0;
          for (double prob : step) bad += prob >= 0.5 ? 1 : 0;
          frac = static_cast<double>(bad) / static_cast<double>(step.size());
        } else {
          frac = std::accumulate(step.begin(), step.end(), 0.0) / static_cast<double>(step.size());
        }
      }
      plan.violation_fracs.push_back(frac);
    }
    plan.constraint_feasible = true;
    if (config.use_constraints) {
      for (double f : plan.violation_fracs) plan.constraint_feasible = plan.constraint_feasible && f <= config.delta_c + kFractionTolerance;
    }
    plan.score = plan.goal_sum + plan.terminal_value;
    if (!plan.feasible()) plan.score += config.infeasibility_penalty;
  }
  return out;
}

std::vector<CandidatePlan> score_candidates(const PlanObjective& objective, std::span<const Tensor> candidates,
                                            const PlanConfig& config, double delta_ss, std::uint64_t seed) {
  const auto stats = objective.evaluate(candidates, seed);
  return assess_candidates(candidates, stats, config, delta_ss);
}

namespace {

struct Gaussian {
  Tensor mean;
  Tensor variance;
};

Gaussian initial_distribution(const PlanConfig& cfg) {
  const double mid = 0.5 * (cfg.action_low + cfg.action_high);
  const double half = 0.5 * (cfg.action_high - cfg.action_low);
  return {Tensor({cfg.horizon, cfg.action_dim}, mid), Tensor({cfg.horizon, cfg.action_dim}, half * half)};
}

Tensor sample_gaussian(const Gaussian& g, const PlanConfig& cfg, std::span<const double> eps) {
  Tensor out(g.mean.shape());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = std::clamp(g.mean[i] + std::sqrt(g.variance[i]) * eps[i], cfg.action_low, cfg.action_high);
  }
  return out;
}

Tensor sample_uniform(const PlanConfig& cfg, Rng& rng) {
  Tensor out({cfg.horizon, cfg.action_dim});
  for (auto& v : out.data()) v = rng.uniform(cfg.action_low, cfg.action_high);
  return out;
}

std::vector<double> normal_draws(std::size_t n, Rng& rng) {
  std::vector<double> eps(n);
  for (auto& e : eps) e = rng.normal();
  return eps;
}

/// Candidate indices ranked by score, ties broken by content so the ranking
/// does not depend on candidate order.
std::vector<std::size_t> rank_candidates(const std::vector<CandidatePlan>& plans) {
  std::vector<std::size_t> order(plans.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<std::uint64_t> keys(plans.size());
  for (std::size_t i = 0; i < plans.size(); ++i) keys[i] = hash_doubles(0, plans[i].actions.data());
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (plans[a].score != plans[b].score) return plans[a].score > plans[b].score;
    return keys[a] < keys[b];
  });
  return order;
}

}  // namespace

PlanResult cem_solve(const PlanObjective& objective, const PlanConfig& config,
                     const std::optional<WarmStart>& warm_start, Rng& rng, WarmStart* next_warm_start) {
  config.validate();
  const std::size_t block = config.horizon * config.action_dim;
  if (warm_start && (warm_start->mean.size() != block || warm_start->variance.size() != block)) {
    throw std::invalid_argument("cem_solve: warm start has the wrong shape");
  }

  PlanResult result;
  PlanConfig active = config;
  double delta = config.delta_ss_init;
  result.delta_ss_history.push_back(delta);

  std::vector<Tensor> candidates;
  std::vector<RolloutStats> stats;
  std::vector<CandidatePlan> plans;
  Gaussian dist = initial_distribution(config);
  bool reuse_first_iteration = false;

  for (;;) {
    dist = initial_distribution(config);
    result.elite_mean_history.clear();
    std::vector<double> crn;
    if (config.common_random_numbers) crn = normal_draws(config.n_candidate * block, rng);
    bool restarted = false;

    for (std::size_t it = 0; it < config.n_cem_iters; ++it) {
      if (!(it == 0 && reuse_first_iteration)) {
        candidates.clear();
        if (it == 0) {
          const auto n_random = static_cast<std::size_t>(std::llround(config.p_random * static_cast<double>(config.n_candidate)));
          const Gaussian& seed_dist = warm_start ? Gaussian{warm_start->mean, warm_start->variance} : dist;
          for (std::size_t k = 0; k < config.n_candidate; ++k) {
            if (k < n_random) {
              candidates.push_back(sample_uniform(config, rng));
            } else {
              const auto eps = config.common_random_numbers
                                   ? std::vector<double>(crn.begin() + static_cast<std::ptrdiff_t>(k * block),
                                                         crn.begin() + static_cast<std::ptrdiff_t>((k + 1) * block))
                                   : normal_draws(block, rng);
              candidates.push_back(sample_gaussian(seed_dist, config, eps));
            }
          }
        } else {
          for (std::size_t k = 0; k < config.n_candidate; ++k) {
            const auto eps = config.common_random_numbers
                                 ? std::vector<double>(crn.begin() + static_cast<std::ptrdiff_t>(k * block),
                                                       crn.begin() + static_cast<std::ptrdiff_t>((k + 1) * block))
                                 : normal_draws(block, rng);
            candidates.push_back(sample_gaussian(dist, config, eps));
          }
        }
        stats = objective.evaluate(candidates, rng.next_u64());
      }
      reuse_first_iteration = false;
      plans = assess_candidates(candidates, stats, active, delta);

      std::size_t feasible = 0, safe_feasible = 0;
      for (const auto& p : plans) {
        feasible += p.feasible() ? 1 : 0;
        safe_feasible += p.safe_feasible ? 1 : 0;
      }
      result.feasible_counts.push_back(feasible);

      if (active.use_safe_set && safe_feasible == 0) {
        result.delta_ss_decays += 1;
        delta = config.delta_ss_init * std::pow(config.delta_ss_decay, result.delta_ss_decays);
        result.delta_ss_history.push_back(delta);
        if (delta < config.delta_ss_floor) {
          result.safe_set_fallback = true;
          active.use_safe_set = false;
        }
        // The restarted optimizer's first iteration draws from the same
        // distribution, so a failure at iteration 0 reuses its candidates.
        reuse_first_iteration = it == 0;
        restarted = true;
        break;
      }

      const auto order = rank_candidates(plans);
      const std::size_t ne = config.n_elite;
      Gaussian refit{Tensor(dist.mean.shape(), 0.0), Tensor(dist.mean.shape(), 0.0)};
      double elite_sum = 0.0;
      for (std::size_t e = 0; e < ne; ++e) {
        const auto& acts = plans[order[e]].actions;
        for (std::size_t i = 0; i < block; ++i) refit.mean[i] += acts[i] / static_cast<double>(ne);
        elite_sum += plans[order[e]].score;
      }
      for (std::size_t e = 0; e < ne; ++e) {
        const auto& acts = plans[order[e]].actions;
        for (std::size_t i = 0; i < block; ++i) {
          const double diff = acts[i] - refit.mean[i];
          refit.variance[i] += diff * diff / static_cast<double>(ne);
        }
      }
      result.elite_mean_history.push_back(elite_sum / static_cast<double>(ne));
      result.elite_mean_score = elite_sum / static_cast<double>(ne);
      result.elite_max_score = plans[order.front()].score;
      dist = std::move(refit);
    }
    if (!restarted) break;
  }

  const auto order = rank_candidates(plans);
  const auto& best = plans[order.front()];
  result.best_actions = best.actions;
  result.best_score = best.score;
  result.best_safe_frac = best.safe_frac;
  result.action.assign(best.actions.row(0).begin(), best.actions.row(0).end());
  result.final_delta_ss = delta;

  if (next_warm_start) {
    const double mid = 0.5 * (config.action_low + config.action_high);
    const double half = 0.5 * (config.action_high - config.action_low);
    WarmStart ws{Tensor(dist.mean.shape(), mid), Tensor(dist.mean.shape(), half * half)};
    for (std::size_t k = 0; k + 1 < config.horizon; ++k) {
      for (std::size_t j = 0; j < config.action_dim; ++j) {
        ws.mean(k, j) = dist.mean(k + 1, j);
        ws.variance(k, j) = dist.variance(k + 1, j);
      }
    }
    *next_warm_start = std::move(ws);
  }
  return result;
}

ActResult act(const ModelBundle& models, const Observation& observation, const PlanConfig& config,
              const std::optional<WarmStart>& warm_start, Rng& rng) {
  const LatentState z = models.encoder.encode(observation, rng, config.stochastic_encoding);
  const LatentPlanObjective objective(models, z.z, config);
  ActResult out;
  out.plan = cem_solve(objective, config, warm_start, rng, &out.warm_start);
  out.action = {out.plan.action.at(0), out.plan.action.size() > 1 ? out.plan.action[1] : 0.0};
  for (auto& v : out.action) v = std::clamp(v, config.action_low, config.action_high);
  return out;
}

}  // namespace ls3
