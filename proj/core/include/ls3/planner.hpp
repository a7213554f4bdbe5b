#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "ls3/bundle.hpp"
#include "ls3/navigation.hpp"
#include "ls3/rng.hpp"
#include "ls3/tensor.hpp"

namespace ls3 {

enum class ConstraintRule {
  particle_threshold,  // fraction of particles with f_C >= 0.5
  mean_probability,    // mean of f_C over particles
};

std::string_view to_string(ConstraintRule r) noexcept;
ConstraintRule parse_constraint_rule(std::string_view s);

struct PlanConfig {
  std::size_t horizon = 5;
  std::size_t n_candidate = 1000;
  std::size_t n_elite = 100;
  std::size_t n_cem_iters = 5;
  std::size_t n_particle = 20;
  double p_random = 1.0;
  double delta_c = 0.2;
  double delta_ss_init = 0.8;
  double delta_ss_decay = 0.8;
  double delta_ss_floor = 1e-3;
  std::size_t action_dim = 2;
  double action_low = -3.0;
  double action_high = 3.0;
  bool use_safe_set = true;
  bool use_constraints = true;
  double infeasibility_penalty = -1e4;
  ConstraintRule constraint_rule = ConstraintRule::particle_threshold;
  bool stochastic_encoding = true;
  bool shared_particle_noise = true;   // every candidate sees the same particle draws
  bool common_random_numbers = false;  // reuse one set of standard-normal draws across CEM iterations

  void validate() const;
};

/// Per-candidate rollout summary produced by a PlanObjective. The fractions
/// that decide feasibility are derived from these by assess_candidates.
struct RolloutStats {
  double goal_sum = 0.0;        // particle mean of sum_{i=1}^{H-1} f_G(z_{t+i})
  double terminal_value = 0.0;  // particle mean of V(z_{t+H})
  std::vector<double> terminal_safe_prob;               // f_S(z_{t+H}) per particle
  std::vector<std::vector<double>> step_violation_prob;  // [i][particle] f_C(z_{t+i}), i = 0..H-1
};

/// Anything that can roll action sequences forward and summarize them.
class PlanObjective {
 public:
  virtual ~PlanObjective() = default;
  /// `seed` keys the randomness; each candidate must derive its own stream
  /// from the seed and its content so results do not depend on candidate order.
  virtual std::vector<RolloutStats> evaluate(std::span<const Tensor> candidates, std::uint64_t seed) const = 0;
};

/// TS-1 particle rollouts over a ModelBundle from a fixed start latent.
class LatentPlanObjective final : public PlanObjective {
 public:
  LatentPlanObjective(const ModelBundle& models, Tensor z0, const PlanConfig& config);
  std::vector<RolloutStats> evaluate(std::span<const Tensor> candidates, std::uint64_t seed) const override;

 private:
  const ModelBundle& models_;
  Tensor z0_;
  PlanConfig config_;
};

struct CandidatePlan {
  Tensor actions;  // (H, action_dim)
  double score = 0.0;
  double goal_sum = 0.0;
  double terminal_value = 0.0;
  double safe_frac = 0.0;
  std::vector<double> violation_fracs;
  bool safe_feasible = true;
  bool constraint_feasible = true;

  bool feasible() const noexcept { return safe_feasible && constraint_feasible; }
};

/// Applies the chance constraints at safe-set level `delta_ss` and the
/// infeasibility penalty to already-computed rollout statistics.
std::vector<CandidatePlan> assess_candidates(std::span<const Tensor> candidates,
                                             std::span<const RolloutStats> stats, const PlanConfig& config,
                                             double delta_ss);

std::vector<CandidatePlan> score_candidates(const PlanObjective& objective, std::span<const Tensor> candidates,
                                            const PlanConfig& config, double delta_ss, std::uint64_t seed);

/// Previous solve's sampling distribution shifted forward one step.
struct WarmStart {
  Tensor mean;      // (H, action_dim)
  Tensor variance;  // (H, action_dim)
};

struct PlanResult {
  std::vector<double> action;
  Tensor best_actions;
  double best_score = 0.0;
  double best_safe_frac = 0.0;
  double final_delta_ss = 0.0;
  int delta_ss_decays = 0;
  std::vector<double> delta_ss_history;  // every level tried, starting with the initial one
  bool safe_set_fallback = false;        // decayed below the floor; safe set ignored
  double elite_mean_score = 0.0;
  double elite_max_score = 0.0;
  std::vector<double> elite_mean_history;  // per iteration of the final attempt
  std::vector<std::size_t> feasible_counts;  // per scored iteration, all attempts
};

PlanResult cem_solve(const PlanObjective& objective, const PlanConfig& config,
                     const std::optional<WarmStart>& warm_start, Rng& rng, WarmStart* next_warm_start = nullptr);

struct ActResult {
  Vec2 action{};
  PlanResult plan;
  WarmStart warm_start;
};

/// Encodes the observation, solves the planning problem and returns the first action.
ActResult act(const ModelBundle& models, const Observation& observation, const PlanConfig& config,
              const std::optional<WarmStart>& warm_start, Rng& rng);

}  // namespace ls3
