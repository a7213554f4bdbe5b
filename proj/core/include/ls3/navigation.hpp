#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <string_view>
#include <vector>

#include "ls3/rng.hpp"
#include "ls3/tensor.hpp"

namespace ls3 {

using Vec2 = std::array<double, 2>;

struct Rect {
  double x_min = 0, x_max = 0, y_min = 0, y_max = 0;

  bool contains(const Vec2& p) const noexcept {
    return p[0] >= x_min && p[0] <= x_max && p[1] >= y_min && p[1] <= y_max;
  }
  Vec2 center() const noexcept { return {0.5 * (x_min + x_max), 0.5 * (y_min + y_max)}; }
  Vec2 clamp(const Vec2& p) const noexcept;
};

enum class ObsMode { state_vector, raster };

std::string_view to_string(ObsMode m) noexcept;
ObsMode parse_obs_mode(std::string_view s);

// Palette for raster observations.
inline constexpr double kObstacleIntensity = 0.33;
inline constexpr double kGoalIntensity = 0.66;
inline constexpr double kAgentIntensity = 1.0;

/// Pointmass navigation task: single integrator with additive gaussian noise,
/// sparse reward, and a rectangular obstacle that freezes the agent on contact.
struct NavigationConfig {
  Rect workspace{0.0, 180.0, 0.0, 150.0};
  Vec2 start{30.0, 75.0};
  Vec2 goal_center{150.0, 75.0};
  double goal_radius = 3.0;
  Rect obstacle{60.0, 120.0, 20.0, 100.0};
  double noise_sigma = 0.125;
  int horizon = 100;
  double max_speed = 3.0;
  ObsMode obs_mode = ObsMode::raster;
  std::size_t raster_size = 16;
  double agent_radius = 25.0;

  void validate() const;
  std::size_t observation_dim() const noexcept;
  std::vector<std::size_t> observation_shape() const;
  bool in_goal(const Vec2& p) const noexcept;
};

struct EnvState {
  Vec2 position{};
  int t = 0;
  bool frozen = false;     // set on constraint violation; implies violated
  bool violated = false;
  bool succeeded = false;  // latches on first goal arrival; the goal is absorbing afterwards
};

using Observation = Tensor;

struct StepResult {
  EnvState state;
  Observation obs;
  double reward = -1.0;
  bool violation = false;
  bool in_goal = false;
};

Observation render_raster(const Vec2& position, const NavigationConfig& config);
Observation observe(const Vec2& position, const NavigationConfig& config);

/// Start state; the initial distribution is a point mass so `rng` is unused.
std::pair<EnvState, Observation> reset(const NavigationConfig& config, Rng& rng);
std::pair<EnvState, Observation> reset_at(const NavigationConfig& config, const Vec2& position);

Vec2 clip_action(const Vec2& action, const NavigationConfig& config) noexcept;

StepResult step(const EnvState& state, const Vec2& action, const NavigationConfig& config, Rng& rng);

/// Scripted demonstrator: north for 20 steps, east for 40, then straight to the goal.
Vec2 demo_policy(const EnvState& state, const NavigationConfig& config);

/// Constraint demonstrator: a fixed random heading for 15 steps, then straight
/// at the obstacle center. The heading is drawn once at construction.
class ConstraintDemoPolicy {
 public:
  ConstraintDemoPolicy(const NavigationConfig& config, Rng& phase_rng);
  Vec2 operator()(const EnvState& state) const;
  Vec2 heading() const noexcept { return heading_; }

  static constexpr int kRandomPhaseSteps = 15;

 private:
  NavigationConfig config_;
  Vec2 heading_;
};

/// Uniform start position outside the obstacle and the goal ball.
Vec2 sample_free_position(const NavigationConfig& config, Rng& rng);

Vec2 random_policy(const NavigationConfig& config, Rng& rng);

struct Transition {
  Observation obs;
  Vec2 action{};
  Observation next_obs;
  double reward = -1.0;
  bool constraint_violation = false;
  bool in_goal = false;
  std::int64_t trajectory_id = 0;
  int step_index = 0;
  bool in_success_trajectory = false;
};

using Policy = std::function<Vec2(const EnvState&, const Observation&)>;

struct Trajectory {
  std::vector<Transition> transitions;
  bool success = false;
  bool violation = false;
  int steps_to_goal = -1;  // index of the first goal-reaching transition, -1 if never
  double total_reward = 0.0;
};

/// Rolls `policy` for exactly `horizon` steps. Once the agent is frozen or has
/// reached the goal the policy is no longer queried and zero actions pad the
/// episode.
Trajectory collect_trajectory(const Policy& policy, const NavigationConfig& config, Rng& rng,
                              std::int64_t trajectory_id, std::optional<Vec2> start = std::nullopt);

}  // namespace ls3
