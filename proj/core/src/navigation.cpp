#include "ls3/navigation.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace ls3 {

Vec2 Rect::clamp(const Vec2& p) const noexcept {
  return {std::clamp(p[0], x_min, x_max), std::clamp(p[1], y_min, y_max)};
}

std::string_view to_string(ObsMode m) noexcept {
  return m == ObsMode::raster ? "raster" : "state_vector";
}

ObsMode parse_obs_mode(std::string_view s) {
  if (s == "raster") return ObsMode::raster;
  if (s == "state_vector") return ObsMode::state_vector;
  throw std::invalid_argument("unknown obs_mode '" + std::string(s) + "'");
}

void NavigationConfig::validate() const {
  if (!(workspace.x_min < workspace.x_max && workspace.y_min < workspace.y_max)) {
    throw std::invalid_argument("env.workspace must be a non-empty rectangle");
  }
  if (horizon < 1) throw std::invalid_argument("env.horizon must be >= 1");
  if (noise_sigma < 0) throw std::invalid_argument("env.noise_sigma must be >= 0");
  if (max_speed <= 0) throw std::invalid_argument("env.max_speed must be > 0");
  if (goal_radius <= 0) throw std::invalid_argument("env.goal_radius must be > 0");
  if (raster_size < 2) throw std::invalid_argument("env.raster_size must be >= 2");
  if (obstacle.contains(start)) throw std::invalid_argument("env.start lies inside the obstacle");
  if (obstacle.contains(goal_center)) throw std::invalid_argument("env.goal_center lies inside the obstacle");
  if (!workspace.contains(start)) throw std::invalid_argument("env.start lies outside the workspace");
  if (goal_center[0] - goal_radius < workspace.x_min || goal_center[0] + goal_radius > workspace.x_max ||
      goal_center[1] - goal_radius < workspace.y_min || goal_center[1] + goal_radius > workspace.y_max) {
    throw std::invalid_argument("env goal ball must lie inside the workspace");
  }
}

std::size_t NavigationConfig::observation_dim() const noexcept {
  return obs_mode == ObsMode::raster ? raster_size * raster_size : 2;
}

std::vector<std::size_t> NavigationConfig::observation_shape() const {
  if (obs_mode == ObsMode::raster) return {raster_size, raster_size};
  return {2};
}

bool NavigationConfig::in_goal(const Vec2& p) const noexcept {
  return std::hypot(p[0] - goal_center[0], p[1] - goal_center[1]) <= goal_radius;
}

Observation render_raster(const Vec2& position, const NavigationConfig& config) {
  const std::size_t g = config.raster_size;
  const auto& ws = config.workspace;
  const double cw = (ws.x_max - ws.x_min) / static_cast<double>(g);
  const double ch = (ws.y_max - ws.y_min) / static_cast<double>(g);
  // disk edge is ramped over one cell so the image moves continuously with the agent
  const double edge = std::max(cw, ch);
  Tensor img({g, g});
  // Row 0 is the top edge (largest y).
  for (std::size_t r = 0; r < g; ++r) {
    const double y1 = ws.y_max - static_cast<double>(r) * ch;
    const double y0 = y1 - ch;
    const double yc = 0.5 * (y0 + y1);
    for (std::size_t c = 0; c < g; ++c) {
      const double x0 = ws.x_min + static_cast<double>(c) * cw;
      const double x1 = x0 + cw;
      const double xc = 0.5 * (x0 + x1);
      double v = 0.0;
      if (config.obstacle.contains({xc, yc})) v = kObstacleIntensity;
      const double nx = std::clamp(config.goal_center[0], x0, x1);
      const double ny = std::clamp(config.goal_center[1], y0, y1);
      if (std::hypot(nx - config.goal_center[0], ny - config.goal_center[1]) <= config.goal_radius) {
        v = kGoalIntensity;
      }
      const double d = std::hypot(xc - position[0], yc - position[1]);
      v = std::max(v, kAgentIntensity * std::clamp((config.agent_radius - d) / edge + 0.5, 0.0, 1.0));
      img(r, c) = v;
    }
  }
  // The cell holding the agent is always lit, whatever the disk radius.
  const auto col = static_cast<std::size_t>(
      std::clamp((position[0] - ws.x_min) / cw, 0.0, static_cast<double>(g) - 1.0));
  const auto row = static_cast<std::size_t>(
      std::clamp((ws.y_max - position[1]) / ch, 0.0, static_cast<double>(g) - 1.0));
  img(row, col) = kAgentIntensity;
  return img;
}

Observation observe(const Vec2& position, const NavigationConfig& config) {
  if (config.obs_mode == ObsMode::raster) return render_raster(position, config);
  return Tensor::vector({position[0], position[1]});
}

std::pair<EnvState, Observation> reset(const NavigationConfig& config, Rng& /*rng*/) {
  return reset_at(config, config.start);
}

std::pair<EnvState, Observation> reset_at(const NavigationConfig& config, const Vec2& position) {
  EnvState s;
  s.position = position;
  return {s, observe(position, config)};
}

Vec2 clip_action(const Vec2& action, const NavigationConfig& config) noexcept {
  return {std::clamp(action[0], -config.max_speed, config.max_speed),
          std::clamp(action[1], -config.max_speed, config.max_speed)};
}

StepResult step(const EnvState& state, const Vec2& action, const NavigationConfig& config, Rng& rng) {
  if (state.t >= config.horizon) {
    throw std::logic_error("step called at t=" + std::to_string(state.t) + " >= horizon " +
                           std::to_string(config.horizon));
  }
  StepResult out;
  out.state = state;
  out.state.t = state.t + 1;
  if (state.frozen) {
    out.reward = -1.0;
    out.violation = true;
    out.obs = observe(state.position, config);
    return out;
  }
  if (state.succeeded) {
    out.reward = 0.0;
    out.in_goal = true;
    out.obs = observe(state.position, config);
    return out;
  }
  const Vec2 a = clip_action(action, config);
  Vec2 next{state.position[0] + a[0], state.position[1] + a[1]};
  if (config.noise_sigma > 0.0) {
    next[0] += config.noise_sigma * rng.normal();
    next[1] += config.noise_sigma * rng.normal();
  }
  next = config.workspace.clamp(next);
  out.state.position = next;
  if (config.obstacle.contains(next)) {
    out.state.violated = true;
    out.state.frozen = true;
    out.violation = true;
  } else if (config.in_goal(next)) {
    out.state.succeeded = true;
    out.in_goal = true;
  }
  out.reward = out.in_goal ? 0.0 : -1.0;
  out.obs = observe(next, config);
  return out;
}

namespace {

Vec2 toward(const Vec2& from, const Vec2& to, double speed) {
  const double dx = to[0] - from[0], dy = to[1] - from[1];
  const double dist = std::hypot(dx, dy);
  if (dist <= 0.0) return {0.0, 0.0};
  const double mag = std::min(speed, dist);
  return {dx / dist * mag, dy / dist * mag};
}

}  // namespace

Vec2 demo_policy(const EnvState& state, const NavigationConfig& config) {
  const double s = config.max_speed;
  if (state.t < 20) return {0.0, s};
  if (state.t < 60) return {s, 0.0};
  return toward(state.position, config.goal_center, s);
}

ConstraintDemoPolicy::ConstraintDemoPolicy(const NavigationConfig& config, Rng& phase_rng)
    : config_(config) {
  const double theta = phase_rng.uniform(0.0, 2.0 * std::numbers::pi);
  heading_ = {std::cos(theta), std::sin(theta)};
}

Vec2 ConstraintDemoPolicy::operator()(const EnvState& state) const {
  const double s = config_.max_speed;
  if (state.t < kRandomPhaseSteps) return {heading_[0] * s, heading_[1] * s};
  const Vec2 c = config_.obstacle.center();
  const double dx = c[0] - state.position[0], dy = c[1] - state.position[1];
  const double dist = std::hypot(dx, dy);
  if (dist <= 0.0) return {0.0, 0.0};
  return {dx / dist * s, dy / dist * s};
}

Vec2 sample_free_position(const NavigationConfig& config, Rng& rng) {
  const auto& ws = config.workspace;
  for (;;) {
    Vec2 p{rng.uniform(ws.x_min, ws.x_max), rng.uniform(ws.y_min, ws.y_max)};
    if (!config.obstacle.contains(p) && !config.in_goal(p)) return p;
  }
}

Vec2 random_policy(const NavigationConfig& config, Rng& rng) {
  return {rng.uniform(-config.max_speed, config.max_speed),
          rng.uniform(-config.max_speed, config.max_speed)};
}

Trajectory collect_trajectory(const Policy& policy, const NavigationConfig& config, Rng& rng,
                              std::int64_t trajectory_id, std::optional<Vec2> start) {
  auto [state, obs] = start ? reset_at(config, *start) : reset(config, rng);
  Trajectory traj;
  traj.transitions.reserve(static_cast<std::size_t>(config.horizon));
  for (int t = 0; t < config.horizon; ++t) {
    const bool padding = state.frozen || state.succeeded;
    const Vec2 action = padding ? Vec2{0.0, 0.0} : clip_action(policy(state, obs), config);
    StepResult res = step(state, action, config, rng);
    Transition tr;
    tr.obs = std::move(obs);
    tr.action = action;
    tr.next_obs = res.obs;
    tr.reward = res.reward;
    tr.constraint_violation = res.violation;
    tr.in_goal = res.in_goal;
    tr.trajectory_id = trajectory_id;
    tr.step_index = t;
    traj.total_reward += res.reward;
    if (res.in_goal && traj.steps_to_goal < 0) traj.steps_to_goal = t;
    traj.transitions.push_back(std::move(tr));
    state = res.state;
    obs = std::move(res.obs);
  }
  traj.violation = state.violated;
  traj.success = state.succeeded && !state.violated;
  for (auto& tr : traj.transitions) tr.in_success_trajectory = traj.success;
  return traj;
}

}  // namespace ls3
