#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "doctest.h"

#include "ls3/navigation.hpp"

using namespace ls3;

namespace {
NavigationConfig quiet() {
  NavigationConfig c;
  c.noise_sigma = 0.0;
  return c;
}
}  // namespace

TEST_SUITE("navigation") {

TEST_CASE("actions are clipped per coordinate") {
  NavigationConfig c;
  const Vec2 a = clip_action({10.0, -0.5}, c);
  CHECK(a[0] == 3.0);
  CHECK(a[1] == -0.5);
}

TEST_CASE("noise-free step is exact and costs one") {
  NavigationConfig c = quiet();
  Rng rng(0);
  auto [s, o] = reset(c, rng);
  auto r = step(s, {1.0, -2.0}, c, rng);
  CHECK(r.state.position[0] == 31.0);
  CHECK(r.state.position[1] == 73.0);
  CHECK(r.reward == -1.0);
  CHECK(r.state.t == 1);
}

TEST_CASE("workspace walls clamp the position") {
  NavigationConfig c = quiet();
  Rng rng(0);
  auto [s, o] = reset_at(c, {1.0, 149.0});
  auto r = step(s, {-3.0, 3.0}, c, rng);
  CHECK(r.state.position[0] == 0.0);
  CHECK(r.state.position[1] == 150.0);
}

TEST_CASE("entering the obstacle freezes the agent for good") {
  NavigationConfig c = quiet();
  Rng rng(0);
  auto [s, o] = reset_at(c, {58.5, 60.0});
  auto r = step(s, {3.0, 0.0}, c, rng);
  REQUIRE(r.violation);
  REQUIRE(r.state.frozen);
  const Vec2 p = r.state.position;
  EnvState st = r.state;
  for (int k = 0; k < 10; ++k) {
    auto n = step(st, {-3.0, 3.0}, c, rng);
    CHECK(n.state.position == p);
    CHECK(n.violation);
    CHECK(n.reward == -1.0);
    st = n.state;
  }
}

TEST_CASE("the goal is absorbing with zero reward") {
  NavigationConfig c = quiet();
  Rng rng(0);
  auto [s, o] = reset_at(c, {146.0, 75.0});
  auto r = step(s, {2.0, 0.0}, c, rng);
  REQUIRE(r.in_goal);
  CHECK(r.reward == 0.0);
  auto n = step(r.state, {-3.0, 0.0}, c, rng);
  CHECK(n.state.position == r.state.position);
  CHECK(n.reward == 0.0);
}

TEST_CASE("stepping past the horizon is an error") {
  NavigationConfig c = quiet();
  Rng rng(0);
  EnvState s;
  s.t = c.horizon;
  CHECK_THROWS_AS(step(s, {0, 0}, c, rng), std::logic_error);
}

TEST_CASE("raster palette and agent cell") {
  NavigationConfig c;
  c.agent_radius = 0.0;
  Observation img = render_raster(c.start, c);
  CHECK(img.shape() == std::vector<std::size_t>{16, 16});
  int obstacle = 0, goal = 0, agent = 0;
  for (double v : img.data()) {
    obstacle += v == kObstacleIntensity;
    goal += v == kGoalIntensity;
    agent += v == kAgentIntensity;
  }
  CHECK(obstacle > 0);
  CHECK(goal > 0);
  CHECK(agent == 1);
  // start (30, 75) sits in column 2, row 8 of a 16x16 grid over 180x150
  CHECK(img(8, 2) == kAgentIntensity);
}

TEST_CASE("raster changes continuously with the agent position") {
  NavigationConfig c;
  const double edge = std::max(180.0 / 16, 150.0 / 16);
  const double dx = 0.5;
  for (double x = 20.0; x < 50.0; x += 3.7) {
    const Observation a = render_raster({x, 75.0}, c);
    const Observation b = render_raster({x + dx, 75.0}, c);
    double worst = 0.0, total = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      worst = std::max(worst, std::abs(a[i] - b[i]));
      total += std::abs(a[i] - b[i]);
    }
    CHECK(worst <= dx / edge + 1e-12);
    CHECK(total > 0.0);
  }
}

TEST_CASE("state-vector observations are positions") {
  NavigationConfig c;
  c.obs_mode = ObsMode::state_vector;
  CHECK(observe({1.5, 2.5}, c).values() == std::vector<double>{1.5, 2.5});
  CHECK(c.observation_dim() == 2);
}

TEST_CASE("noise-free demonstrator reaches the goal around the obstacle") {
  NavigationConfig c = quiet();
  Rng rng(0);
  Trajectory t = collect_trajectory([&](const EnvState& s, const Observation&) { return demo_policy(s, c); }, c, rng, 0);
  CHECK(t.success);
  CHECK_FALSE(t.violation);
  CHECK(t.steps_to_goal >= 0);
  CHECK(t.steps_to_goal < 90);
  CHECK(t.transitions.size() == static_cast<std::size_t>(c.horizon));
  CHECK(t.total_reward == doctest::Approx(-t.steps_to_goal));
}

TEST_CASE("constraint demonstrator ends in the obstacle") {
  NavigationConfig c;
  int hits = 0;
  for (int k = 0; k < 20; ++k) {
    Rng phase(k), rng(100 + k);
    ConstraintDemoPolicy pol(c, phase);
    Trajectory t = collect_trajectory([&](const EnvState& s, const Observation&) { return pol(s); }, c, rng, k);
    hits += t.violation;
  }
  CHECK(hits >= 18);
}

TEST_CASE("free positions avoid the obstacle and the goal") {
  NavigationConfig c;
  Rng rng(3);
  for (int k = 0; k < 500; ++k) {
    const Vec2 p = sample_free_position(c, rng);
    CHECK_FALSE(c.obstacle.contains(p));
    CHECK_FALSE(c.in_goal(p));
  }
}

TEST_CASE("config validation rejects a start inside the obstacle") {
  NavigationConfig c;
  c.start = c.obstacle.center();
  CHECK_THROWS(c.validate());
}

}
