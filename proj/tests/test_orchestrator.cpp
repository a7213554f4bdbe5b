#include <stdexcept>

#include "doctest.h"
#include "fixtures.hpp"
#include "oracle.hpp"

#include "ls3/orchestrator.hpp"

using namespace ls3;

TEST_SUITE("orchestrator") {

TEST_CASE("offline collection yields the requested demonstrations") {
  RunConfig c = fixtures::tiny_config();
  c.data.n_rand = 2;
  Rng rng(0);
  Dataset d = collect_offline(c, rng);
  CHECK(d.count_trajectories(TrajectorySource::demo) == 4);
  CHECK(d.count_trajectories(TrajectorySource::constraint_demo) == 4);
  CHECK(d.count_trajectories(TrajectorySource::random) == 2);
  for (const auto& t : d.trajectories()) {
    if (t.source == TrajectorySource::demo) CHECK(t.success);
    if (t.source == TrajectorySource::constraint_demo) CHECK(t.violation);
    CHECK(t.round == 0);
  }
  CHECK(d.size() == 10 * static_cast<std::size_t>(c.env.horizon));
}

TEST_CASE("latent cache in identity mode holds the raw observations") {
  RunConfig c = fixtures::tiny_config();
  c.latent.mode = EncoderMode::identity;
  c.env.obs_mode = ObsMode::state_vector;
  Rng rng(1);
  Dataset d = collect_offline(c, rng);
  ModelBundle m = make_bundle(c, rng);
  LatentCache cache(m.encoder.latent_dim());
  cache.extend(m.encoder, d);
  CHECK(cache.size() == d.size());
  std::vector<std::size_t> idx{0, 7, d.size() - 1};
  Tensor z = cache.sample_obs(idx, rng);
  for (std::size_t r = 0; r < idx.size(); ++r)
    for (std::size_t j = 0; j < 2; ++j) CHECK(z(r, j) == d.transitions()[idx[r]].obs[j]);
  std::vector<std::size_t> bad{d.size()};
  CHECK_THROWS(cache.mean_next(bad));
}

TEST_CASE("offline training then one round extends the dataset") {
  RunConfig c = fixtures::tiny_config();
  Rng rng(2);
  Dataset d = collect_offline(c, rng);
  const std::size_t before = d.size();
  Learner l = train_offline(d, c, rng);
  CHECK(l.cache.size() == before);
  CHECK(l.models.value.updates_since_sync() == 0);
  RoundResult r = run_round(l, d, c, 1, 5);
  CHECK(r.episodes.size() == 2);
  CHECK(d.size() == before + 2 * static_cast<std::size_t>(c.env.horizon));
  CHECK(l.cache.size() == d.size());
  CHECK(d.count_trajectories(TrajectorySource::online) == 2);
  CHECK(std::isfinite(r.fit.dynamics_nll));
  CHECK_THROWS(run_round(l, d, c, 0, 5));
}

TEST_CASE("planned episodes are reproducible from their seed") {
  RunConfig c = fixtures::tiny_config();
  Rng rng(3);
  Dataset d = collect_offline(c, rng);
  Learner l = train_offline(d, c, rng);
  auto [t1, r1] = planned_episode(l.models, c, c.planner, 42, 0);
  auto [t2, r2] = planned_episode(l.models, c, c.planner, 42, 0);
  CHECK(t1.total_reward == t2.total_reward);
  REQUIRE(t1.transitions.size() == t2.transitions.size());
  for (std::size_t i = 0; i < t1.transitions.size(); ++i) CHECK(t1.transitions[i].action == t2.transitions[i].action);
  CHECK(r1.planned_steps > 0);
}

TEST_CASE("evaluation rates and standard error") {
  RunConfig c = fixtures::tiny_config();
  Rng rng(4);
  Dataset d = collect_offline(c, rng);
  Learner l = train_offline(d, c, rng);
  EvalSummary s = evaluate(l.models, c, 3, 9);
  CHECK(s.episodes == 3);
  CHECK(s.records.size() == 3);
  CHECK((s.success_rate >= 0.0 && s.success_rate <= 1.0));
  std::vector<double> one{-5.0};
  CHECK(standard_error(one) == 0.0);
  std::vector<double> v{1.0, 2.0, 3.0, 4.0};
  CHECK(standard_error(v) == doctest::Approx(std::sqrt(5.0 / 3.0) / 2.0));
}

TEST_CASE("run config validation names the key") {
  RunConfig c = fixtures::tiny_config();
  c.models.gamma_ss = 1.5;
  try {
    c.validate();
    FAIL("expected a throw");
  } catch (const std::invalid_argument& e) {
    CHECK(std::string(e.what()).find("models.gamma_ss") != std::string::npos);
  }
}

}
