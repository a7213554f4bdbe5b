#pragma once

#include <filesystem>
#include <string>

#include "ls3/orchestrator.hpp"

namespace ls3::fixtures {

/// Seconds-scale configuration: a handful of demos, tiny networks, minimal planner.
inline RunConfig tiny_config() {
  RunConfig c;
  c.latent.encoder.hidden_dims = {16};
  c.latent.encoder.latent_dim = 4;
  c.latent.vae_epochs = 2;
  c.latent.vae_lr = 1e-3;
  c.models.dynamics.ensemble_size = 2;
  c.models.dynamics.hidden_dims = {16};
  c.models.value.hidden_dims = {16};
  c.models.classifier_hidden = {16};
  c.planner.n_candidate = 16;
  c.planner.n_elite = 4;
  c.planner.n_cem_iters = 2;
  c.planner.n_particle = 4;
  c.planner.p_random = 0.3;
  c.data.n_demo_success = 4;
  c.data.n_demo_constraint = 4;
  c.train.offline_steps = 20;
  c.train.round_dynamics_steps = 5;
  c.train.round_classifier_steps = 5;
  c.train.round_value_steps = 5;
  c.train.ss_refit_interval = 5;
  c.train.batch_size = 32;
  c.run.rounds = 1;
  c.run.rollouts_per_round = 2;
  c.run.eval_episodes = 2;
  return c;
}

inline std::filesystem::path scratch_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("ls3_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace ls3::fixtures
