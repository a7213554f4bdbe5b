#include "ls3/config.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

extern char** environ;

namespace ls3 {

using nlohmann::json;

namespace {

/// Walks one JSON object, converting fields by name and remembering which
/// keys were consumed so leftovers can be reported.
class Section {
 public:
  Section(const json& doc, std::string path) : path_(std::move(path)) {
    if (doc.contains(path_)) {
      node_ = &doc.at(path_);
      if (!node_->is_object()) throw ConfigError(path_ + ": expected an object");
    }
  }

  template <typename T>
  void read(const char* key, T& out) {
    if (!node_) return;
    const auto it = node_->find(key);
    if (it == node_->end()) return;
    seen_.insert(key);
    try {
      convert(*it, out);
    } catch (const ConfigError& e) {
      throw ConfigError(path_ + "." + key + ": " + e.what());
    } catch (const json::exception&) {
      throw ConfigError(path_ + "." + key + ": wrong type (" + std::string(it->type_name()) + ")");
    } catch (const std::invalid_argument& e) {
      throw ConfigError(path_ + "." + key + ": " + e.what());
    }
  }

  void require(const char* key) const {
    if (!node_ || !node_->contains(key)) throw ConfigError("missing required key " + path_ + "." + key);
  }

  void finish() const {
    if (!node_) return;
    for (const auto& [k, v] : node_->items()) {
      if (!seen_.count(k)) throw ConfigError("unknown key " + path_ + "." + k);
    }
  }

 private:
  static void convert(const json& j, double& out) {
    if (!j.is_number()) throw ConfigError("expected a number");
    out = j.get<double>();
  }
  static void convert(const json& j, bool& out) {
    if (!j.is_boolean()) throw ConfigError("expected true or false");
    out = j.get<bool>();
  }
  static void convert(const json& j, int& out) {
    if (!j.is_number_integer()) throw ConfigError("expected an integer");
    out = j.get<int>();
  }
  static void convert(const json& j, std::size_t& out) {
    if (!j.is_number_integer() || j.get<long long>() < 0) throw ConfigError("expected a non-negative integer");
    out = j.get<std::size_t>();
  }
  static void convert(const json& j, std::vector<std::size_t>& out) {
    if (!j.is_array()) throw ConfigError("expected an array of integers");
    std::vector<std::size_t> v;
    for (const auto& e : j) {
      if (!e.is_number_integer() || e.get<long long>() < 1) throw ConfigError("layer widths must be integers >= 1");
      v.push_back(e.get<std::size_t>());
    }
    out = std::move(v);
  }
  static void convert(const json& j, Vec2& out) {
    if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
      throw ConfigError("expected [x, y]");
    }
    out = {j[0].get<double>(), j[1].get<double>()};
  }
  static void convert(const json& j, Rect& out) {
    if (!j.is_array() || j.size() != 4) throw ConfigError("expected [x_min, x_max, y_min, y_max]");
    for (const auto& e : j) {
      if (!e.is_number()) throw ConfigError("expected [x_min, x_max, y_min, y_max]");
    }
    out = {j[0].get<double>(), j[1].get<double>(), j[2].get<double>(), j[3].get<double>()};
  }
  static std::string text(const json& j) {
    if (!j.is_string()) throw ConfigError("expected a string");
    return j.get<std::string>();
  }
  static void convert(const json& j, ObsMode& out) { out = parse_obs_mode(text(j)); }
  static void convert(const json& j, Activation& out) { out = parse_activation(text(j)); }
  static void convert(const json& j, ConstraintRule& out) { out = parse_constraint_rule(text(j)); }
  static void convert(const json& j, EncoderMode& out) {
    const auto s = text(j);
    if (s == "learned") out = EncoderMode::learned;
    else if (s == "identity") out = EncoderMode::identity;
    else throw ConfigError("expected \"learned\" or \"identity\"");
  }

  const json* node_ = nullptr;
  std::string path_;
  std::set<std::string> seen_;
};

json rect_json(const Rect& r) { return json::array({r.x_min, r.x_max, r.y_min, r.y_max}); }

std::string_view mode_name(EncoderMode m) { return m == EncoderMode::learned ? "learned" : "identity"; }

const std::set<std::string> kSections{"env", "latent", "models", "planner", "data", "train", "run", "output"};

}  // namespace

RunConfig config_from_json(const json& doc) {
  if (!doc.is_object()) throw ConfigError("config root must be an object");
  for (const auto& [k, v] : doc.items()) {
    if (!kSections.count(k)) throw ConfigError("unknown section " + k);
  }
  RunConfig c;

  Section env(doc, "env");
  env.require("horizon");
  env.read("horizon", c.env.horizon);
  env.read("workspace", c.env.workspace);
  env.read("start", c.env.start);
  env.read("goal_center", c.env.goal_center);
  env.read("goal_radius", c.env.goal_radius);
  env.read("obstacle", c.env.obstacle);
  env.read("noise_sigma", c.env.noise_sigma);
  env.read("max_speed", c.env.max_speed);
  env.read("obs_mode", c.env.obs_mode);
  env.read("raster_size", c.env.raster_size);
  env.read("agent_radius", c.env.agent_radius);
  env.finish();

  Section latent(doc, "latent");
  latent.read("mode", c.latent.mode);
  latent.read("d", c.latent.encoder.latent_dim);
  latent.read("beta", c.latent.encoder.beta);
  latent.read("hidden", c.latent.encoder.hidden_dims);
  latent.read("activation", c.latent.encoder.activation);
  latent.read("epochs", c.latent.vae_epochs);
  latent.read("lr", c.latent.vae_lr);
  latent.read("augment_shift", c.latent.augment_shift);
  latent.finish();

  Section models(doc, "models");
  models.read("gamma", c.models.value.gamma);
  models.read("gamma_ss", c.models.gamma_ss);
  models.read("dynamics_ensemble", c.models.dynamics.ensemble_size);
  models.read("dynamics_hidden", c.models.dynamics.hidden_dims);
  models.read("value_ensemble", c.models.value.ensemble_size);
  models.read("value_hidden", c.models.value.hidden_dims);
  models.read("classifier_hidden", c.models.classifier_hidden);
  models.read("target_sync_period", c.models.value.sync_period);
  Activation act = c.models.classifier_activation;
  models.read("activation", act);
  c.models.classifier_activation = act;
  c.models.dynamics.activation = act;
  c.models.value.activation = act;
  models.finish();

  Section planner(doc, "planner");
  planner.read("horizon", c.planner.horizon);
  planner.read("n_candidate", c.planner.n_candidate);
  planner.read("n_elite", c.planner.n_elite);
  planner.read("n_cem_iters", c.planner.n_cem_iters);
  planner.read("n_particle", c.planner.n_particle);
  planner.read("p_random", c.planner.p_random);
  planner.read("delta_c", c.planner.delta_c);
  planner.read("delta_ss", c.planner.delta_ss_init);
  planner.read("delta_ss_decay", c.planner.delta_ss_decay);
  planner.read("delta_ss_floor", c.planner.delta_ss_floor);
  planner.read("use_safe_set", c.planner.use_safe_set);
  planner.read("use_constraints", c.planner.use_constraints);
  planner.read("infeasibility_penalty", c.planner.infeasibility_penalty);
  planner.read("constraint_rule", c.planner.constraint_rule);
  planner.read("stochastic_encoding", c.planner.stochastic_encoding);
  planner.read("shared_particle_noise", c.planner.shared_particle_noise);
  planner.finish();
  c.planner.action_dim = 2;
  c.planner.action_low = -c.env.max_speed;
  c.planner.action_high = c.env.max_speed;

  Section data(doc, "data");
  data.read("n_demo_success", c.data.n_demo_success);
  data.read("n_demo_constraint", c.data.n_demo_constraint);
  data.read("n_rand", c.data.n_rand);
  data.read("demo_retry_cap", c.data.demo_retry_cap);
  data.read("constraint_retry_cap", c.data.constraint_retry_cap);
  data.finish();

  Section train(doc, "train");
  train.read("batch_size", c.train.batch_size);
  train.read("lr", c.train.lr);
  train.read("dynamics_lr", c.train.dynamics_lr);
  train.read("offline_steps", c.train.offline_steps);
  train.read("round_dynamics_steps", c.train.round_dynamics_steps);
  train.read("round_classifier_steps", c.train.round_classifier_steps);
  train.read("round_value_steps", c.train.round_value_steps);
  train.read("ss_refit_interval", c.train.ss_refit_interval);
  train.read("balanced_classes", c.train.balanced_classes);
  train.read("reinitialize", c.train.reinitialize);
  train.finish();

  Section run(doc, "run");
  run.read("rounds", c.run.rounds);
  run.read("rollouts_per_round", c.run.rollouts_per_round);
  run.read("eval_episodes", c.run.eval_episodes);
  run.finish();

  Section output(doc, "output");
  output.read("save_dataset", c.output.save_dataset);
  output.read("per_step_metrics", c.output.per_step_metrics);
  output.finish();

  try {
    c.validate();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return c;
}

json config_to_json(const RunConfig& c) {
  json j;
  j["env"] = {
      {"horizon", c.env.horizon},
      {"workspace", rect_json(c.env.workspace)},
      {"start", {c.env.start[0], c.env.start[1]}},
      {"goal_center", {c.env.goal_center[0], c.env.goal_center[1]}},
      {"goal_radius", c.env.goal_radius},
      {"obstacle", rect_json(c.env.obstacle)},
      {"noise_sigma", c.env.noise_sigma},
      {"max_speed", c.env.max_speed},
      {"obs_mode", to_string(c.env.obs_mode)},
      {"raster_size", c.env.raster_size},
      {"agent_radius", c.env.agent_radius},
  };
  j["latent"] = {
      {"mode", mode_name(c.latent.mode)},
      {"d", c.latent.encoder.latent_dim},
      {"beta", c.latent.encoder.beta},
      {"hidden", c.latent.encoder.hidden_dims},
      {"activation", to_string(c.latent.encoder.activation)},
      {"epochs", c.latent.vae_epochs},
      {"lr", c.latent.vae_lr},
      {"augment_shift", c.latent.augment_shift},
  };
  j["models"] = {
      {"gamma", c.models.value.gamma},
      {"gamma_ss", c.models.gamma_ss},
      {"dynamics_ensemble", c.models.dynamics.ensemble_size},
      {"dynamics_hidden", c.models.dynamics.hidden_dims},
      {"value_ensemble", c.models.value.ensemble_size},
      {"value_hidden", c.models.value.hidden_dims},
      {"classifier_hidden", c.models.classifier_hidden},
      {"target_sync_period", c.models.value.sync_period},
      {"activation", to_string(c.models.classifier_activation)},
  };
  j["planner"] = {
      {"horizon", c.planner.horizon},
      {"n_candidate", c.planner.n_candidate},
      {"n_elite", c.planner.n_elite},
      {"n_cem_iters", c.planner.n_cem_iters},
      {"n_particle", c.planner.n_particle},
      {"p_random", c.planner.p_random},
      {"delta_c", c.planner.delta_c},
      {"delta_ss", c.planner.delta_ss_init},
      {"delta_ss_decay", c.planner.delta_ss_decay},
      {"delta_ss_floor", c.planner.delta_ss_floor},
      {"use_safe_set", c.planner.use_safe_set},
      {"use_constraints", c.planner.use_constraints},
      {"infeasibility_penalty", c.planner.infeasibility_penalty},
      {"constraint_rule", to_string(c.planner.constraint_rule)},
      {"stochastic_encoding", c.planner.stochastic_encoding},
      {"shared_particle_noise", c.planner.shared_particle_noise},
  };
  j["data"] = {
      {"n_demo_success", c.data.n_demo_success},
      {"n_demo_constraint", c.data.n_demo_constraint},
      {"n_rand", c.data.n_rand},
      {"demo_retry_cap", c.data.demo_retry_cap},
      {"constraint_retry_cap", c.data.constraint_retry_cap},
  };
  j["train"] = {
      {"batch_size", c.train.batch_size},
      {"lr", c.train.lr},
      {"dynamics_lr", c.train.dynamics_lr},
      {"offline_steps", c.train.offline_steps},
      {"round_dynamics_steps", c.train.round_dynamics_steps},
      {"round_classifier_steps", c.train.round_classifier_steps},
      {"round_value_steps", c.train.round_value_steps},
      {"ss_refit_interval", c.train.ss_refit_interval},
      {"balanced_classes", c.train.balanced_classes},
      {"reinitialize", c.train.reinitialize},
  };
  j["run"] = {
      {"rounds", c.run.rounds},
      {"rollouts_per_round", c.run.rollouts_per_round},
      {"eval_episodes", c.run.eval_episodes},
  };
  j["output"] = {
      {"save_dataset", c.output.save_dataset},
      {"per_step_metrics", c.output.per_step_metrics},
  };
  return j;
}

void apply_overrides(json& doc, const std::map<std::string, std::string>& overrides) {
  for (const auto& [path, raw] : overrides) {
    const auto dot = path.find('.');
    if (dot == std::string::npos || dot == 0 || dot + 1 == path.size()) {
      throw ConfigError("override '" + path + "' must look like section.key");
    }
    const std::string section = path.substr(0, dot), key = path.substr(dot + 1);
    json value;
    try {
      value = json::parse(raw);
    } catch (const json::parse_error&) {
      value = raw;
    }
    if (!doc.contains(section)) doc[section] = json::object();
    doc[section][key] = std::move(value);
  }
}

std::map<std::string, std::string> environment_overrides() {
  std::map<std::string, std::string> out;
  for (char** e = environ; e && *e; ++e) {
    const std::string entry(*e);
    if (entry.rfind(kEnvOverridePrefix, 0) != 0) continue;
    const auto eq = entry.find('=');
    if (eq == std::string::npos) continue;
    std::string name = entry.substr(kEnvOverridePrefix.size(), eq - kEnvOverridePrefix.size());
    const auto sep = name.find("__");
    if (sep == std::string::npos) continue;
    name.replace(sep, 2, ".");
    std::transform(name.begin(), name.end(), name.begin(), [](unsigned char ch) { return std::tolower(ch); });
    out[name] = entry.substr(eq + 1);
  }
  return out;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  json doc;
  try {
    doc = json::parse(buf.str(), nullptr, true, /*ignore_comments=*/true);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  apply_overrides(doc, environment_overrides());
  return config_from_json(doc);
}

}  // namespace ls3
