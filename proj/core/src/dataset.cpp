#include "ls3/dataset.hpp"

#include <fstream>
#include <stdexcept>
#include <string>

namespace ls3 {

using nlohmann::json;

std::string_view to_string(TrajectorySource s) noexcept {
  switch (s) {
    case TrajectorySource::demo: return "demo";
    case TrajectorySource::constraint_demo: return "constraint_demo";
    case TrajectorySource::random: return "random";
    case TrajectorySource::online: return "online";
  }
  return "?";
}

TrajectorySource parse_trajectory_source(std::string_view s) {
  if (s == "demo") return TrajectorySource::demo;
  if (s == "constraint_demo") return TrajectorySource::constraint_demo;
  if (s == "random") return TrajectorySource::random;
  if (s == "online") return TrajectorySource::online;
  throw std::invalid_argument("unknown trajectory source '" + std::string(s) + "'");
}

void Dataset::add(Trajectory trajectory, TrajectorySource source, int round) {
  if (trajectory.transitions.empty()) throw std::invalid_argument("Dataset::add: empty trajectory");
  TrajectoryInfo info;
  info.id = trajectory.transitions.front().trajectory_id;
  info.begin = transitions_.size();
  info.source = source;
  info.success = trajectory.success;
  info.violation = trajectory.violation;
  info.round = round;
  for (auto& tr : trajectory.transitions) {
    if (tr.trajectory_id != info.id) throw std::invalid_argument("Dataset::add: mixed trajectory ids");
    tr.in_success_trajectory = trajectory.success;
    transitions_.push_back(std::move(tr));
  }
  info.end = transitions_.size();
  trajectories_.push_back(info);
}

std::int64_t Dataset::next_trajectory_id() const noexcept {
  std::int64_t next = 0;
  for (const auto& t : trajectories_) next = std::max(next, t.id + 1);
  return next;
}

std::vector<std::size_t> Dataset::success_indices() const {
  std::vector<std::size_t> out;
  for (const auto& t : trajectories_) {
    if (!t.success) continue;
    for (auto i = t.begin; i < t.end; ++i) out.push_back(i);
  }
  return out;
}

std::vector<std::size_t> Dataset::constraint_indices() const {
  std::vector<std::size_t> out;
  for (const auto& t : trajectories_) {
    if (!t.violation) continue;
    for (auto i = t.begin; i < t.end; ++i) out.push_back(i);
  }
  return out;
}

std::vector<std::size_t> Dataset::indices_from(std::initializer_list<TrajectorySource> sources) const {
  std::vector<std::size_t> out;
  for (const auto& t : trajectories_) {
    bool keep = false;
    for (auto s : sources) keep = keep || s == t.source;
    if (!keep) continue;
    for (auto i = t.begin; i < t.end; ++i) out.push_back(i);
  }
  return out;
}

std::size_t Dataset::count_trajectories(TrajectorySource source) const {
  std::size_t n = 0;
  for (const auto& t : trajectories_) n += t.source == source ? 1 : 0;
  return n;
}

json tensor_to_json(const Tensor& t) { return json{{"shape", t.shape()}, {"data", t.values()}}; }

Tensor tensor_from_json(const json& j) {
  return Tensor(j.at("shape").get<std::vector<std::size_t>>(), j.at("data").get<std::vector<double>>());
}

json transition_to_json(const Transition& tr) {
  json j;
  j["obs"] = tensor_to_json(tr.obs);
  j["action"] = {tr.action[0], tr.action[1]};
  j["next_obs"] = tensor_to_json(tr.next_obs);
  j["reward"] = tr.reward;
  j["constraint_violation"] = tr.constraint_violation;
  j["in_goal"] = tr.in_goal;
  j["trajectory_id"] = tr.trajectory_id;
  j["step_index"] = tr.step_index;
  j["in_success_trajectory"] = tr.in_success_trajectory;
  return j;
}

Transition transition_from_json(const json& j) {
  Transition tr;
  tr.obs = tensor_from_json(j.at("obs"));
  const auto a = j.at("action").get<std::vector<double>>();
  if (a.size() != 2) throw std::invalid_argument("transition action must have 2 entries");
  tr.action = {a[0], a[1]};
  tr.next_obs = tensor_from_json(j.at("next_obs"));
  tr.reward = j.at("reward").get<double>();
  tr.constraint_violation = j.at("constraint_violation").get<bool>();
  tr.in_goal = j.at("in_goal").get<bool>();
  tr.trajectory_id = j.at("trajectory_id").get<std::int64_t>();
  tr.step_index = j.at("step_index").get<int>();
  tr.in_success_trajectory = j.at("in_success_trajectory").get<bool>();
  return tr;
}

namespace {

std::filesystem::path index_path(const std::filesystem::path& path) {
  return std::filesystem::path(path.string() + ".index.jsonl");
}

}  // namespace

void save_dataset_jsonl(const Dataset& dataset, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write dataset file " + path.string());
  for (const auto& tr : dataset.transitions()) out << transition_to_json(tr).dump() << '\n';
  std::ofstream idx(index_path(path), std::ios::binary | std::ios::trunc);
  if (!idx) throw std::runtime_error("cannot write dataset index " + index_path(path).string());
  for (const auto& t : dataset.trajectories()) {
    idx << json{{"trajectory_id", t.id},   {"begin", t.begin},         {"end", t.end},
                {"source", to_string(t.source)}, {"success", t.success}, {"violation", t.violation},
                {"round", t.round}}
               .dump()
        << '\n';
  }
}

Dataset load_dataset_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read dataset file " + path.string());
  std::vector<Transition> all;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) all.push_back(transition_from_json(json::parse(line)));
  }
  std::ifstream idx(index_path(path), std::ios::binary);
  if (!idx) throw std::runtime_error("cannot read dataset index " + index_path(path).string());
  Dataset ds;
  while (std::getline(idx, line)) {
    if (line.empty()) continue;
    const auto j = json::parse(line);
    const auto begin = j.at("begin").get<std::size_t>();
    const auto end = j.at("end").get<std::size_t>();
    if (begin >= end || end > all.size()) throw std::runtime_error("dataset index out of range");
    Trajectory traj;
    traj.success = j.at("success").get<bool>();
    traj.violation = j.at("violation").get<bool>();
    traj.transitions.assign(all.begin() + static_cast<std::ptrdiff_t>(begin),
                            all.begin() + static_cast<std::ptrdiff_t>(end));
    ds.add(std::move(traj), parse_trajectory_source(j.at("source").get<std::string>()),
           j.at("round").get<int>());
  }
  if (ds.size() != all.size()) throw std::runtime_error("dataset index does not cover every transition");
  return ds;
}

}  // namespace ls3
