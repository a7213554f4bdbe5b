#pragma once

#include <cstdint>
#include <filesystem>
#include <initializer_list>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "ls3/navigation.hpp"

namespace ls3 {

enum class TrajectorySource { demo, constraint_demo, random, online };

std::string_view to_string(TrajectorySource s) noexcept;
TrajectorySource parse_trajectory_source(std::string_view s);

struct TrajectoryInfo {
  std::int64_t id = 0;
  std::size_t begin = 0;  // [begin, end) into Dataset::transitions()
  std::size_t end = 0;
  TrajectorySource source = TrajectorySource::demo;
  bool success = false;
  bool violation = false;
  int round = 0;  // 0 for offline data
};

/// Transition store D with its trajectory index. The success and constraint
/// views are derived from the per-trajectory flags, so they grow as online
/// trajectories are appended.
class Dataset {
 public:
  void add(Trajectory trajectory, TrajectorySource source, int round);

  const std::vector<Transition>& transitions() const noexcept { return transitions_; }
  const std::vector<TrajectoryInfo>& trajectories() const noexcept { return trajectories_; }
  std::size_t size() const noexcept { return transitions_.size(); }
  bool empty() const noexcept { return transitions_.empty(); }
  std::int64_t next_trajectory_id() const noexcept;

  /// Transition indices of successful trajectories (D_success).
  std::vector<std::size_t> success_indices() const;
  /// Transition indices of trajectories containing a violation (D_constraint).
  std::vector<std::size_t> constraint_indices() const;
  std::vector<std::size_t> indices_from(std::initializer_list<TrajectorySource> sources) const;
  std::size_t count_trajectories(TrajectorySource source) const;

 private:
  std::vector<Transition> transitions_;
  std::vector<TrajectoryInfo> trajectories_;
};

nlohmann::json tensor_to_json(const Tensor& t);
Tensor tensor_from_json(const nlohmann::json& j);
nlohmann::json transition_to_json(const Transition& tr);
Transition transition_from_json(const nlohmann::json& j);

/// Writes one JSON record per transition to `path` and the trajectory index to
/// `path` with ".index.jsonl" appended.
void save_dataset_jsonl(const Dataset& dataset, const std::filesystem::path& path);
Dataset load_dataset_jsonl(const std::filesystem::path& path);

}  // namespace ls3
