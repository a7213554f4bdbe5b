#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "ls3/bundle.hpp"

namespace ls3 {

inline constexpr std::string_view kCheckpointFormat = "ls3-checkpoint";
inline constexpr int kCheckpointVersion = 1;
inline constexpr std::string_view kParamsFile = "params.bin";
inline constexpr std::string_view kManifestFile = "manifest.json";

struct CheckpointEntry {
  std::string name;
  std::vector<std::size_t> shape;
  std::string dtype = "f32le";
  std::uint64_t offset = 0;  // bytes into params.bin
  std::uint64_t length = 0;  // bytes
  std::uint64_t adam_step = 0;
};

/// Every tensor of the bundle under a stable dotted name, in a fixed order:
/// parameters, their Adam moments, value targets, encoder normalization.
std::vector<std::pair<std::string, const Tensor*>> checkpoint_tensors(const ModelBundle& models);

/// Writes params.bin and manifest.json into `dir`. `metadata` is stored
/// verbatim under the manifest's "metadata" key.
void save_checkpoint(const ModelBundle& models, const std::filesystem::path& dir, const nlohmann::json& metadata);

nlohmann::json read_manifest(const std::filesystem::path& dir);

/// Fills `models` (already shaped by its config) from a checkpoint. Throws
/// listing every missing or mis-shaped parameter.
void load_checkpoint(ModelBundle& models, const std::filesystem::path& dir);

/// Rounds every stored value through float32, matching what a save/load cycle produces.
void quantize_to_checkpoint_precision(ModelBundle& models);

}  // namespace ls3
