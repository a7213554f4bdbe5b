#include "ls3/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace ls3 {

using nlohmann::json;

namespace {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

template <typename MlpFn, typename ScalarFn>
void visit_bundle(const ModelBundle& m, MlpFn&& on_mlp, ScalarFn&& on_tensor) {
  const auto& enc = m.encoder;
  if (enc.mode() == EncoderMode::learned) {
    on_mlp("encoder.enc", enc.encoder_net());
    on_mlp("encoder.dec", enc.decoder_net());
    on_tensor("encoder.latent_shift", enc.latent_shift());
    on_tensor("encoder.latent_scale", enc.latent_scale());
  }
  for (std::size_t i = 0; i < m.dynamics.size(); ++i) on_mlp("dynamics." + std::to_string(i), m.dynamics.members()[i]);
  for (std::size_t i = 0; i < m.value.size(); ++i) on_mlp("value." + std::to_string(i), m.value.members()[i]);
  for (std::size_t i = 0; i < m.value.size(); ++i) {
    on_mlp("value_target." + std::to_string(i), m.value.targets()[i]);
  }
  on_mlp("goal", m.goal.net);
  on_mlp("constraint", m.constraint.net);
  on_mlp("safe_set", m.safe_set.classifier.net);
}

struct Slot {
  const Tensor* tensor;
  std::uint64_t adam_step;
};

std::vector<std::pair<std::string, Slot>> slots(const ModelBundle& models) {
  std::vector<std::pair<std::string, Slot>> out;
  visit_bundle(
      models,
      [&](const std::string& prefix, const Mlp& mlp) {
        for (const auto& p : mlp.params) {
          const std::string base = prefix + "." + p.name;
          out.push_back({base, {&p.value, p.adam.step_count}});
          out.push_back({base + ".adam_m", {&p.adam.first_moment, 0}});
          out.push_back({base + ".adam_v", {&p.adam.second_moment, 0}});
        }
      },
      [&](const std::string& name, const Tensor& t) { out.push_back({name, {&t, 0}}); });
  return out;
}

std::string join_shape(const std::vector<std::size_t>& s) { return shape_string(s); }

}  // namespace

std::vector<std::pair<std::string, const Tensor*>> checkpoint_tensors(const ModelBundle& models) {
  std::vector<std::pair<std::string, const Tensor*>> out;
  for (const auto& [name, slot] : slots(models)) out.push_back({name, slot.tensor});
  return out;
}

void save_checkpoint(const ModelBundle& models, const std::filesystem::path& dir, const json& metadata) {
  std::filesystem::create_directories(dir);
  std::ofstream blob(dir / kParamsFile, std::ios::binary | std::ios::trunc);
  if (!blob) throw std::runtime_error("cannot write " + (dir / kParamsFile).string());
  json entries = json::array();
  std::uint64_t offset = 0;
  for (const auto& [name, slot] : slots(models)) {
    const Tensor& t = *slot.tensor;
    std::vector<float> buf(t.size());
    for (std::size_t i = 0; i < t.size(); ++i) buf[i] = static_cast<float>(t[i]);
    const std::uint64_t length = buf.size() * sizeof(float);
    blob.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(length));
    json e = {{"name", name}, {"shape", t.shape()}, {"dtype", "f32le"}, {"offset", offset}, {"length", length}};
    if (slot.adam_step) e["adam_step"] = slot.adam_step;
    entries.push_back(std::move(e));
    offset += length;
  }
  if (!blob) throw std::runtime_error("failed writing " + (dir / kParamsFile).string());
  json manifest = {
      {"format", kCheckpointFormat},
      {"version", kCheckpointVersion},
      {"total_bytes", offset},
      {"value_updates_since_sync", models.value.updates_since_sync()},
      {"entries", std::move(entries)},
      {"metadata", metadata},
  };
  std::ofstream out(dir / kManifestFile, std::ios::trunc);
  out << manifest.dump(1) << "\n";
  if (!out) throw std::runtime_error("failed writing " + (dir / kManifestFile).string());
}

json read_manifest(const std::filesystem::path& dir) {
  std::ifstream in(dir / kManifestFile);
  if (!in) throw std::runtime_error("checkpoint " + dir.string() + " has no " + std::string(kManifestFile));
  json m;
  try {
    m = json::parse(in);
  } catch (const json::parse_error& e) {
    throw std::runtime_error("checkpoint manifest unreadable: " + std::string(e.what()));
  }
  if (m.value("format", "") != kCheckpointFormat) throw std::runtime_error("not an ls3 checkpoint: " + dir.string());
  if (m.value("version", 0) != kCheckpointVersion) throw std::runtime_error("unsupported checkpoint version");
  return m;
}

void load_checkpoint(ModelBundle& models, const std::filesystem::path& dir) {
  const json manifest = read_manifest(dir);
  std::ifstream blob(dir / kParamsFile, std::ios::binary);
  if (!blob) throw std::runtime_error("checkpoint " + dir.string() + " has no " + std::string(kParamsFile));
  std::stringstream ss;
  ss << blob.rdbuf();
  const std::string bytes = ss.str();
  if (bytes.size() != manifest.at("total_bytes").get<std::uint64_t>()) {
    throw std::runtime_error("checkpoint blob size does not match manifest");
  }

  std::map<std::string, const json*> index;
  for (const auto& e : manifest.at("entries")) index[e.at("name").get<std::string>()] = &e;

  std::vector<std::string> missing;
  const auto targets = slots(models);
  for (const auto& [name, slot] : targets) {
    const auto it = index.find(name);
    if (it == index.end()) {
      missing.push_back(name);
      continue;
    }
    const json& e = *it->second;
    const auto shape = e.at("shape").get<std::vector<std::size_t>>();
    if (shape != slot.tensor->shape()) {
      missing.push_back(name + " (shape " + join_shape(shape) + ", expected " + join_shape(slot.tensor->shape()) + ")");
      continue;
    }
    if (e.at("dtype").get<std::string>() != "f32le") missing.push_back(name + " (unsupported dtype)");
  }
  if (!missing.empty()) {
    std::string msg = "incomplete checkpoint " + dir.string() + "; missing parameters:";
    for (const auto& m : missing) msg += "\n  " + m;
    throw std::runtime_error(msg);
  }

  for (const auto& [name, slot] : targets) {
    const json& e = *index.at(name);
    const auto offset = e.at("offset").get<std::uint64_t>();
    const auto length = e.at("length").get<std::uint64_t>();
    Tensor& t = const_cast<Tensor&>(*slot.tensor);
    if (length != t.size() * sizeof(float) || offset + length > bytes.size()) {
      throw std::runtime_error("checkpoint entry " + name + " has inconsistent extent");
    }
    std::vector<float> buf(t.size());
    std::memcpy(buf.data(), bytes.data() + offset, length);
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = static_cast<double>(buf[i]);
  }
  // Adam step counts live beside the parameter values.
  auto restore_steps = [&](const std::string& prefix, Mlp& mlp) {
    for (auto& p : mlp.params) p.adam.step_count = index.at(prefix + "." + p.name)->value("adam_step", std::uint64_t{0});
  };
  if (models.encoder.mode() == EncoderMode::learned) {
    restore_steps("encoder.enc", models.encoder.encoder_net());
    restore_steps("encoder.dec", models.encoder.decoder_net());
  }
  for (std::size_t i = 0; i < models.dynamics.size(); ++i) restore_steps("dynamics." + std::to_string(i), models.dynamics.members()[i]);
  for (std::size_t i = 0; i < models.value.size(); ++i) {
    restore_steps("value." + std::to_string(i), models.value.members()[i]);
    restore_steps("value_target." + std::to_string(i), models.value.targets()[i]);
  }
  restore_steps("goal", models.goal.net);
  restore_steps("constraint", models.constraint.net);
  restore_steps("safe_set", models.safe_set.classifier.net);
  models.value.set_updates_since_sync(manifest.value("value_updates_since_sync", 0));
}

void quantize_to_checkpoint_precision(ModelBundle& models) {
  for (const auto& [name, slot] : slots(models)) {
    Tensor& t = const_cast<Tensor&>(*slot.tensor);
    for (auto& v : t.data()) v = static_cast<double>(static_cast<float>(v));
  }
}

}  // namespace ls3
