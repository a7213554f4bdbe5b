#include <fstream>
#include <iterator>

#include <stdexcept>

#include "doctest.h"
#include "fixtures.hpp"

#include "ls3/checkpoint.hpp"

using namespace ls3;

namespace {
std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

ModelBundle trained_bundle(const RunConfig& c, std::uint64_t seed) {
  Rng rng(seed);
  Dataset d = collect_offline(c, rng);
  Learner l = train_offline(d, c, rng);
  return std::move(l.models);
}
}  // namespace

TEST_SUITE("checkpoint") {

TEST_CASE("save, load, save is byte-identical") {
  RunConfig c = fixtures::tiny_config();
  ModelBundle m = trained_bundle(c, 0);
  const auto dir = fixtures::scratch_dir("ckpt");
  save_checkpoint(m, dir / "a", {{"note", "x"}});
  Rng rng(99);
  ModelBundle fresh = make_bundle(c, rng);
  load_checkpoint(fresh, dir / "a");
  save_checkpoint(fresh, dir / "b", {{"note", "x"}});
  CHECK(slurp(dir / "a" / kParamsFile) == slurp(dir / "b" / kParamsFile));
  CHECK(slurp(dir / "a" / kManifestFile) == slurp(dir / "b" / kManifestFile));
}

TEST_CASE("manifest entries tile the blob") {
  RunConfig c = fixtures::tiny_config();
  ModelBundle m = trained_bundle(c, 1);
  const auto dir = fixtures::scratch_dir("ckpt_manifest");
  save_checkpoint(m, dir, nlohmann::json::object());
  const auto man = read_manifest(dir);
  CHECK(man["format"] == kCheckpointFormat);
  std::uint64_t next = 0;
  for (const auto& e : man["entries"]) {
    CHECK(e["offset"].get<std::uint64_t>() == next);
    std::uint64_t n = 1;
    for (auto s : e["shape"]) n *= s.get<std::uint64_t>();
    CHECK(e["length"].get<std::uint64_t>() == 4 * n);
    CHECK(e["dtype"] == "f32le");
    next += e["length"].get<std::uint64_t>();
  }
  CHECK(next == man["total_bytes"].get<std::uint64_t>());
  CHECK(std::filesystem::file_size(dir / kParamsFile) == next);
}

TEST_CASE("loading restores values, optimizer state and the sync counter") {
  RunConfig c = fixtures::tiny_config();
  ModelBundle m = trained_bundle(c, 2);
  m.value.set_updates_since_sync(17);
  quantize_to_checkpoint_precision(m);
  const auto dir = fixtures::scratch_dir("ckpt_restore");
  save_checkpoint(m, dir, nlohmann::json::object());
  Rng rng(5);
  ModelBundle f = make_bundle(c, rng);
  load_checkpoint(f, dir);
  CHECK(f.value.updates_since_sync() == 17);
  CHECK(f.dynamics.members()[1].params[0].value == m.dynamics.members()[1].params[0].value);
  CHECK(f.dynamics.members()[1].params[0].adam.second_moment == m.dynamics.members()[1].params[0].adam.second_moment);
  CHECK(f.dynamics.members()[1].params[0].adam.step_count == m.dynamics.members()[1].params[0].adam.step_count);
  CHECK(f.encoder.latent_scale() == m.encoder.latent_scale());
  CHECK(f.value.targets()[0].params[0].value == m.value.targets()[0].params[0].value);
}

TEST_CASE("a mismatched bundle reports the offending parameters") {
  RunConfig c = fixtures::tiny_config();
  ModelBundle m = trained_bundle(c, 3);
  const auto dir = fixtures::scratch_dir("ckpt_mismatch");
  save_checkpoint(m, dir, nlohmann::json::object());
  RunConfig wider = c;
  wider.models.classifier_hidden = {17};
  wider.models.dynamics.ensemble_size = 3;
  Rng rng(0);
  ModelBundle other = make_bundle(wider, rng);
  try {
    load_checkpoint(other, dir);
    FAIL("expected a throw");
  } catch (const std::exception& e) {
    const std::string msg = e.what();
    CHECK(msg.find("goal") != std::string::npos);
    CHECK(msg.find("dynamics.2") != std::string::npos);
  }
}

TEST_CASE("a truncated blob is refused") {
  RunConfig c = fixtures::tiny_config();
  ModelBundle m = trained_bundle(c, 4);
  const auto dir = fixtures::scratch_dir("ckpt_truncated");
  save_checkpoint(m, dir, nlohmann::json::object());
  std::filesystem::resize_file(dir / kParamsFile, std::filesystem::file_size(dir / kParamsFile) - 4);
  Rng rng(0);
  ModelBundle f = make_bundle(c, rng);
  CHECK_THROWS(load_checkpoint(f, dir));
}

}
