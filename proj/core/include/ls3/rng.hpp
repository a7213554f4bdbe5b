#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <span>
#include <string_view>

namespace ls3 {

/// Seeded random stream. Every consumer owns its own instance; streams for
/// independent purposes are derived with derive_seed rather than shared.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }
  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(engine_); }
  double normal() { return normal_(engine_); }
  std::size_t index(std::size_t n) {
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(engine_);
  }
  std::uint64_t next_u64() { return engine_(); }

  std::mt19937_64& engine() noexcept { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

std::uint64_t mix64(std::uint64_t x) noexcept;
std::uint64_t hash_string(std::string_view s) noexcept;
/// Folds the values into `base` with a splitmix-style mixer.
std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> parts) noexcept;
std::uint64_t derive_seed(std::uint64_t base, std::string_view tag,
                          std::initializer_list<std::uint64_t> parts = {}) noexcept;
/// Hash of the exact bit patterns of `values`.
std::uint64_t hash_doubles(std::uint64_t base, std::span<const double> values) noexcept;

}  // namespace ls3
