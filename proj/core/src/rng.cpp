#include "ls3/rng.hpp"

#include <bit>

namespace ls3 {

std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t hash_string(std::string_view s) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> parts) noexcept {
  std::uint64_t h = mix64(base);
  for (auto p : parts) h = mix64(h ^ mix64(p));
  return h;
}

std::uint64_t derive_seed(std::uint64_t base, std::string_view tag,
                          std::initializer_list<std::uint64_t> parts) noexcept {
  std::uint64_t h = mix64(base ^ hash_string(tag));
  for (auto p : parts) h = mix64(h ^ mix64(p));
  return h;
}

std::uint64_t hash_doubles(std::uint64_t base, std::span<const double> values) noexcept {
  std::uint64_t h = mix64(base);
  for (double v : values) h = mix64(h ^ std::bit_cast<std::uint64_t>(v));
  return h;
}

}  // namespace ls3
