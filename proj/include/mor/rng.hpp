#pragma once

// Counter-based splittable generator.
//
//   mix64(z)     : SplitMix64 finalizer
//                  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
//                  z = (z ^ (z >> 27)) * 0x94D049BB133111EB
//                  z =  z ^ (z >> 31)
//   root key     : mix64(seed)
//   derive(s)    : key' = mix64(key ^ fnv1a64(s))            (string label)
//   derive(i)    : key' = mix64(key ^ mix64(i + 0x9E3779B97F4A7C15))
//   i-th draw    : mix64(key + (i + 1) * 0x9E3779B97F4A7C15), i = 0, 1, ...
//   uniform()    : (draw >> 11) * 2^-53
//
// Identical (seed, derivation path) gives identical draws on every platform.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace mor {

std::uint64_t mix64(std::uint64_t z);
std::uint64_t fnv1a64(std::string_view s);

class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0);

  Rng derive(std::string_view label) const;
  Rng derive(std::uint64_t index) const;

  std::uint64_t next_u64();
  double uniform();
  bool bernoulli(double p);
  int rademacher();
  // Uniform integer in [0, n); n > 0.
  std::uint64_t below(std::uint64_t n);
  // Index drawn proportionally to non-negative weights (need not be normalized).
  std::size_t categorical(std::span<const double> weights);

  std::uint64_t key() const { return key_; }
  std::uint64_t counter() const { return counter_; }

 private:
  Rng(std::uint64_t key, std::uint64_t counter, bool);
  std::uint64_t key_;
  std::uint64_t counter_;
};

// Master seed plus derivation path.
struct SeedSpec {
  std::uint64_t seed = 0;
  std::vector<std::string> path;

  Rng rng() const;
  SeedSpec child(std::string label) const;
};

}  // namespace mor
