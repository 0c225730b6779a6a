#include "mor/rng.hpp"

#include "mor/errors.hpp"

namespace mor {

namespace {
constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;
}

std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

Rng::Rng(std::uint64_t seed) : key_(mix64(seed)), counter_(0) {}

Rng::Rng(std::uint64_t key, std::uint64_t counter, bool) : key_(key), counter_(counter) {}

Rng Rng::derive(std::string_view label) const {
  return Rng(mix64(key_ ^ fnv1a64(label)), 0, true);
}

Rng Rng::derive(std::uint64_t index) const {
  return Rng(mix64(key_ ^ mix64(index + kGolden)), 0, true);
}

std::uint64_t Rng::next_u64() {
  ++counter_;
  return mix64(key_ + counter_ * kGolden);
}

double Rng::uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

bool Rng::bernoulli(double p) { return uniform() < p; }

int Rng::rademacher() { return (next_u64() >> 63) ? 1 : -1; }

std::uint64_t Rng::below(std::uint64_t n) {
  if (n == 0) throw ParameterError("Rng::below: n must be positive");
  // Rejection keeps the draw exactly uniform.
  const std::uint64_t limit = (~std::uint64_t{0}) - (~std::uint64_t{0}) % n;
  for (;;) {
    std::uint64_t u = next_u64();
    if (u < limit) return u % n;
  }
}

std::size_t Rng::categorical(std::span<const double> weights) {
  double total = 0.0;
  for (double w : weights) {
    if (w < 0.0) throw ParameterError("Rng::categorical: negative weight");
    total += w;
  }
  if (weights.empty() || !(total > 0.0)) throw ParameterError("Rng::categorical: no mass");
  double u = uniform() * total;
  double acc = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] <= 0.0) continue;
    last_positive = i;
    acc += weights[i];
    if (u < acc) return i;
  }
  return last_positive;
}

Rng SeedSpec::rng() const {
  Rng r(seed);
  for (const auto& p : path) r = r.derive(p);
  return r;
}

SeedSpec SeedSpec::child(std::string label) const {
  SeedSpec s = *this;
  s.path.push_back(std::move(label));
  return s;
}

}  // namespace mor
