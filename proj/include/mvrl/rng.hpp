#pragma once

#include <cstdint>
#include <string_view>

namespace mvrl {

// Counter-based splittable generator. Every consumer derives its own named
// stream from the global seed, so adding a consumer never perturbs the draws
// seen by existing ones. Deterministic across platforms.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : key_(mix(seed ^ 0x9e3779b97f4a7c15ull)) {}

  // Independent stream identified by name (e.g. "env", "policy-init").
  Rng derive(std::string_view name) const { return Rng(key_ ^ fnv1a(name), 0); }
  Rng derive(std::uint64_t salt) const { return Rng(mix(key_ ^ mix(salt)), 0); }

  std::uint64_t next_u64() { return mix(key_ + (++counter_) * 0x9e3779b97f4a7c15ull); }

  // Uniform in [0, 1).
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Standard normal via Box-Muller; consumes two uniforms per draw.
  double normal();

  // Uniform integer in [0, n). Requires n > 0.
  int uniform_int(int n);

 private:
  Rng(std::uint64_t key, std::uint64_t counter) : key_(key), counter_(counter) {}

  static std::uint64_t mix(std::uint64_t z);
  static std::uint64_t fnv1a(std::string_view s);

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace mvrl
