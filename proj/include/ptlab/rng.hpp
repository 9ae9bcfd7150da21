#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace ptlab {

using Seed = std::uint64_t;

/// Child seed for the stream (parent, purpose tag, index). Pure function, so
/// any worker can rebuild any stream without coordination.
Seed derive_seed(Seed parent, std::string_view tag, std::uint64_t index);

/// Portable draws on top of mt19937_64: the distributions are implemented
/// here rather than taken from <random>, whose outputs vary across standard
/// libraries.
class Rng {
 public:
  explicit Rng(Seed seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  /// Uniform on [0, 1).
  double uniform();
  /// Standard normal (Box-Muller).
  double normal();
  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);
  bool bernoulli(double p) { return uniform() < p; }

  /// `count` distinct values from {0, ..., n-1}, in draw order.
  std::vector<int> choose(int n, int count);

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace ptlab
