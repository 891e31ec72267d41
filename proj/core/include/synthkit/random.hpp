#pragma once

#include <cstdint>
#include <random>
#include <string>

namespace synthkit {

using Rng = std::mt19937_64;

/// Closed interval [lo, hi] for a uniform prior.
struct Range {
  double lo = 0.0;
  double hi = 0.0;

  bool valid() const { return lo <= hi; }
  bool contains(double v) const { return v >= lo && v <= hi; }
  friend bool operator==(const Range&, const Range&) = default;
};

/// Uniform draw on [lo, hi]; the result never leaves the interval.
double draw(Rng& rng, const Range& range);

/// Uniform integer draw on [lo, hi].
int draw_int(Rng& rng, int lo, int hi);

/// Independent stream for sample `index` of a batch seeded with `master_seed`.
Rng stream_for(std::uint64_t master_seed, std::uint64_t index);

}  // namespace synthkit
