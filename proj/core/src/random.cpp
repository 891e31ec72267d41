#include "synthkit/random.hpp"

#include <algorithm>
#include <stdexcept>

namespace synthkit {

double draw(Rng& rng, const Range& range) {
  if (!range.valid()) throw std::invalid_argument("draw: range has lo > hi");
  if (range.lo == range.hi) return range.lo;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double v = range.lo + (range.hi - range.lo) * u(rng);
  return std::clamp(v, range.lo, range.hi);
}

int draw_int(Rng& rng, int lo, int hi) {
  if (lo > hi) throw std::invalid_argument("draw_int: lo > hi");
  if (lo == hi) return lo;
  std::uniform_int_distribution<int> u(lo, hi);
  return u(rng);
}

Rng stream_for(std::uint64_t master_seed, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(master_seed), static_cast<std::uint32_t>(master_seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
  return Rng(seq);
}

}  // namespace synthkit
