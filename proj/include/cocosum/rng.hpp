#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace cocosum {

// The standard distributions are implementation-defined, so draws are built
// from raw engine output to keep runs reproducible across toolchains.
using Rng = std::mt19937_64;

inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

inline double uniform(Rng& rng, double lo, double hi) { return lo + (hi - lo) * uniform01(rng); }

inline std::size_t uniform_index(Rng& rng, std::size_t n) {
  return static_cast<std::size_t>(uniform01(rng) * static_cast<double>(n)) % n;
}

template <typename Seq>
void shuffle_in_place(Seq& seq, Rng& rng) {
  for (std::size_t i = seq.size(); i > 1; --i) std::swap(seq[i - 1], seq[uniform_index(rng, i)]);
}

inline std::string rng_state(const Rng& rng) {
  std::ostringstream out;
  out << rng;
  return out.str();
}

inline void restore_rng_state(Rng& rng, const std::string& state) {
  std::istringstream in(state);
  in >> rng;
}

}  // namespace cocosum
