#pragma once

#include <cstdint>
#include <random>

namespace sirdcast {

using Rng = std::mt19937_64;

/// Uniform draw in [0, 1) from the top 53 bits, identical across standard libraries.
inline double unit_uniform(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

} // namespace sirdcast
