#pragma once

#include <cmath>
#include <cstdint>

namespace scs {

// Products like 10 * 3.3 land a hair below the integer they denote; the
// slack keeps floor() on the intended side.
inline constexpr double kExtentSlack = 1e-9;

/// floor(n * p): output extent for magnification p.
inline std::int64_t scaled_extent(std::int64_t n, double p) {
  return static_cast<std::int64_t>(std::floor(static_cast<double>(n) * p + kExtentSlack));
}

/// floor(n / p): extent after reducing by p.
inline std::int64_t reduced_extent(std::int64_t n, double p) {
  return static_cast<std::int64_t>(std::floor(static_cast<double>(n) / p + kExtentSlack));
}

}  // namespace scs
