#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace adasketch {

using Index = std::int64_t;

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Extents of a 3-mode tensor: i is the temporal mode, j and k are spatial.
struct Dims {
  Index i = 0;
  Index j = 0;
  Index k = 0;

  Index count() const { return i * j * k; }

  bool operator==(const Dims& other) const {
    return i == other.i && j == other.j && k == other.k;
  }
  bool operator!=(const Dims& other) const { return !(*this == other); }
};

inline void require(bool condition, const std::string& message) {
  if (!condition) throw std::invalid_argument(message);
}

inline void require_mode(int mode) {
  if (mode < 1 || mode > 3)
    throw std::invalid_argument("mode must be 1, 2 or 3, got " + std::to_string(mode));
}

}  // namespace adasketch
