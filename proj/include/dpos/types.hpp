#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <limits>

namespace dpos {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

inline constexpr double kInf = std::numeric_limits<double>::infinity();
inline constexpr double kTwoPi = 6.283185307179586476925286766559;

[[nodiscard]] inline bool all_finite(const Vector& v) {
    return v.allFinite();
}

}  // namespace dpos
