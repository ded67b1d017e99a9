#pragma once

#include <Eigen/Dense>

namespace same {

/// Dense row-major matrix of doubles; the value type for every tape node.
using Tensor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline bool all_finite(const Tensor& t) { return t.allFinite(); }

}  // namespace same
