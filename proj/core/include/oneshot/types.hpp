#pragma once

#include <Eigen/Core>

namespace oneshot {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// A point y of the parameter domain [-1, 1]^s.
using ParamSample = Eigen::VectorXd;

}  // namespace oneshot
