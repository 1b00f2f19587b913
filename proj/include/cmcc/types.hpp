#pragma once

#include <Eigen/Dense>

namespace cmcc {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

} // namespace cmcc
