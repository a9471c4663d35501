#pragma once

#include <Eigen/Dense>

namespace fofr {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

}  // namespace fofr
