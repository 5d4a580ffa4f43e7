#pragma once

#include <Eigen/Dense>

namespace dyad {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

}  // namespace dyad
