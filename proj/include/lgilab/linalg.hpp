#pragma once

#include <Eigen/Dense>

namespace lgilab {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

}  // namespace lgilab
