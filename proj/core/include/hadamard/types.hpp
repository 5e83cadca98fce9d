#pragma once

#include <Eigen/Core>

#include <cstdint>

namespace hadamard {

using Index = Eigen::Index;

/// Per-cell tensors and points never exceed three components (embedded
/// sphere vertices); fixed-max storage keeps them off the heap.
using SmallMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor, 3, 3>;
using SmallVec = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, 3, 1>;

enum class BoundaryCondition { Dirichlet, TNeumann };

const char* to_string(BoundaryCondition bc);
BoundaryCondition boundary_condition_from_string(const char* name);

} // namespace hadamard
