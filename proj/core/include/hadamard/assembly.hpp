#pragma once

#include "hadamard/fields.hpp"
#include "hadamard/mesh.hpp"
#include "hadamard/types.hpp"

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <memory>
#include <vector>

namespace hadamard {

using SparseMatrix = Eigen::SparseMatrix<double>;

/// Everything needed to pose -L phi = lambda phi on a mesh.
struct Problem
{
    std::shared_ptr<const Mesh> mesh;
    MetricField metric;
    SymTensorField tensor;
    ScalarField eta;
    BoundaryCondition bc = BoundaryCondition::Dirichlet;
};

/// Flat Laplace-Beltrami problem (T = g, eta = 0) on a mesh.
Problem laplace_problem(std::shared_ptr<const Mesh> mesh, BoundaryCondition bc);

/// Weighted stiffness/mass pencil restricted to the free degrees of freedom.
struct OperatorPair
{
    SparseMatrix K;
    SparseMatrix B;
    BoundaryCondition bc = BoundaryCondition::Dirichlet;
    /// free index -> vertex
    std::vector<Index> free_dofs;
    /// vertex -> free index, -1 for eliminated Dirichlet vertices
    std::vector<Index> vertex_to_free;

    Index size() const { return static_cast<Index>(free_dofs.size()); }
    Eigen::VectorXd restrict_to_free(const Eigen::VectorXd& full) const;
    Eigen::VectorXd expand(const Eigen::VectorXd& free) const;
};

/// e^{-eta} on each cell, with eta averaged over the cell's vertices.
std::vector<double> cell_weights(const Mesh& mesh, const ScalarField& eta);

/// Consistent P1 mass matrix of a simplex with the given measure.
SmallMat local_mass(int dim, double volume);

/// Chart gradient (covector) of a P1 function on a cell.
SmallVec cell_gradient(const Mesh& mesh, Index c, const Eigen::VectorXd& u);

/// Checks shapes and ellipticity, then assembles K and B.
OperatorPair assemble(const Problem& problem);

} // namespace hadamard
