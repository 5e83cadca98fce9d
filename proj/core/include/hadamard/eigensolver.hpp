#pragma once

#include "hadamard/assembly.hpp"
#include "hadamard/types.hpp"

#include <Eigen/Core>

#include <string>
#include <vector>

namespace hadamard {

struct EigenOptions
{
    /// Pencils with at most this many free DOFs use the dense solver.
    Index dense_threshold = 600;
    /// Relative residual ||Kx - lambda Bx|| / ((||K|| + |lambda| ||B||) ||x||).
    double tol = 1e-10;
    int max_restarts = 400;
};

/// The k smallest eigenpairs of (K, B), mass-orthonormal.
struct Spectrum
{
    BoundaryCondition bc = BoundaryCondition::Dirichlet;
    Eigen::VectorXd values;
    /// One column per eigenpair over all mesh vertices (zero on Dirichlet nodes).
    Eigen::MatrixXd modes;
    /// Same eigenvectors restricted to the free DOFs of the pencil.
    Eigen::MatrixXd free_modes;
    Eigen::VectorXd residuals;
    /// max |X^T B X - I|
    double orthonormality_residual = 0.0;

    Index size() const { return values.size(); }
};

Spectrum solve_eigen(const OperatorPair& op, Index k, const EigenOptions& options = {});

using Cluster = std::vector<Index>;

/// Maximal runs of a sorted sequence whose consecutive gaps are below
/// rel_tol * (1 + lambda).
std::vector<Cluster> group_multiplets(const Eigen::VectorXd& values, double rel_tol = 1e-6);
std::vector<Cluster> group_multiplets(const Spectrum& spectrum, double rel_tol = 1e-6);

/// The cluster whose mean eigenvalue is closest to `target`.
Cluster cluster_near(const Spectrum& spectrum, double target, double rel_tol = 1e-6);

/// index, lambda, cluster_id, residual
std::string spectrum_csv(const Spectrum& spectrum, double rel_tol = 1e-6);

/// Column sums of absolute values, maximised (the matrix 1-norm).
double norm1(const SparseMatrix& A);

} // namespace hadamard
