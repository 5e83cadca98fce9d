#pragma once

#include "hadamard/mesh.hpp"
#include "hadamard/types.hpp"

#include <Eigen/Core>

#include <functional>
#include <utility>
#include <vector>

namespace hadamard {

/// Position (in vertex-coordinate space) -> value.
using ScalarFn = std::function<double(const SmallVec&)>;
using TensorFn = std::function<SmallMat(const SmallVec&)>;
using VectorFn = std::function<SmallVec(const SmallVec&)>;

enum class TensorRole { T, H, ScriptH, Ric, G };
enum class ScalarRole { Eta, EtaDot, Psi, Trace, ScalarCurvature, Eigenfunction };

/// Per-cell Riemannian metric in chart components, constant on each cell.
///
/// An optional generator reproduces the metric at arbitrary chart points;
/// pullbacks and Lie derivatives use it to account for the variation of g
/// along the deformation field. Without it g is treated as locally flat.
class MetricField
{
public:
    MetricField() = default;
    explicit MetricField(std::vector<SmallMat> per_cell, TensorFn generator = {});

    Index size() const { return static_cast<Index>(g_.size()); }
    const SmallMat& operator[](Index c) const { return g_[static_cast<std::size_t>(c)]; }
    const SmallMat& inverse(Index c) const { return inv_[static_cast<std::size_t>(c)]; }
    /// sqrt(det g) on cell c.
    double density(Index c) const { return density_[static_cast<std::size_t>(c)]; }
    const TensorFn& generator() const { return generator_; }

    /// Riemannian volume of cell c.
    double cell_volume(const Mesh& mesh, Index c) const;
    double total_volume(const Mesh& mesh) const;

private:
    std::vector<SmallMat> g_;
    std::vector<SmallMat> inv_;
    std::vector<double> density_;
    TensorFn generator_;
};

/// Per-cell symmetric (0,2)-tensor (T, H, the response tensor, Ric or G).
struct SymTensorField
{
    TensorRole role = TensorRole::T;
    std::vector<SmallMat> values;

    SymTensorField() = default;
    SymTensorField(TensorRole role, std::vector<SmallMat> per_cell);

    Index size() const { return static_cast<Index>(values.size()); }
    const SmallMat& operator[](Index c) const { return values[static_cast<std::size_t>(c)]; }
};

/// Per-vertex scalar (eta, eta rate, psi, trace h, curvature, eigenfunction).
/// The optional generator allows exact re-sampling at moved points.
struct ScalarField
{
    ScalarRole role = ScalarRole::Eta;
    Eigen::VectorXd values;
    ScalarFn generator;

    ScalarField() = default;
    ScalarField(ScalarRole role, Eigen::VectorXd per_vertex, ScalarFn generator = {});

    double cell_mean(const Mesh& mesh, Index c) const;
};

/// Per-vertex vector field in chart components (chart meshes only).
struct VectorField
{
    Eigen::MatrixXd values; ///< num_vertices x dim
    VectorFn generator;

    VectorField() = default;
    explicit VectorField(Eigen::MatrixXd per_vertex, VectorFn generator = {});

    /// Piecewise-linear chart Jacobian dV^k/dx^j on cell c (row k, column j).
    SmallMat cell_jacobian(const Mesh& mesh, Index c) const;
    SmallVec cell_mean(const Mesh& mesh, Index c) const;
};

ScalarField sample_scalar(const Mesh& mesh, ScalarRole role, ScalarFn fn);
ScalarField constant_scalar(const Mesh& mesh, ScalarRole role, double value);
VectorField sample_vector(const Mesh& mesh, VectorFn fn);
/// Samples fn at every cell centroid.
SymTensorField sample_tensor(const Mesh& mesh, TensorRole role, const TensorFn& fn);

/// Flat chart metric for chart meshes; pullback of the Euclidean metric of
/// R^3 to each facet (in its reference chart) for embedded spheres.
MetricField induced_metric(const Mesh& mesh);
/// Samples a chart metric g(x) at cell centroids (chart meshes only).
MetricField chart_metric(const Mesh& mesh, TensorFn g);

/// (alpha, beta): extreme generalized eigenvalues of the pencil (T, g) over all cells.
/// Throws InvalidInput naming the first cell where T is not positive definite.
std::pair<double, double> ellipticity_bounds(const SymTensorField& T, const MetricField& g);

/// g + tH cell by cell. Throws NumericalFailure when the result loses
/// positive definiteness.
MetricField perturb_metric(const MetricField& g, const SymTensorField& H, double t);

/// Lie derivative of g along V: D^T g + g D + V^k d_k g with D = dV/dx.
SymTensorField lie_derivative_metric(const Mesh& mesh, const MetricField& g, const VectorField& V);

/// h = g^{ij} H_ij per cell.
std::vector<double> metric_trace(const MetricField& g, const SymTensorField& H);

/// Generalized eigenvalues of the 2x2 (or 1x1) pencil (A, g), ascending.
SmallVec pencil_eigenvalues(const SmallMat& A, const SmallMat& g);

/// Largest |A_ij - A_ji| relative to the largest entry.
double asymmetry(const SmallMat& A);

} // namespace hadamard
