#include "hadamard/fields.hpp"

#include "hadamard/error.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace hadamard {

double asymmetry(const SmallMat& A)
{
    const double scale = A.cwiseAbs().maxCoeff();
    if (scale == 0.0) {
        return 0.0;
    }
    return (A - A.transpose()).cwiseAbs().maxCoeff() / scale;
}

SmallVec pencil_eigenvalues(const SmallMat& A, const SmallMat& g)
{
    Eigen::LLT<SmallMat> llt(g);
    if (llt.info() != Eigen::Success) {
        throw InvalidInput("metric is not positive definite");
    }
    const SmallMat L = llt.matrixL();
    const SmallMat Linv = L.inverse();
    SmallMat M = Linv * A * Linv.transpose();
    M = 0.5 * (M + M.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<SmallMat> es(M, Eigen::EigenvaluesOnly);
    return es.eigenvalues();
}

MetricField::MetricField(std::vector<SmallMat> per_cell, TensorFn generator)
    : g_(std::move(per_cell))
    , generator_(std::move(generator))
{
    inv_.resize(g_.size());
    density_.resize(g_.size());
    for (std::size_t c = 0; c < g_.size(); ++c) {
        SmallMat& g = g_[c];
        if (!g.allFinite() || g.rows() != g.cols() || g.rows() == 0) {
            throw InvalidInput("metric on cell " + std::to_string(c) + " is malformed");
        }
        if (asymmetry(g) > 1e-10) {
            throw InvalidInput("metric on cell " + std::to_string(c) + " is not symmetric");
        }
        g = 0.5 * (g + g.transpose()).eval();
        Eigen::LLT<SmallMat> llt(g);
        if (llt.info() != Eigen::Success) {
            throw InvalidInput("metric on cell " + std::to_string(c) + " is not positive definite");
        }
        const double det = g.determinant();
        if (!(det > 0.0)) {
            throw InvalidInput("degenerate metric on cell " + std::to_string(c));
        }
        density_[c] = std::sqrt(det);
        inv_[c] = g.inverse();
    }
}

double MetricField::cell_volume(const Mesh& mesh, Index c) const
{
    return mesh.chart(c).chart_volume * density(c);
}

double MetricField::total_volume(const Mesh& mesh) const
{
    double total = 0.0;
    for (Index c = 0; c < size(); ++c) {
        total += cell_volume(mesh, c);
    }
    return total;
}

SymTensorField::SymTensorField(TensorRole r, std::vector<SmallMat> per_cell)
    : role(r)
    , values(std::move(per_cell))
{
    for (std::size_t c = 0; c < values.size(); ++c) {
        SmallMat& A = values[c];
        if (!A.allFinite() || A.rows() != A.cols()) {
            throw InvalidInput("tensor on cell " + std::to_string(c) + " is malformed");
        }
        if (asymmetry(A) > 1e-10) {
            throw InvalidInput("tensor on cell " + std::to_string(c) + " is not symmetric");
        }
        A = 0.5 * (A + A.transpose()).eval();
    }
}

ScalarField::ScalarField(ScalarRole r, Eigen::VectorXd per_vertex, ScalarFn gen)
    : role(r)
    , values(std::move(per_vertex))
    , generator(std::move(gen))
{
    if (!values.allFinite()) {
        throw InvalidInput("scalar field has non-finite values");
    }
    if (role == ScalarRole::Psi && values.size() > 0 && !(values.minCoeff() > 0.0)) {
        throw InvalidInput("psi must be strictly positive");
    }
}

double ScalarField::cell_mean(const Mesh& mesh, Index c) const
{
    double sum = 0.0;
    for (int a = 0; a <= mesh.dim(); ++a) {
        sum += values(mesh.cells()(c, a));
    }
    return sum / (mesh.dim() + 1);
}

VectorField::VectorField(Eigen::MatrixXd per_vertex, VectorFn gen)
    : values(std::move(per_vertex))
    , generator(std::move(gen))
{
    if (!values.allFinite()) {
        throw InvalidInput("vector field has non-finite values");
    }
}

SmallMat VectorField::cell_jacobian(const Mesh& mesh, Index c) const
{
    if (!mesh.has_global_chart()) {
        throw InvalidInput("vector fields need a mesh with a global chart");
    }
    const int d = mesh.dim();
    if (values.rows() != mesh.num_vertices() || values.cols() != d) {
        throw InvalidInput("vector field shape does not match the mesh");
    }
    const CellChart& chart = mesh.chart(c);
    SmallMat D = SmallMat::Zero(d, d);
    for (int a = 0; a <= d; ++a) {
        const int v = mesh.cells()(c, a);
        for (int k = 0; k < d; ++k) {
            for (int j = 0; j < d; ++j) {
                D(k, j) += values(v, k) * chart.gradients(j, a);
            }
        }
    }
    return D;
}

SmallVec VectorField::cell_mean(const Mesh& mesh, Index c) const
{
    const int d = mesh.dim();
    SmallVec mean = SmallVec::Zero(d);
    for (int a = 0; a <= d; ++a) {
        mean += values.row(mesh.cells()(c, a)).transpose();
    }
    return mean / (d + 1);
}

ScalarField sample_scalar(const Mesh& mesh, ScalarRole role, ScalarFn fn)
{
    Eigen::VectorXd values(mesh.num_vertices());
    for (Index v = 0; v < mesh.num_vertices(); ++v) {
        values(v) = fn(mesh.vertices().row(v).transpose());
    }
    return ScalarField(role, std::move(values), std::move(fn));
}

ScalarField constant_scalar(const Mesh& mesh, ScalarRole role, double value)
{
    return ScalarField(role, Eigen::VectorXd::Constant(mesh.num_vertices(), value),
                       [value](const SmallVec&) { return value; });
}

VectorField sample_vector(const Mesh& mesh, VectorFn fn)
{
    if (!mesh.has_global_chart()) {
        throw InvalidInput("vector fields need a mesh with a global chart");
    }
    Eigen::MatrixXd values(mesh.num_vertices(), mesh.dim());
    for (Index v = 0; v < mesh.num_vertices(); ++v) {
        const SmallVec x = mesh.vertices().row(v).transpose();
        const SmallVec y = fn(x);
        if (y.size() != mesh.dim()) {
            throw InvalidInput("vector field generator returned the wrong dimension");
        }
        values.row(v) = y.transpose();
    }
    return VectorField(std::move(values), std::move(fn));
}

SymTensorField sample_tensor(const Mesh& mesh, TensorRole role, const TensorFn& fn)
{
    std::vector<SmallMat> values(static_cast<std::size_t>(mesh.num_cells()));
    for (Index c = 0; c < mesh.num_cells(); ++c) {
        values[static_cast<std::size_t>(c)] = fn(mesh.centroid(c));
    }
    return SymTensorField(role, std::move(values));
}

MetricField induced_metric(const Mesh& mesh)
{
    std::vector<SmallMat> g(static_cast<std::size_t>(mesh.num_cells()));
    const int d = mesh.dim();
    if (mesh.topology() == Topology::Sphere) {
        for (Index c = 0; c < mesh.num_cells(); ++c) {
            SmallMat E(3, 2);
            const Eigen::Vector3d p0 = mesh.vertices().row(mesh.cells()(c, 0)).transpose();
            E.col(0) = mesh.vertices().row(mesh.cells()(c, 1)).transpose() - p0;
            E.col(1) = mesh.vertices().row(mesh.cells()(c, 2)).transpose() - p0;
            g[static_cast<std::size_t>(c)] = E.transpose() * E;
        }
        return MetricField(std::move(g));
    }
    for (auto& m : g) {
        m = SmallMat::Identity(d, d);
    }
    return MetricField(std::move(g), [d](const SmallVec&) -> SmallMat { return SmallMat::Identity(d, d); });
}

MetricField chart_metric(const Mesh& mesh, TensorFn fn)
{
    if (!mesh.has_global_chart()) {
        throw InvalidInput("chart metrics need a mesh with a global chart");
    }
    std::vector<SmallMat> g(static_cast<std::size_t>(mesh.num_cells()));
    for (Index c = 0; c < mesh.num_cells(); ++c) {
        g[static_cast<std::size_t>(c)] = fn(mesh.centroid(c));
        if (g[static_cast<std::size_t>(c)].rows() != mesh.dim()) {
            throw InvalidInput("chart metric generator returned the wrong dimension");
        }
    }
    return MetricField(std::move(g), std::move(fn));
}

std::pair<double, double> ellipticity_bounds(const SymTensorField& T, const MetricField& g)
{
    if (T.size() != g.size()) {
        throw InvalidInput("tensor and metric live on different meshes");
    }
    double alpha = std::numeric_limits<double>::infinity();
    double beta = -std::numeric_limits<double>::infinity();
    for (Index c = 0; c < T.size(); ++c) {
        const SmallVec ev = pencil_eigenvalues(T[c], g[c]);
        if (!(ev.minCoeff() > 0.0)) {
            throw InvalidInput("tensor T is not positive definite on cell " + std::to_string(c));
        }
        alpha = std::min(alpha, ev.minCoeff());
        beta = std::max(beta, ev.maxCoeff());
    }
    return {alpha, beta};
}

MetricField perturb_metric(const MetricField& g, const SymTensorField& H, double t)
{
    if (H.size() != g.size()) {
        throw InvalidInput("metric variation lives on a different mesh");
    }
    if (t == 0.0) {
        return g;
    }
    std::vector<SmallMat> values(static_cast<std::size_t>(g.size()));
    for (Index c = 0; c < g.size(); ++c) {
        SmallMat m = g[c] + t * H[c];
        Eigen::LLT<SmallMat> llt(m);
        if (llt.info() != Eigen::Success || !(m.determinant() > 0.0)) {
            throw NumericalFailure("perturbed metric g + tH loses positive definiteness on cell "
                                   + std::to_string(c) + " at t = " + std::to_string(t));
        }
        values[static_cast<std::size_t>(c)] = std::move(m);
    }
    return MetricField(std::move(values));
}

SymTensorField lie_derivative_metric(const Mesh& mesh, const MetricField& g, const VectorField& V)
{
    if (g.size() != mesh.num_cells()) {
        throw InvalidInput("metric does not match the mesh");
    }
    const int d = mesh.dim();
    std::vector<SmallMat> H(static_cast<std::size_t>(mesh.num_cells()));
    for (Index c = 0; c < mesh.num_cells(); ++c) {
        const SmallMat D = V.cell_jacobian(mesh, c);
        SmallMat h = D.transpose() * g[c] + g[c] * D;
        if (g.generator()) {
            const SmallVec x = mesh.centroid(c);
            const SmallVec v = V.cell_mean(mesh, c);
            const double eps = 1e-6 * std::max(1.0, x.cwiseAbs().maxCoeff());
            for (int k = 0; k < d; ++k) {
                SmallVec xp = x, xm = x;
                xp(k) += eps;
                xm(k) -= eps;
                h += v(k) * (g.generator()(xp) - g.generator()(xm)) / (2.0 * eps);
            }
        }
        H[static_cast<std::size_t>(c)] = h;
    }
    return SymTensorField(TensorRole::H, std::move(H));
}

std::vector<double> metric_trace(const MetricField& g, const SymTensorField& H)
{
    if (H.size() != g.size()) {
        throw InvalidInput("metric variation lives on a different mesh");
    }
    std::vector<double> h(static_cast<std::size_t>(g.size()));
    for (Index c = 0; c < g.size(); ++c) {
        h[static_cast<std::size_t>(c)] = (g.inverse(c) * H[c]).trace();
    }
    return h;
}

} // namespace hadamard
