#include "hadamard/assembly.hpp"

#include "hadamard/error.hpp"
#include "hadamard/parallel.hpp"

#include <cmath>
#include <string>

namespace hadamard {

Problem laplace_problem(std::shared_ptr<const Mesh> mesh, BoundaryCondition bc)
{
    Problem p;
    p.metric = induced_metric(*mesh);
    std::vector<SmallMat> t;
    t.reserve(static_cast<std::size_t>(p.metric.size()));
    for (Index c = 0; c < p.metric.size(); ++c) {
        t.push_back(p.metric[c]);
    }
    p.tensor = SymTensorField(TensorRole::T, std::move(t));
    p.eta = constant_scalar(*mesh, ScalarRole::Eta, 0.0);
    p.bc = bc;
    p.mesh = std::move(mesh);
    return p;
}

Eigen::VectorXd OperatorPair::restrict_to_free(const Eigen::VectorXd& full) const
{
    Eigen::VectorXd out(size());
    for (Index i = 0; i < size(); ++i) {
        out(i) = full(free_dofs[static_cast<std::size_t>(i)]);
    }
    return out;
}

Eigen::VectorXd OperatorPair::expand(const Eigen::VectorXd& free) const
{
    Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Index>(vertex_to_free.size()));
    for (Index i = 0; i < size(); ++i) {
        out(free_dofs[static_cast<std::size_t>(i)]) = free(i);
    }
    return out;
}

std::vector<double> cell_weights(const Mesh& mesh, const ScalarField& eta)
{
    std::vector<double> w(static_cast<std::size_t>(mesh.num_cells()));
    for (Index c = 0; c < mesh.num_cells(); ++c) {
        w[static_cast<std::size_t>(c)] = std::exp(-eta.cell_mean(mesh, c));
    }
    return w;
}

SmallMat local_mass(int dim, double volume)
{
    const int n = dim + 1;
    const double scale = volume / ((dim + 1.0) * (dim + 2.0));
    SmallMat M = SmallMat::Constant(n, n, scale);
    M.diagonal().array() += scale;
    return M;
}

SmallVec cell_gradient(const Mesh& mesh, Index c, const Eigen::VectorXd& u)
{
    const CellChart& chart = mesh.chart(c);
    const int d = mesh.dim();
    SmallVec local(d + 1);
    for (int a = 0; a <= d; ++a) {
        local(a) = u(mesh.cells()(c, a));
    }
    return chart.gradients * local;
}

namespace {

void validate(const Problem& p)
{
    if (!p.mesh) {
        throw InvalidInput("problem has no mesh");
    }
    const Mesh& mesh = *p.mesh;
    if (p.metric.size() != mesh.num_cells() || p.tensor.size() != mesh.num_cells()) {
        throw InvalidInput("metric or tensor does not match the mesh cell count");
    }
    if (p.eta.values.size() != mesh.num_vertices()) {
        throw InvalidInput("eta does not match the mesh vertex count");
    }
    for (Index c = 0; c < mesh.num_cells(); ++c) {
        if (p.metric[c].rows() != mesh.dim() || p.tensor[c].rows() != mesh.dim()) {
            throw InvalidInput("cell " + std::to_string(c) + " carries tensors of the wrong size");
        }
    }
    ellipticity_bounds(p.tensor, p.metric);
}

} // namespace

OperatorPair assemble(const Problem& problem)
{
    validate(problem);
    const Mesh& mesh = *problem.mesh;
    const int d = mesh.dim();
    const Index nv = mesh.num_vertices();

    OperatorPair op;
    op.bc = problem.bc;
    op.vertex_to_free.assign(static_cast<std::size_t>(nv), -1);
    for (Index v = 0; v < nv; ++v) {
        if (problem.bc == BoundaryCondition::Dirichlet && mesh.boundary_vertices()[static_cast<std::size_t>(v)]) {
            continue;
        }
        op.vertex_to_free[static_cast<std::size_t>(v)] = static_cast<Index>(op.free_dofs.size());
        op.free_dofs.push_back(v);
    }
    if (op.free_dofs.empty()) {
        throw InvalidInput("no free degrees of freedom remain after applying the boundary condition");
    }

    const auto weights = cell_weights(mesh, problem.eta);
    std::vector<SmallMat> ke(static_cast<std::size_t>(mesh.num_cells()));
    std::vector<SmallMat> me(static_cast<std::size_t>(mesh.num_cells()));
    parallel_for(mesh.num_cells(), [&](Index c) {
        const CellChart& chart = mesh.chart(c);
        const double vol = problem.metric.cell_volume(mesh, c) * weights[static_cast<std::size_t>(c)];
        const SmallMat& ginv = problem.metric.inverse(c);
        const SmallMat A = ginv * problem.tensor[c] * ginv;
        ke[static_cast<std::size_t>(c)] = vol * chart.gradients.transpose() * A * chart.gradients;
        me[static_cast<std::size_t>(c)] = local_mass(d, vol);
    });

    std::vector<Eigen::Triplet<double>> kt, bt;
    kt.reserve(static_cast<std::size_t>(mesh.num_cells() * (d + 1) * (d + 1)));
    bt.reserve(kt.capacity());
    for (Index c = 0; c < mesh.num_cells(); ++c) {
        for (int a = 0; a <= d; ++a) {
            const Index i = op.vertex_to_free[static_cast<std::size_t>(mesh.cells()(c, a))];
            if (i < 0) {
                continue;
            }
            for (int b = 0; b <= d; ++b) {
                const Index j = op.vertex_to_free[static_cast<std::size_t>(mesh.cells()(c, b))];
                if (j < 0) {
                    continue;
                }
                kt.emplace_back(i, j, ke[static_cast<std::size_t>(c)](a, b));
                bt.emplace_back(i, j, me[static_cast<std::size_t>(c)](a, b));
            }
        }
    }
    const Index n = op.size();
    op.K.resize(n, n);
    op.B.resize(n, n);
    op.K.setFromTriplets(kt.begin(), kt.end());
    op.B.setFromTriplets(bt.begin(), bt.end());
    // exact symmetry regardless of summation order
    op.K = 0.5 * (SparseMatrix(op.K.transpose()) + op.K);
    op.B = 0.5 * (SparseMatrix(op.B.transpose()) + op.B);
    return op;
}

} // namespace hadamard
