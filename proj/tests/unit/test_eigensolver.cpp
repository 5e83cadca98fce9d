#include "hadamard/assembly.hpp"
#include "hadamard/eigensolver.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <Eigen/Dense>

#include <numbers>

using namespace hadamard;

namespace {

std::shared_ptr<const Mesh> interval(int n)
{
    return std::make_shared<const Mesh>(make_interval(0.0, std::numbers::pi, n));
}

} // namespace

TEST(Eigensolver, RayleighQuotientIdentity)
{
    const auto mesh = std::make_shared<const Mesh>(make_rectangle(0.0, 2.0, 0.0, 1.0, 30, GridPattern::CrissCross));
    const OperatorPair op = assemble(laplace_problem(mesh, BoundaryCondition::Dirichlet));
    const Spectrum sp = solve_eigen(op, 8);
    for (Index i = 0; i < sp.size(); ++i) {
        const Eigen::VectorXd x = sp.free_modes.col(i);
        const double rq = x.dot(op.K * x) / x.dot(op.B * x);
        EXPECT_NEAR(rq, sp.values(i), 1e-10 * sp.values(i));
    }
    EXPECT_LT(sp.orthonormality_residual, 1e-10);
}

TEST(Eigensolver, KrylovAndDenseAgree)
{
    const auto mesh = std::make_shared<const Mesh>(make_rectangle(0.0, 1.0, 0.0, 1.0, 14, GridPattern::CrissCross));
    const OperatorPair op = assemble(laplace_problem(mesh, BoundaryCondition::TNeumann));
    EigenOptions dense, krylov;
    dense.dense_threshold = 100000;
    krylov.dense_threshold = 0;
    const Spectrum a = solve_eigen(op, 7, dense), b = solve_eigen(op, 7, krylov);
    for (Index i = 0; i < 7; ++i) {
        EXPECT_NEAR(a.values(i), b.values(i), 1e-9 * (1.0 + a.values(i)));
    }
}

TEST(Eigensolver, DirichletUpperBoundsDecreaseUnderRefinement)
{
    const auto exact = oracle::interval_dirichlet(std::numbers::pi, 4);
    Eigen::VectorXd previous;
    for (int n : {20, 40, 80, 160}) {
        const Spectrum sp = solve_eigen(assemble(laplace_problem(interval(n), BoundaryCondition::Dirichlet)), 4);
        for (Index i = 0; i < 4; ++i) {
            EXPECT_GT(sp.values(i), exact[static_cast<std::size_t>(i)]);
            if (previous.size()) {
                EXPECT_LT(sp.values(i), previous(i));
            }
        }
        previous = sp.values;
    }
}

TEST(Eigensolver, ShiftOfEtaAndScalingOfT)
{
    const auto mesh = std::make_shared<const Mesh>(make_rectangle(0.0, 1.0, 0.0, 1.0, 12, GridPattern::CrissCross));
    Problem p = laplace_problem(mesh, BoundaryCondition::Dirichlet);
    p.eta = sample_scalar(*mesh, ScalarRole::Eta, [](const SmallVec& x) { return 0.3 * x(0) * x(1); });
    const Spectrum base = solve_eigen(assemble(p), 5);

    Problem shifted = p;
    shifted.eta.values.array() += 2.5;
    const Spectrum s = solve_eigen(assemble(shifted), 5);

    Problem doubled = p;
    for (auto& t : doubled.tensor.values) {
        t *= 2.0;
    }
    const Spectrum d = solve_eigen(assemble(doubled), 5);
    for (Index i = 0; i < 5; ++i) {
        EXPECT_NEAR(s.values(i), base.values(i), 1e-10 * base.values(i));
        EXPECT_NEAR(d.values(i), 2.0 * base.values(i), 1e-12 * base.values(i));
    }
}

TEST(Eigensolver, MultipletsOnSymmetricMeshes)
{
    const auto mesh = std::make_shared<const Mesh>(
        make_rectangle(0.0, std::numbers::pi, 0.0, std::numbers::pi, 24, GridPattern::CrissCross));
    const Spectrum sp = solve_eigen(assemble(laplace_problem(mesh, BoundaryCondition::Dirichlet)), 6);
    const auto groups = group_multiplets(sp);
    ASSERT_GE(groups.size(), 3u);
    EXPECT_EQ(groups[0].size(), 1u);
    EXPECT_EQ(groups[1].size(), 2u);
    EXPECT_EQ(cluster_near(sp, 5.0), groups[1]);
    const std::string csv = spectrum_csv(sp);
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "index,lambda,cluster_id,residual");
}
