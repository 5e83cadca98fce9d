#include "hadamard/assembly.hpp"
#include "hadamard/error.hpp"

#include <gtest/gtest.h>

#include <Eigen/Dense>

#include <cmath>

using namespace hadamard;

TEST(Assembly, MatricesAreSymmetricAndMassIsPositive)
{
    const auto mesh = std::make_shared<const Mesh>(make_disk(1.0, 6));
    const OperatorPair op = assemble(laplace_problem(mesh, BoundaryCondition::TNeumann));
    const Eigen::MatrixXd K(op.K), B(op.B);
    EXPECT_NEAR((K - K.transpose()).cwiseAbs().maxCoeff(), 0.0, 1e-14);
    EXPECT_NEAR((B - B.transpose()).cwiseAbs().maxCoeff(), 0.0, 1e-14);
    // constants are in the kernel of K; 1^T B 1 is the area
    const Eigen::VectorXd one = Eigen::VectorXd::Ones(op.size());
    EXPECT_NEAR((K * one).cwiseAbs().maxCoeff(), 0.0, 1e-12);
    EXPECT_NEAR(one.dot(B * one), induced_metric(*mesh).total_volume(*mesh), 1e-12);
    EXPECT_GT(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(B).eigenvalues().minCoeff(), 0.0);
}

TEST(Assembly, DirichletEliminatesBoundaryVertices)
{
    const auto mesh = std::make_shared<const Mesh>(make_rectangle(0.0, 1.0, 0.0, 1.0, 4, GridPattern::Diagonal));
    const OperatorPair op = assemble(laplace_problem(mesh, BoundaryCondition::Dirichlet));
    EXPECT_EQ(op.size(), 9);
    const Eigen::VectorXd u = Eigen::VectorXd::LinSpaced(op.size(), 1.0, 2.0);
    EXPECT_EQ(op.restrict_to_free(op.expand(u)), u);
}

TEST(Assembly, WeightedStiffnessUsesExpMinusEta)
{
    // constant eta = c multiplies both K and B by e^{-c}
    const auto mesh = std::make_shared<const Mesh>(make_interval(0.0, 1.0, 5));
    Problem p = laplace_problem(mesh, BoundaryCondition::Dirichlet);
    const OperatorPair a = assemble(p);
    p.eta = constant_scalar(*mesh, ScalarRole::Eta, 0.7);
    const OperatorPair b = assemble(p);
    EXPECT_NEAR((Eigen::MatrixXd(b.K) - std::exp(-0.7) * Eigen::MatrixXd(a.K)).norm(), 0.0, 1e-12);
    EXPECT_NEAR((Eigen::MatrixXd(b.B) - std::exp(-0.7) * Eigen::MatrixXd(a.B)).norm(), 0.0, 1e-12);
}

TEST(Assembly, RejectsNonEllipticTensor)
{
    const auto mesh = std::make_shared<const Mesh>(make_interval(0.0, 1.0, 5));
    Problem p = laplace_problem(mesh, BoundaryCondition::Dirichlet);
    p.tensor.values[2] = -SmallMat::Identity(1, 1);
    EXPECT_THROW(assemble(p), InvalidInput);
    p = laplace_problem(mesh, BoundaryCondition::Dirichlet);
    p.tensor.values.pop_back();
    EXPECT_THROW(assemble(p), InvalidInput);
}

TEST(Assembly, LocalMassIntegratesProducts)
{
    // int over the reference triangle of l_a l_b = (1 + delta_ab) / 24
    const SmallMat M = local_mass(2, 0.5);
    EXPECT_NEAR(M(0, 0), 1.0 / 12.0, 1e-15);
    EXPECT_NEAR(M(0, 1), 1.0 / 24.0, 1e-15);
    EXPECT_NEAR(M.sum(), 0.5, 1e-15);
}
