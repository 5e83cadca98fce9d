#include "hadamard/assembly.hpp"
#include "hadamard/domain_variation.hpp"
#include "hadamard/eigensolver.hpp"
#include "hadamard/error.hpp"
#include "hadamard/random_fields.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace hadamard;

namespace {

VectorField dilation(const Mesh& mesh)
{
    return sample_vector(mesh, [](const SmallVec& x) { return x; });
}

} // namespace

TEST(DomainVariation, IntervalDilationIsMinusTwoLambda)
{
    const auto mesh = std::make_shared<const Mesh>(make_interval(0.0, std::numbers::pi, 2000));
    const Problem p = laplace_problem(mesh, BoundaryCondition::Dirichlet);
    const Spectrum sp = solve_eigen(assemble(p), 3);
    for (Index k = 0; k < 3; ++k) {
        const double exact = -2.0 * (k + 1.0) * (k + 1.0);
        EXPECT_NEAR(boundary_slopes(p, sp, {k}, dilation(*mesh)).slopes[0], exact, 1e-5 * std::abs(exact));
    }
}

TEST(DomainVariation, OutwardDirichletMotionLowersEigenvalues)
{
    const auto mesh = std::make_shared<const Mesh>(make_disk(1.0, 10));
    const Problem p = laplace_problem(mesh, BoundaryCondition::Dirichlet);
    const Spectrum sp = solve_eigen(assemble(p), 6);
    auto rng = substream(9, 0);
    const ScalarFn bump = random_smooth_function(*mesh, rng, 3, 1.0);
    // V = (1 + bump) x has <V, nu> >= 0 on the unit circle (bump >= -1)
    const VectorField V = sample_vector(*mesh, [&](const SmallVec& x) -> SmallVec { return (1.0 + bump(x)) * x; });
    for (const auto& cl : group_multiplets(sp)) {
        for (double s : boundary_slopes(p, sp, cl, V).slopes) {
            EXPECT_LE(s, 1e-10);
        }
    }
}

TEST(DomainVariation, VolumePreservingProfile)
{
    const auto mesh = std::make_shared<const Mesh>(make_annulus(0.5, 1.0, 6));
    Problem p = laplace_problem(mesh, BoundaryCondition::Dirichlet);
    p.eta = sample_scalar(*mesh, ScalarRole::Eta, [](const SmallVec& x) { return 0.4 * x(0); });
    const auto frames = boundary_frames(p);
    BoundaryField profile;
    for (const auto& fr : frames) {
        profile.values.push_back(1.0 + std::sin(3.0 * fr.s) + fr.component);
    }
    const BoundaryField v = make_volume_preserving(p, profile);
    EXPECT_LE(std::abs(boundary_integral(p, v)), 1e-12 * boundary_abs_integral(p, v));
    const BoundaryField w = make_two_component(p);
    EXPECT_LE(std::abs(boundary_integral(p, w)), 1e-12 * boundary_abs_integral(p, w));
}

TEST(DomainVariation, BoundaryFramesMeasurePerimeter)
{
    const auto mesh = std::make_shared<const Mesh>(make_rectangle(0.0, 2.0, 0.0, 1.0, 8, GridPattern::CrissCross));
    const Problem p = laplace_problem(mesh, BoundaryCondition::Dirichlet);
    double perimeter = 0.0;
    for (const auto& fr : boundary_frames(p)) {
        perimeter += fr.measure;
        EXPECT_NEAR(fr.normal.norm(), 1.0, 1e-14);
        EXPECT_GT(fr.normal.dot(fr.midpoint - (SmallVec(2) << 1.0, 0.5).finished()), 0.0);
    }
    EXPECT_NEAR(perimeter, 6.0, 1e-12);
}

TEST(DomainVariation, NeumannMatchesPullbackFd)
{
    const auto mesh = std::make_shared<const Mesh>(
        make_rectangle(0.0, std::numbers::pi, 0.0, std::numbers::pi, 16, GridPattern::CrissCross));
    const Problem p = laplace_problem(mesh, BoundaryCondition::TNeumann);
    const Spectrum sp = solve_eigen(assemble(p), 4);
    auto rng = substream(4, 0);
    const VectorField V = random_vector_field(*mesh, rng, 2, 0.3);
    const Cluster cl = cluster_near(sp, 1.0);
    const BranchSlopes pred = boundary_slopes(p, sp, cl, V);
    const FdSlopes fd = fd_domain_slopes(p, TensorFamily::metric_itself(), V, sp, cl);
    EXPECT_LT(compare_slopes(pred, fd).max_rel_err(), 0.02);
}

TEST(DomainVariation, TangentialFieldsDoNotMoveTheSpectrum)
{
    const auto mesh = std::make_shared<const Mesh>(
        make_rectangle(0.0, std::numbers::pi, 0.0, std::numbers::pi, 12, GridPattern::CrissCross));
    const Problem p = laplace_problem(mesh, BoundaryCondition::TNeumann);
    const Spectrum sp = solve_eigen(assemble(p), 4);
    const VectorField V = sample_vector(*mesh, [](const SmallVec& x) -> SmallVec {
        SmallVec v(2);
        v << std::sin(x(0)) * std::cos(x(1)), std::sin(x(1)) * (1.0 + x(0));
        return v;
    });
    for (const auto& cl : group_multiplets(sp)) {
        for (double s : boundary_slopes(p, sp, cl, V).slopes) {
            EXPECT_LE(std::abs(s), 1e-8 * (1.0 + sp.values(cl[0])));
        }
    }
}

TEST(DomainVariation, ExtremalCheckNeedsDirichlet)
{
    const auto mesh = std::make_shared<const Mesh>(make_disk(1.0, 6));
    const Problem p = laplace_problem(mesh, BoundaryCondition::TNeumann);
    const Spectrum sp = solve_eigen(assemble(p), 2);
    EXPECT_THROW(extremal_check(p, sp, 0), InvalidInput);

    const Problem d = laplace_problem(mesh, BoundaryCondition::Dirichlet);
    const Spectrum sd = solve_eigen(assemble(d), 2);
    const ExtremalReport r = extremal_check(d, sd, 0);
    EXPECT_LT(r.deviation_ratio, 0.05);
    EXPECT_EQ(boundary_csv(r).substr(0, 25), "face_id,component,s,value");
}
