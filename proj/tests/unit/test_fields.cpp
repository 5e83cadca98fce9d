#include "hadamard/assembly.hpp"
#include "hadamard/domain_variation.hpp"
#include "hadamard/error.hpp"
#include "hadamard/fields.hpp"
#include "hadamard/random_fields.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace hadamard;

namespace {

SmallMat mat2(double a, double b, double c)
{
    SmallMat m(2, 2);
    m << a, b, b, c;
    return m;
}

} // namespace

TEST(Fields, MetricValidation)
{
    EXPECT_THROW(MetricField({mat2(1.0, 2.0, 1.0)}), InvalidInput); // indefinite
    SmallMat asym(2, 2);
    asym << 1.0, 0.1, 0.3, 1.0;
    EXPECT_THROW(MetricField({asym}), InvalidInput);
    const MetricField g({mat2(4.0, 0.0, 9.0)});
    EXPECT_DOUBLE_EQ(g.density(0), 6.0);
    EXPECT_NEAR((g.inverse(0) * g[0] - SmallMat::Identity(2, 2)).norm(), 0.0, 1e-15);
}

TEST(Fields, EllipticityBoundsOrdered)
{
    const Mesh mesh = make_rectangle(0.0, 1.0, 0.0, 1.0, 4, GridPattern::Diagonal);
    const MetricField g = induced_metric(mesh);
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 20; ++trial) {
        const double a = uniform(rng, 0.5, 2.0), b = uniform(rng, -0.4, 0.4), c = uniform(rng, 0.5, 2.0);
        const SymTensorField T = sample_tensor(mesh, TensorRole::T, [&](const SmallVec&) { return mat2(a, b, c); });
        const auto [alpha, beta] = ellipticity_bounds(T, g);
        EXPECT_GT(alpha, 0.0);
        EXPECT_LE(alpha, beta);
    }
    const SymTensorField bad = sample_tensor(mesh, TensorRole::T, [](const SmallVec&) { return mat2(1.0, 0.0, -1.0); });
    EXPECT_THROW(ellipticity_bounds(bad, g), InvalidInput);
}

TEST(Fields, PerturbMetricLosesDefiniteness)
{
    const Mesh mesh = make_interval(0.0, 1.0, 4);
    const MetricField g = induced_metric(mesh);
    const SymTensorField H(TensorRole::H, std::vector<SmallMat>(4, -SmallMat::Identity(1, 1)));
    EXPECT_NO_THROW(perturb_metric(g, H, 0.5));
    EXPECT_THROW(perturb_metric(g, H, 1.5), NumericalFailure);
}

TEST(Fields, VolumeDerivativeIsHalfTrace)
{
    // d/dt dm_t = h/2 dm with h = tr_g H
    const Mesh mesh = make_rectangle(0.0, 1.0, 0.0, 1.0, 6, GridPattern::CrissCross);
    const MetricField g = chart_metric(mesh, [](const SmallVec& x) { return mat2(1.0 + x(0), 0.2 * x(1), 2.0); });
    std::mt19937_64 rng(17);
    const SymTensorField H = random_metric_variation(mesh, g, rng);
    const auto h = metric_trace(g, H);
    const double eps = 1e-5;
    const MetricField gp = perturb_metric(g, H, eps), gm = perturb_metric(g, H, -eps);
    for (Index c = 0; c < mesh.num_cells(); ++c) {
        const double fd = (gp.cell_volume(mesh, c) - gm.cell_volume(mesh, c)) / (2.0 * eps);
        EXPECT_NEAR(fd, 0.5 * h[static_cast<std::size_t>(c)] * g.cell_volume(mesh, c), 1e-9);
    }
}

TEST(Fields, LieDerivativeMatchesPullbackDifference)
{
    const auto mesh = std::make_shared<const Mesh>(make_rectangle(0.0, 1.0, 0.0, 1.0, 6, GridPattern::CrissCross));
    const Problem p = laplace_problem(mesh, BoundaryCondition::Dirichlet);
    const VectorField V = sample_vector(*mesh, [](const SmallVec& x) {
        SmallVec v(2);
        v << std::sin(x(1)) + 0.3 * x(0), x(0) * x(1);
        return v;
    });
    const SymTensorField L = lie_derivative_metric(*mesh, p.metric, V);
    for (double t : {1e-3, 1e-4}) {
        const MetricField gt = pullback_metric(p, V, t).metric;
        double worst = 0.0;
        for (Index c = 0; c < mesh->num_cells(); ++c) {
            worst = std::max(worst, ((gt[c] - p.metric[c]) / t - L[c]).cwiseAbs().maxCoeff());
        }
        EXPECT_LT(worst, 20.0 * t); // first-order agreement
    }
}

TEST(Fields, RandomFieldsAreReproducible)
{
    const Mesh mesh = make_rectangle(0.0, 1.0, 0.0, 1.0, 5, GridPattern::CrissCross);
    auto a = substream(42, 3), b = substream(42, 3), c = substream(42, 4);
    const ScalarFn fa = random_smooth_function(mesh, a, 3, 0.5);
    const ScalarFn fb = random_smooth_function(mesh, b, 3, 0.5);
    const ScalarFn fc = random_smooth_function(mesh, c, 3, 0.5);
    double peak = 0.0, diff = 0.0;
    for (Index v = 0; v < mesh.num_vertices(); ++v) {
        const SmallVec x = mesh.vertices().row(v).transpose();
        EXPECT_EQ(fa(x), fb(x));
        peak = std::max(peak, std::abs(fa(x)));
        diff = std::max(diff, std::abs(fa(x) - fc(x)));
    }
    EXPECT_NEAR(peak, 0.5, 1e-12);
    EXPECT_GT(diff, 1e-3);
}
