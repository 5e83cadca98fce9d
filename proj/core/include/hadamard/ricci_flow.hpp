#pragma once

#include "hadamard/assembly.hpp"
#include "hadamard/eigensolver.hpp"
#include "hadamard/variation.hpp"

#include <limits>
#include <string>
#include <string_view>
#include <vector>

namespace hadamard {

enum class FlowManifold { Sphere, FlatTorus };

std::string_view to_string(FlowManifold m);
FlowManifold flow_manifold_from_string(std::string_view name);

/// Ricci flow g(t) = c(t) g0 of a homogeneous metric.
///
/// Round sphere S^n of radius r: Ric = ric0 g0 with ric0 = (n-1)/r^2,
/// c(t) = 1 - 2 ric0 t, blow-up at delta = 1/(2 ric0). Flat torus
/// [0,L1]x[0,L2]: Ric = 0, c = 1, delta = infinity.
struct HomogeneousFlow
{
    FlowManifold manifold = FlowManifold::Sphere;
    int dim = 2;
    /// Sphere radius.
    double radius = 1.0;
    /// Torus side lengths.
    double lx = 2.0 * 3.14159265358979323846;
    double ly = 2.0 * 3.14159265358979323846;

    static HomogeneousFlow sphere(int n, double radius = 1.0);
    static HomogeneousFlow flat_torus(double lx, double ly);

    /// Ric = ric0 g0.
    double ric0() const;
    /// Scalar curvature of g0.
    double scalar0() const;
    double blowup_time() const;
    double scale(double t) const;
};

/// Tensor family along the flow with constant psi: T = psi g(t) for
/// MetricItself / ConformalWeight, T = psi g0 frozen for Fixed.
struct FlowFamily
{
    FamilyRule rule = FamilyRule::MetricItself;
    double psi = 1.0;
};

/// Everything at time t as multiples of g0: g = c g0, Ric = ric g0,
/// T = a g0, T' = b g0.
struct FlowState
{
    double t = 0.0;
    double c = 1.0;
    double R = 0.0;
    double ric = 0.0;
    double a = 1.0;
    double b = 0.0;
};

FlowState flow_state(const HomogeneousFlow& flow, const FlowFamily& family, double t);

/// Integrals of an eigenpair entering the eigenvalue evolution, taken with
/// respect to e^{-eta} dm at time t.
struct FlowIntegrals
{
    double lambda = 0.0;
    /// int u^2
    double mass = 1.0;
    /// int R (lambda u^2 - T(grad u, grad u))
    double curvature_term = 0.0;
    /// int 4 Ric(T grad u, grad u) + T'(grad u, grad u)
    double tensor_term = 0.0;
};

/// lambda' = curvature_term + tensor_term. Throws InvalidInput when u is
/// not mass-normalized (|mass - 1| > tol).
double evolution_rhs(const FlowIntegrals& integrals, double tol = 1e-8);

/// Closed-form integrals for an eigenfunction of the homogeneous metric
/// with int |du|^2_{g0} = mu (the g0 Laplace eigenvalue).
FlowIntegrals analytic_integrals(const FlowState& state, int dim, double mu);

/// Quadrature of the integrals for P1 mode `u` (all vertices) on `problem`,
/// which must carry the state's metric and tensor; Ric = ric g0 and
/// T' = b g0 per cell with g0 the reference metric.
FlowIntegrals fem_integrals(const Problem& problem, const MetricField& g0, const FlowState& state,
                            const Eigen::VectorXd& u, double lambda);

/// Distinct g0 Laplace eigenvalues (levels) and multiplicities.
struct AnalyticLevel
{
    double mu = 0.0;
    long long multiplicity = 0;
};
std::vector<AnalyticLevel> analytic_levels(const HomogeneousFlow& flow, int count);

/// lambda(t) for the family from the g0 eigenvalue mu.
double exact_lambda(const HomogeneousFlow& flow, const FlowFamily& family, double mu, double t);
double exact_lambda_prime(const HomogeneousFlow& flow, const FlowFamily& family, double mu, double t);

struct FlowOptions
{
    /// Icosphere subdivision for the FEM path on S^2 (0 disables it).
    int fem_level = 0;
    EigenOptions eigen;
};

struct FlowSeries
{
    int level = 0;
    double mu = 0.0;
    long long multiplicity = 0;
    std::vector<double> lambda;
    std::vector<double> lambda_prime_pred;
    std::vector<double> lambda_prime_exact;
    /// FEM path (empty when disabled).
    std::vector<double> lambda_fem;
    std::vector<double> lambda_prime_fem;
    /// lambda(t) c(t) relative drift from t0 (T = g family).
    double scaling_drift = 0.0;
    /// "increasing", "non-decreasing" or "not-monotone".
    std::string verdict;
};

struct FlowTrace
{
    HomogeneousFlow flow;
    FlowFamily family;
    std::vector<double> times;
    std::vector<double> c;
    std::vector<double> R_min;
    std::vector<double> R_max;
    std::vector<FlowSeries> series;
    /// T' >= -4 Ric(T, .) on the whole grid.
    bool monotonicity_hypothesis = false;
    /// The hypothesis holds with equality (Ricci-flat case).
    bool hypothesis_equality = false;
    /// Blow-up fit constant C = min_t lambda(t) (delta - t) for the first series.
    double blowup_constant = std::numeric_limits<double>::quiet_NaN();
};

/// `levels` are indices into analytic_levels (0 is the constant mode).
FlowTrace eigen_along_flow(const HomogeneousFlow& flow, const FlowFamily& family, const std::vector<int>& levels,
                           const std::vector<double>& times, const FlowOptions& options = {});

/// t, lambda, lambda_prime_pred, lambda_prime_exact, c_of_t, R_min, R_max
std::string flow_csv(const FlowTrace& trace, std::size_t series = 0);

struct BlowupReport
{
    int level = 0;
    double epsilon = 0.0;
    double delta = 0.0;
    std::vector<double> times;
    std::vector<double> lambda;
    std::vector<double> lambda_prime;
    /// lambda (R_min + (2 eps - 1) R_max)
    std::vector<double> slope_bound;
    bool bound_holds = false;
    /// C in lambda(t) >= C / (delta - t).
    double fit_constant = 0.0;
    bool fit_positive = false;
    /// The Hessian condition on eta in the blow-up argument is not checked.
    std::string hessian_hypothesis = "reported-only";
};

/// Blow-up probe on a round sphere. Throws InvalidInput for eps outside
/// (0, 1/2], a non-sphere flow or a time at or past the blow-up.
BlowupReport blowup_probe(const HomogeneousFlow& flow, const FlowFamily& family, int level,
                          const std::vector<double>& times, double epsilon);

/// Pinching constant eps with Ric = eps R g for a round sphere: 1/n.
double round_pinching(const HomogeneousFlow& flow);

} // namespace hadamard
