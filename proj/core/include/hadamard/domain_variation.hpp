#pragma once

#include "hadamard/assembly.hpp"
#include "hadamard/eigensolver.hpp"
#include "hadamard/fields.hpp"
#include "hadamard/variation.hpp"

#include <Eigen/Core>

#include <string>
#include <vector>

namespace hadamard {

/// Geometry of one boundary face under the problem's metric and weight.
struct FaceFrame
{
    Index face = 0;
    int component = 0;
    Index cell = 0;
    /// Outward conormal covector, Euclidean-unit in the chart.
    SmallVec conormal;
    /// Outward unit normal vector g^-1 n / |n|_g.
    SmallVec normal;
    /// |n|_g = sqrt(n^T g^-1 n); <V, nu> = V . n / norm_scale.
    double norm_scale = 1.0;
    /// Metric measure of the face (1 for interval endpoints).
    double measure = 0.0;
    /// Weighted measure: integral of e^{-eta} d sigma over the face.
    double weighted_measure = 0.0;
    SmallVec midpoint;
    /// Arclength of the midpoint along its boundary component.
    double s = 0.0;
};

std::vector<FaceFrame> boundary_frames(const Problem& problem);

/// Per-face constant boundary data (normal speed, |d phi/d nu|, ...).
struct BoundaryField
{
    std::vector<double> values;
    std::vector<int> components;
};

/// Weighted boundary integral of a per-face field.
double boundary_integral(const Problem& problem, const BoundaryField& v);
double boundary_abs_integral(const Problem& problem, const BoundaryField& v);

/// Face averages of <V, nu>.
BoundaryField normal_speed(const Problem& problem, const VectorField& V);

/// Pulled-back metric g_t = J^T g(f_t) J and eta_t = eta o f_t with f_t = id + tV.
struct Pullback
{
    MetricField metric;
    ScalarField eta;
};

Pullback pullback_metric(const Problem& problem, const VectorField& V, double t);

/// Problem on the fixed mesh with everything pulled back by f_t = id + tV.
/// The tensor follows the family rule; Fixed tensors are transported as
/// J^T T J.
ProblemFamily pullback_family(const Problem& base, const TensorFamily& family, const VectorField& V);

/// Volume form of a domain deformation: H = L_V g, eta rate <grad eta, V>,
/// T' = d/dt of the pulled-back tensor.
VariationSpec domain_variation_spec(const Problem& base, const TensorFamily& family, const VectorField& V);

/// Boundary-integral branch slopes for Dirichlet or T-Neumann clusters.
BranchSlopes boundary_slopes(const Problem& problem, const Spectrum& spectrum, const Cluster& cluster,
                             const VectorField& V);
BranchSlopes boundary_slopes(const Problem& problem, const Spectrum& spectrum, const Cluster& cluster,
                             const BoundaryField& v);

/// FD oracle over the pullback family.
FdSlopes fd_domain_slopes(const Problem& base, const TensorFamily& family, const VectorField& V,
                          const Spectrum& spectrum, const Cluster& cluster, const FdOptions& options = {});

/// Subtracts the weighted mean so the result integrates to zero.
BoundaryField make_volume_preserving(const Problem& problem, BoundaryField profile);
/// v = |Sigma_b| on Sigma_a and -|Sigma_a| on Sigma_b (weighted measures).
BoundaryField make_two_component(const Problem& problem, int a = 0, int b = 1);

struct FirstVariationSample
{
    std::string name;
    double slope = 0.0;
};

struct ExtremalReport
{
    Index eigen_index = 0;
    double lambda = 0.0;
    BoundaryField values; ///< |d phi/d nu| sqrt(T(nu, nu)) per face
    std::vector<double> s;
    double mean = 0.0;
    double stddev = 0.0;
    double deviation_ratio = 0.0;
    std::vector<double> component_means;
    std::vector<FirstVariationSample> first_variations;
};

/// Constancy diagnostic of the weighted normal derivative of eigenfunction
/// `index` (Dirichlet), plus first variations along a sampled basis of
/// zero-mean normal speeds.
ExtremalReport extremal_check(const Problem& problem, const Spectrum& spectrum, Index index, int modes = 3);

/// face_id, component, s, value
std::string boundary_csv(const ExtremalReport& report);

} // namespace hadamard
