#pragma once

#include "hadamard/assembly.hpp"
#include "hadamard/eigensolver.hpp"
#include "hadamard/fields.hpp"

#include <Eigen/Core>

#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace hadamard {

/// How T depends on the metric: T_g and its derivative dF_g(H).
enum class FamilyRule { Fixed, MetricItself, ConformalWeight };

std::string_view to_string(FamilyRule rule);
FamilyRule family_rule_from_string(std::string_view name);

struct TensorFamily
{
    FamilyRule rule = FamilyRule::MetricItself;
    /// Frozen tensor for Fixed.
    SymTensorField fixed;
    /// Per-vertex weight for ConformalWeight (strictly positive).
    ScalarField psi;

    static TensorFamily fixed_tensor(SymTensorField T);
    static TensorFamily metric_itself();
    static TensorFamily conformal(ScalarField psi);
};

/// psi averaged on each cell (ConformalWeight only).
std::vector<double> cell_psi(const TensorFamily& family, const Mesh& mesh);

/// T_g for the family.
SymTensorField family_tensor(const TensorFamily& family, const Mesh& mesh, const MetricField& g);
/// T' = dF_g(H).
SymTensorField family_derivative(const TensorFamily& family, const Mesh& mesh, const MetricField& g,
                                 const SymTensorField& H);

Problem make_problem(std::shared_ptr<const Mesh> mesh, MetricField g, const TensorFamily& family, ScalarField eta,
                     BoundaryCondition bc);

struct VariationSpec
{
    SymTensorField H;
    ScalarField eta_dot;
    TensorFamily family;
    /// Overrides dF_g(H) when present (pullback variations, Ricci flow).
    std::optional<SymTensorField> tensor_rate;
};

/// Response tensor -(T g^-1 H + H g^-1 T) + T' per cell.
SymTensorField script_h(const MetricField& g, const SymTensorField& T, const SymTensorField& H,
                        const SymTensorField& Tprime);

struct BranchSlopes
{
    double lambda = 0.0;
    /// m x m first-order perturbation matrix in the cluster basis.
    Eigen::MatrixXd matrix;
    /// Eigenvalues of `matrix`, ascending.
    std::vector<double> slopes;
};

/// Eigenvalue derivatives of a cluster under a metric/tensor/weight variation.
BranchSlopes hadamard_slopes(const Problem& problem, const Spectrum& spectrum, const Cluster& cluster,
                             const VariationSpec& var);

/// Symmetric matrix -> BranchSlopes (ascending eigenvalues).
BranchSlopes slopes_from_matrix(double lambda, Eigen::MatrixXd S);

/// A one-parameter family of problems on a fixed mesh, t = 0 being the base.
using ProblemFamily = std::function<Problem(double t)>;

struct FdOptions
{
    std::vector<double> steps{1e-2, 5e-3, 2.5e-3};
    double min_step = 1e-5;
    /// Multiplet tolerance used to interpret the base cluster.
    double rel_tol = 1e-6;
    EigenOptions eigen;
};

struct FdSlopes
{
    /// Extrapolated slopes, ascending.
    std::vector<double> slopes;
    /// Central differences per step (rows) and branch (columns), branches
    /// in the order of `slopes`.
    Eigen::MatrixXd differences;
    std::vector<double> steps;
    /// |extrapolated - next-best extrapolation| per branch.
    std::vector<double> error_estimate;
    /// log2 of successive difference ratios, median over branches.
    double observed_order = 0.0;
};

/// Central differences at +-t for each step, branches matched by B-overlap
/// with the base cluster, Richardson extrapolation in t^2.
FdSlopes fd_branch_slopes(const ProblemFamily& family, const Spectrum& base, const Cluster& cluster,
                          const FdOptions& options = {});

/// g + tH, T rebuilt by the family rule (or T + tT'), eta + t eta_dot.
ProblemFamily metric_variation_family(const Problem& base, const VariationSpec& var);

FdSlopes fd_slopes(const Problem& problem, const VariationSpec& var, const Spectrum& spectrum,
                   const Cluster& cluster, const FdOptions& options = {});

struct SlopeReport
{
    double lambda = 0.0;
    std::vector<double> predicted;
    std::vector<double> oracle;
    std::vector<double> rel_err;
    std::vector<double> steps;
    std::vector<double> fd_error;
    double fd_order = 0.0;

    double max_rel_err() const;
};

SlopeReport compare_slopes(const BranchSlopes& predicted, const FdSlopes& oracle);

/// branch, predicted, oracle, rel_err, fd_order
std::string slope_csv(const SlopeReport& report);

} // namespace hadamard
