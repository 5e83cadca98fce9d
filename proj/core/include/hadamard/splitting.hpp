#pragma once

#include "hadamard/assembly.hpp"
#include "hadamard/eigensolver.hpp"
#include "hadamard/variation.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace hadamard {

enum class Definiteness { Positive, Negative, IdenticallyZero, Indefinite };

std::string_view to_string(Definiteness d);

struct PropertyPReport
{
    SymTensorField G;
    Definiteness classification = Definiteness::IdenticallyZero;
    /// First cell with mixed signs (Indefinite only), else -1.
    Index witness_cell = -1;
    double min_eigenvalue = 0.0;
    double max_eigenvalue = 0.0;

    /// True when G is sign-definite (the splitting theorems apply).
    bool satisfies_property() const
    {
        return classification == Definiteness::Positive || classification == Definiteness::Negative;
    }
};

/// G = (n - 4) T + 2 dF_g(g), classified through the pencil (G, g).
/// `psi_cells` holds psi per cell for ConformalWeight; `fixed` the frozen T.
PropertyPReport property_p_tensor(FamilyRule rule, const MetricField& g, int n,
                                  const std::vector<double>& psi_cells = {}, const SymTensorField* fixed = nullptr);
PropertyPReport property_p_tensor(const TensorFamily& family, const Mesh& mesh, const MetricField& g, int n);

enum class SplitMode { Metric, Domain };

std::string_view to_string(SplitMode mode);
SplitMode split_mode_from_string(std::string_view name);

struct SplittingOptions
{
    SplitMode mode = SplitMode::Metric;
    int trials = 20;
    std::uint64_t seed = 1;
    int max_mode = 3;
    double amplitude = 0.5;
    /// Splitting threshold factor: gap > threshold * (1 + lambda).
    double threshold = 1e-6;
    /// Cluster spread above this (relative) marks a near-cluster.
    double near_cluster_tol = 1e-8;
};

struct SplittingStats
{
    SplitMode mode = SplitMode::Metric;
    std::uint64_t seed = 0;
    int trials = 0;
    double lambda = 0.0;
    Index multiplicity = 0;
    std::vector<double> gaps;
    std::vector<bool> split;
    /// Number of distinct slopes per trial (gaps above threshold plus one).
    std::vector<int> distinct;
    /// Absent when trials == 0.
    std::optional<double> fraction;
    double threshold = 0.0;
    bool near_cluster = false;
    double cluster_spread = 0.0;
    /// Property P fails for the family (metric mode).
    bool outside_hypotheses = false;
    std::string family_class;
};

/// Smallest pairwise gap of sorted slopes (0 for a single branch).
double min_slope_gap(const std::vector<double>& slopes);

SplittingStats splitting_experiment(const Problem& problem, const TensorFamily& family, const Spectrum& spectrum,
                                    const Cluster& cluster, const SplittingOptions& options);

/// One deterministic trial with a caller-supplied variation (for example the
/// non-generic H = g). Gaps below 1e-10 (1 + lambda) are reported as 0 here
/// and in splitting_experiment.
double single_trial_gap(const Problem& problem, const Spectrum& spectrum, const Cluster& cluster,
                        const VariationSpec& var);

/// trial, gap, split_bool
std::string splitting_csv(const SplittingStats& stats);

} // namespace hadamard
