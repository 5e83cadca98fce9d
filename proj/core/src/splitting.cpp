#include "hadamard/splitting.hpp"

#include "hadamard/csv.hpp"
#include "hadamard/domain_variation.hpp"
#include "hadamard/error.hpp"
#include "hadamard/parallel.hpp"
#include "hadamard/random_fields.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace hadamard {

std::string_view to_string(Definiteness d)
{
    switch (d) {
    case Definiteness::Positive:
        return "positive";
    case Definiteness::Negative:
        return "negative";
    case Definiteness::IdenticallyZero:
        return "identically-zero";
    case Definiteness::Indefinite:
        return "indefinite";
    }
    return "?";
}

std::string_view to_string(SplitMode mode)
{
    return mode == SplitMode::Metric ? "metric" : "domain";
}

SplitMode split_mode_from_string(std::string_view name)
{
    if (name == "metric") {
        return SplitMode::Metric;
    }
    if (name == "domain") {
        return SplitMode::Domain;
    }
    throw InvalidInput("unknown splitting mode '" + std::string(name) + "' (metric | domain)");
}

PropertyPReport property_p_tensor(FamilyRule rule, const MetricField& g, int n, const std::vector<double>& psi_cells,
                                  const SymTensorField* fixed)
{
    if (n < 1) {
        throw InvalidInput("dimension must be positive");
    }
    if (rule == FamilyRule::ConformalWeight && static_cast<Index>(psi_cells.size()) != g.size()) {
        throw InvalidInput("conformal family needs psi on every cell");
    }
    if (rule == FamilyRule::Fixed && (!fixed || fixed->size() != g.size())) {
        throw InvalidInput("fixed family needs T on every cell");
    }
    std::vector<SmallMat> G(static_cast<std::size_t>(g.size()));
    for (Index c = 0; c < g.size(); ++c) {
        switch (rule) {
        case FamilyRule::Fixed:
            G[static_cast<std::size_t>(c)] = (n - 4.0) * (*fixed)[c];
            break;
        case FamilyRule::MetricItself:
            // (n - 4) g + 2 g
            G[static_cast<std::size_t>(c)] = (n - 2.0) * g[c];
            break;
        case FamilyRule::ConformalWeight: {
            const double psi = psi_cells[static_cast<std::size_t>(c)];
            if (!(psi > 0.0)) {
                throw InvalidInput("psi must be strictly positive");
            }
            G[static_cast<std::size_t>(c)] = (n - 2.0) * psi * g[c];
            break;
        }
        }
    }
    PropertyPReport r;
    r.G = SymTensorField(TensorRole::G, std::move(G));
    r.min_eigenvalue = std::numeric_limits<double>::infinity();
    r.max_eigenvalue = -std::numeric_limits<double>::infinity();
    bool pos = false, neg = false;
    for (Index c = 0; c < g.size(); ++c) {
        const SmallVec ev = pencil_eigenvalues(r.G[c], g[c]);
        const double tol = 1e-12 * std::max(1.0, ev.cwiseAbs().maxCoeff());
        const bool cpos = ev.maxCoeff() > tol;
        const bool cneg = ev.minCoeff() < -tol;
        if (cpos && cneg && r.witness_cell < 0) {
            r.witness_cell = c;
        }
        // a zero direction on a cell also breaks definiteness
        if ((cpos || cneg) && (ev.cwiseAbs().minCoeff() <= tol) && r.witness_cell < 0) {
            r.witness_cell = c;
        }
        pos = pos || cpos;
        neg = neg || cneg;
        r.min_eigenvalue = std::min(r.min_eigenvalue, ev.minCoeff());
        r.max_eigenvalue = std::max(r.max_eigenvalue, ev.maxCoeff());
    }
    if (r.witness_cell >= 0 || (pos && neg)) {
        r.classification = Definiteness::Indefinite;
        if (r.witness_cell < 0) {
            r.witness_cell = 0;
        }
    } else if (pos) {
        r.classification = Definiteness::Positive;
    } else if (neg) {
        r.classification = Definiteness::Negative;
    } else {
        r.classification = Definiteness::IdenticallyZero;
    }
    return r;
}

PropertyPReport property_p_tensor(const TensorFamily& family, const Mesh& mesh, const MetricField& g, int n)
{
    std::vector<double> psi;
    if (family.rule == FamilyRule::ConformalWeight) {
        psi = cell_psi(family, mesh);
    }
    return property_p_tensor(family.rule, g, n, psi, family.rule == FamilyRule::Fixed ? &family.fixed : nullptr);
}

double min_slope_gap(const std::vector<double>& slopes)
{
    if (slopes.size() < 2) {
        return 0.0;
    }
    std::vector<double> s = slopes;
    std::sort(s.begin(), s.end());
    double gap = std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i < s.size(); ++i) {
        gap = std::min(gap, s[i] - s[i - 1]);
    }
    return gap;
}

namespace {

// Gaps at the level of round-off in S are reported as exact ties.
double clamp_noise(double gap, double lambda)
{
    return gap <= 1e-10 * (1.0 + std::abs(lambda)) ? 0.0 : gap;
}

} // namespace

double single_trial_gap(const Problem& problem, const Spectrum& spectrum, const Cluster& cluster,
                        const VariationSpec& var)
{
    const BranchSlopes b = hadamard_slopes(problem, spectrum, cluster, var);
    return clamp_noise(min_slope_gap(b.slopes), b.lambda);
}

SplittingStats splitting_experiment(const Problem& problem, const TensorFamily& family, const Spectrum& spectrum,
                                    const Cluster& cluster, const SplittingOptions& options)
{
    if (cluster.size() < 2) {
        throw InvalidInput("splitting experiments need a cluster of multiplicity at least 2");
    }
    if (options.trials < 0) {
        throw InvalidInput("trial count must be non-negative");
    }
    const Mesh& mesh = *problem.mesh;
    if (options.mode == SplitMode::Domain && (!mesh.has_global_chart() || mesh.num_boundary_faces() == 0)) {
        throw InvalidInput("domain-mode splitting needs a chart mesh with boundary");
    }
    SplittingStats st;
    st.mode = options.mode;
    st.seed = options.seed;
    st.trials = options.trials;
    st.multiplicity = static_cast<Index>(cluster.size());
    double lo = std::numeric_limits<double>::infinity(), hi = -lo, sum = 0.0;
    for (Index i : cluster) {
        lo = std::min(lo, spectrum.values(i));
        hi = std::max(hi, spectrum.values(i));
        sum += spectrum.values(i);
    }
    st.lambda = sum / static_cast<double>(cluster.size());
    st.cluster_spread = (hi - lo) / (1.0 + std::abs(st.lambda));
    st.near_cluster = st.cluster_spread > options.near_cluster_tol;
    st.threshold = options.threshold * (1.0 + std::abs(st.lambda));
    if (options.mode == SplitMode::Metric) {
        const auto report = property_p_tensor(family, mesh, problem.metric, mesh.dim());
        st.family_class = std::string(to_string(report.classification));
        st.outside_hypotheses = !report.satisfies_property();
    }

    st.gaps.assign(static_cast<std::size_t>(options.trials), 0.0);
    st.distinct.assign(static_cast<std::size_t>(options.trials), 0);
    std::vector<std::vector<double>> slopes(static_cast<std::size_t>(options.trials));
    parallel_for(options.trials, [&](Index trial) {
        auto rng = substream(options.seed, static_cast<std::uint64_t>(trial));
        BranchSlopes b;
        if (options.mode == SplitMode::Metric) {
            VariationSpec var;
            var.family = family;
            var.H = random_metric_variation(mesh, problem.metric, rng, options.max_mode, options.amplitude);
            b = hadamard_slopes(problem, spectrum, cluster, var);
        } else {
            const VectorField V = random_vector_field(mesh, rng, options.max_mode, options.amplitude);
            b = boundary_slopes(problem, spectrum, cluster, V);
        }
        slopes[static_cast<std::size_t>(trial)] = b.slopes;
    });
    int count = 0;
    for (int t = 0; t < options.trials; ++t) {
        const auto& s = slopes[static_cast<std::size_t>(t)];
        const double gap = clamp_noise(min_slope_gap(s), st.lambda);
        st.gaps[static_cast<std::size_t>(t)] = gap;
        const bool split = gap > st.threshold;
        st.split.push_back(split);
        count += split ? 1 : 0;
        int distinct = 1;
        for (std::size_t i = 1; i < s.size(); ++i) {
            distinct += (s[i] - s[i - 1] > st.threshold) ? 1 : 0;
        }
        st.distinct[static_cast<std::size_t>(t)] = distinct;
    }
    if (options.trials > 0) {
        st.fraction = static_cast<double>(count) / options.trials;
    }
    return st;
}

std::string splitting_csv(const SplittingStats& stats)
{
    csv::Table table({"trial", "gap", "split_bool"});
    for (std::size_t t = 0; t < stats.gaps.size(); ++t) {
        table.add_row({std::to_string(t), csv::format_number(stats.gaps[t]), stats.split[t] ? "true" : "false"});
    }
    return table.str();
}

} // namespace hadamard
