#include "hadamard/variation.hpp"

#include "hadamard/csv.hpp"
#include "hadamard/error.hpp"
#include "hadamard/parallel.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace hadamard {

std::string_view to_string(FamilyRule rule)
{
    switch (rule) {
    case FamilyRule::Fixed:
        return "fixed";
    case FamilyRule::MetricItself:
        return "metric";
    case FamilyRule::ConformalWeight:
        return "conformal";
    }
    return "?";
}

FamilyRule family_rule_from_string(std::string_view name)
{
    if (name == "fixed") {
        return FamilyRule::Fixed;
    }
    if (name == "metric" || name == "metric-itself") {
        return FamilyRule::MetricItself;
    }
    if (name == "conformal" || name == "conformal-weight") {
        return FamilyRule::ConformalWeight;
    }
    throw InvalidInput("unknown tensor family '" + std::string(name) + "' (fixed | metric | conformal)");
}

TensorFamily TensorFamily::fixed_tensor(SymTensorField T)
{
    TensorFamily f;
    f.rule = FamilyRule::Fixed;
    T.role = TensorRole::T;
    f.fixed = std::move(T);
    return f;
}

TensorFamily TensorFamily::metric_itself()
{
    return TensorFamily{};
}

TensorFamily TensorFamily::conformal(ScalarField psi)
{
    if (psi.values.size() == 0 || !(psi.values.minCoeff() > 0.0)) {
        throw InvalidInput("conformal weight psi must be strictly positive");
    }
    TensorFamily f;
    f.rule = FamilyRule::ConformalWeight;
    psi.role = ScalarRole::Psi;
    f.psi = std::move(psi);
    return f;
}

std::vector<double> cell_psi(const TensorFamily& family, const Mesh& mesh)
{
    if (family.rule != FamilyRule::ConformalWeight) {
        return std::vector<double>(static_cast<std::size_t>(mesh.num_cells()), 1.0);
    }
    if (family.psi.values.size() != mesh.num_vertices()) {
        throw InvalidInput("psi does not match the mesh vertex count");
    }
    std::vector<double> out(static_cast<std::size_t>(mesh.num_cells()));
    for (Index c = 0; c < mesh.num_cells(); ++c) {
        out[static_cast<std::size_t>(c)] = family.psi.cell_mean(mesh, c);
    }
    return out;
}

SymTensorField family_tensor(const TensorFamily& family, const Mesh& mesh, const MetricField& g)
{
    switch (family.rule) {
    case FamilyRule::Fixed:
        if (family.fixed.size() != g.size()) {
            throw InvalidInput("fixed tensor does not match the mesh cell count");
        }
        return family.fixed;
    case FamilyRule::MetricItself: {
        std::vector<SmallMat> T(static_cast<std::size_t>(g.size()));
        for (Index c = 0; c < g.size(); ++c) {
            T[static_cast<std::size_t>(c)] = g[c];
        }
        return SymTensorField(TensorRole::T, std::move(T));
    }
    case FamilyRule::ConformalWeight: {
        const auto psi = cell_psi(family, mesh);
        std::vector<SmallMat> T(static_cast<std::size_t>(g.size()));
        for (Index c = 0; c < g.size(); ++c) {
            T[static_cast<std::size_t>(c)] = psi[static_cast<std::size_t>(c)] * g[c];
        }
        return SymTensorField(TensorRole::T, std::move(T));
    }
    }
    throw InvalidInput("unknown tensor family");
}

SymTensorField family_derivative(const TensorFamily& family, const Mesh& mesh, const MetricField& g,
                                 const SymTensorField& H)
{
    if (H.size() != g.size()) {
        throw InvalidInput("metric variation does not match the mesh cell count");
    }
    std::vector<SmallMat> out(static_cast<std::size_t>(g.size()));
    switch (family.rule) {
    case FamilyRule::Fixed:
        for (Index c = 0; c < g.size(); ++c) {
            out[static_cast<std::size_t>(c)] = SmallMat::Zero(g[c].rows(), g[c].cols());
        }
        break;
    case FamilyRule::MetricItself:
        out = H.values;
        break;
    case FamilyRule::ConformalWeight: {
        const auto psi = cell_psi(family, mesh);
        for (Index c = 0; c < g.size(); ++c) {
            out[static_cast<std::size_t>(c)] = psi[static_cast<std::size_t>(c)] * H[c];
        }
        break;
    }
    }
    return SymTensorField(TensorRole::T, std::move(out));
}

Problem make_problem(std::shared_ptr<const Mesh> mesh, MetricField g, const TensorFamily& family, ScalarField eta,
                     BoundaryCondition bc)
{
    Problem p;
    p.tensor = family_tensor(family, *mesh, g);
    p.metric = std::move(g);
    p.eta = std::move(eta);
    p.bc = bc;
    p.mesh = std::move(mesh);
    return p;
}

SymTensorField script_h(const MetricField& g, const SymTensorField& T, const SymTensorField& H,
                        const SymTensorField& Tprime)
{
    if (T.size() != g.size() || H.size() != g.size() || Tprime.size() != g.size()) {
        throw InvalidInput("script_h: fields live on different meshes");
    }
    std::vector<SmallMat> out(static_cast<std::size_t>(g.size()));
    for (Index c = 0; c < g.size(); ++c) {
        if (T[c].rows() != g[c].rows() || H[c].rows() != g[c].rows() || Tprime[c].rows() != g[c].rows()) {
            throw InvalidInput("script_h: tensor shape mismatch on cell " + std::to_string(c));
        }
        const SmallMat& gi = g.inverse(c);
        const SmallMat THt = T[c] * gi * H[c];
        out[static_cast<std::size_t>(c)] = -(THt + THt.transpose()) + Tprime[c];
    }
    return SymTensorField(TensorRole::ScriptH, std::move(out));
}

BranchSlopes slopes_from_matrix(double lambda, Eigen::MatrixXd S)
{
    S = 0.5 * (S + S.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S, Eigen::EigenvaluesOnly);
    BranchSlopes out;
    out.lambda = lambda;
    out.matrix = std::move(S);
    out.slopes.assign(es.eigenvalues().data(), es.eigenvalues().data() + es.eigenvalues().size());
    return out;
}

namespace {

void check_cluster(const Spectrum& spectrum, const Cluster& cluster)
{
    if (cluster.empty()) {
        throw InvalidInput("empty eigenvalue cluster");
    }
    for (Index i : cluster) {
        if (i < 0 || i >= spectrum.size()) {
            throw InvalidInput("cluster index " + std::to_string(i) + " outside the spectrum");
        }
    }
    if (!(spectrum.orthonormality_residual <= 1e-8)) {
        throw InvalidInput("cluster eigenfunctions are not mass-orthonormal");
    }
}

double cluster_mean(const Spectrum& spectrum, const Cluster& cluster)
{
    double sum = 0.0;
    for (Index i : cluster) {
        sum += spectrum.values(i);
    }
    return sum / static_cast<double>(cluster.size());
}

} // namespace

BranchSlopes hadamard_slopes(const Problem& problem, const Spectrum& spectrum, const Cluster& cluster,
                             const VariationSpec& var)
{
    check_cluster(spectrum, cluster);
    if (spectrum.bc != problem.bc) {
        throw InvalidInput("spectrum and problem use different boundary conditions");
    }
    const Mesh& mesh = *problem.mesh;
    const MetricField& g = problem.metric;
    if (var.H.size() != mesh.num_cells()) {
        throw InvalidInput("metric variation H does not match the mesh cell count");
    }
    const bool has_eta_dot = var.eta_dot.values.size() > 0;
    if (has_eta_dot && var.eta_dot.values.size() != mesh.num_vertices()) {
        throw InvalidInput("eta rate does not match the mesh vertex count");
    }
    const SymTensorField Tprime = var.tensor_rate ? *var.tensor_rate : family_derivative(var.family, mesh, g, var.H);
    const SymTensorField sh = script_h(g, problem.tensor, var.H, Tprime);
    const auto h = metric_trace(g, var.H);
    const auto weights = cell_weights(mesh, problem.eta);
    const double lambda = cluster_mean(spectrum, cluster);
    const Index m = static_cast<Index>(cluster.size());
    const int d = mesh.dim();

    std::vector<Eigen::MatrixXd> parts(static_cast<std::size_t>(mesh.num_cells()));
    parallel_for(mesh.num_cells(), [&](Index c) {
        const CellChart& chart = mesh.chart(c);
        const double vol = g.cell_volume(mesh, c) * weights[static_cast<std::size_t>(c)];
        Eigen::MatrixXd P(m, d + 1);
        for (Index i = 0; i < m; ++i) {
            for (int a = 0; a <= d; ++a) {
                P(i, a) = spectrum.modes(mesh.cells()(c, a), cluster[static_cast<std::size_t>(i)]);
            }
        }
        const Eigen::MatrixXd D = chart.gradients * P.transpose(); // d x m
        const SmallMat& gi = g.inverse(c);
        const Eigen::MatrixXd AT = gi * problem.tensor[c] * gi;
        const Eigen::MatrixXd AH = gi * sh[c] * gi;
        const Eigen::MatrixXd KT = vol * D.transpose() * AT * D;
        const Eigen::MatrixXd KH = vol * D.transpose() * AH * D;
        const Eigen::MatrixXd M = P * Eigen::MatrixXd(local_mass(d, vol)) * P.transpose();
        Eigen::MatrixXd S = 0.5 * h[static_cast<std::size_t>(c)] * (KT - lambda * M) + KH;
        if (has_eta_dot) {
            Eigen::VectorXd local(d + 1);
            for (int a = 0; a <= d; ++a) {
                local(a) = var.eta_dot.values(mesh.cells()(c, a));
            }
            const Eigen::VectorXd e = chart.gradients * local;
            const Eigen::VectorXd q = D.transpose() * (AT * e);
            const Eigen::VectorXd mean = P.rowwise().mean();
            S += 0.5 * vol * (mean * q.transpose() + q * mean.transpose());
        }
        parts[static_cast<std::size_t>(c)] = std::move(S);
    });
    Eigen::MatrixXd S = Eigen::MatrixXd::Zero(m, m);
    for (const auto& p : parts) {
        S += p;
    }
    return slopes_from_matrix(lambda, std::move(S));
}

namespace {

// Branches of a perturbed spectrum expressed in the base cluster basis.
struct Side
{
    std::vector<double> values;
    Eigen::MatrixXd coords; // m x m, column a = normalised coordinates of branch a
};

Side select_branches(const Spectrum& s, const Eigen::MatrixXd& BPhi, Index m)
{
    const Eigen::MatrixXd P = BPhi.transpose() * s.free_modes; // m x k
    const Index k = P.cols();
    std::vector<Index> order(static_cast<std::size_t>(k));
    std::iota(order.begin(), order.end(), Index{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](Index a, Index b) { return P.col(a).squaredNorm() > P.col(b).squaredNorm(); });
    const double weakest = P.col(order[static_cast<std::size_t>(m - 1)]).squaredNorm();
    const double intruder = m < k ? P.col(order[static_cast<std::size_t>(m)]).squaredNorm() : 0.0;
    if (weakest < 0.5 || intruder > 0.5) {
        throw NumericalFailure("branch selection ambiguous: cluster weight " + csv::format_number(weakest)
                               + ", strongest outsider " + csv::format_number(intruder));
    }
    std::vector<Index> chosen(order.begin(), order.begin() + m);
    std::sort(chosen.begin(), chosen.end());
    Side side;
    side.coords.resize(m, m);
    for (Index a = 0; a < m; ++a) {
        const Index j = chosen[static_cast<std::size_t>(a)];
        side.values.push_back(s.values(j));
        side.coords.col(a) = P.col(j).normalized();
    }
    return side;
}

// Permutation pi maximising sum |<x_a, y_pi(a)>|^2. A weak match is only
// acceptable when every competing y branch has (numerically) the same
// eigenvalue, otherwise the pairing is ambiguous.
std::vector<Index> match(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y, const std::vector<double>& yv,
                         double scale)
{
    const Index m = X.cols();
    const Eigen::MatrixXd O = (X.transpose() * Y).cwiseAbs2();
    std::vector<Index> perm(static_cast<std::size_t>(m));
    std::iota(perm.begin(), perm.end(), Index{0});
    std::vector<Index> best = perm;
    if (m <= 8) {
        double best_score = -1.0;
        do {
            double score = 0.0;
            for (Index a = 0; a < m; ++a) {
                score += O(a, perm[static_cast<std::size_t>(a)]);
            }
            if (score > best_score + 1e-14) {
                best_score = score;
                best = perm;
            }
        } while (std::next_permutation(perm.begin(), perm.end()));
    } else {
        std::vector<bool> used(static_cast<std::size_t>(m), false);
        for (Index a = 0; a < m; ++a) {
            Index arg = -1;
            for (Index b = 0; b < m; ++b) {
                if (!used[static_cast<std::size_t>(b)] && (arg < 0 || O(a, b) > O(a, arg))) {
                    arg = b;
                }
            }
            used[static_cast<std::size_t>(arg)] = true;
            best[static_cast<std::size_t>(a)] = arg;
        }
    }
    for (Index a = 0; a < m; ++a) {
        const Index pa = best[static_cast<std::size_t>(a)];
        if (O(a, pa) >= 0.5) {
            continue;
        }
        for (Index b = 0; b < m; ++b) {
            if (b != pa && O(a, b) > 0.1
                && std::abs(yv[static_cast<std::size_t>(pa)] - yv[static_cast<std::size_t>(b)]) > scale) {
                throw NumericalFailure("branch matching ambiguous (overlap "
                                       + csv::format_number(O(a, best[static_cast<std::size_t>(a)])) + ")");
            }
        }
    }
    return best;
}

double neville_at_zero(const std::vector<double>& x, const std::vector<double>& y)
{
    std::vector<double> p = y;
    const std::size_t n = x.size();
    for (std::size_t level = 1; level < n; ++level) {
        for (std::size_t i = 0; i + level < n; ++i) {
            p[i] = (x[i + level] * p[i] - x[i] * p[i + 1]) / (x[i + level] - x[i]);
        }
    }
    return p[0];
}

struct Attempt
{
    Eigen::MatrixXd differences; // steps x m
    Eigen::MatrixXd reference;   // coordinates of the step-0 + branches
};

Attempt difference_quotients(const ProblemFamily& family, const Eigen::MatrixXd& BPhi, const Cluster& cluster,
                             const std::vector<double>& steps, const FdOptions& options, double lambda)
{
    const Index m = static_cast<Index>(cluster.size());
    const std::size_t ns = steps.size();
    std::vector<Spectrum> spectra(2 * ns);
    const Index want = cluster.back() + 1 + m + 2;
    parallel_for(static_cast<Index>(2 * ns), [&](Index j) {
        const double t = steps[static_cast<std::size_t>(j / 2)] * (j % 2 == 0 ? 1.0 : -1.0);
        const OperatorPair op = assemble(family(t));
        spectra[static_cast<std::size_t>(j)] = solve_eigen(op, std::min(want, op.size()), options.eigen);
    });
    const double scale = 1e-9 * (1.0 + std::abs(lambda));
    Attempt out;
    out.differences.resize(static_cast<Index>(ns), m);
    for (std::size_t s = 0; s < ns; ++s) {
        const Side plus = select_branches(spectra[2 * s], BPhi, m);
        const Side minus = select_branches(spectra[2 * s + 1], BPhi, m);
        const auto pm = match(plus.coords, minus.coords, minus.values, scale);
        std::vector<Index> label(static_cast<std::size_t>(m));
        if (s == 0) {
            out.reference = plus.coords;
            std::iota(label.begin(), label.end(), Index{0});
        } else {
            // label[a] = branch of this step that continues reference branch a
            label = match(out.reference, plus.coords, plus.values, scale);
        }
        for (Index a = 0; a < m; ++a) {
            const Index p = label[static_cast<std::size_t>(a)];
            const Index q = pm[static_cast<std::size_t>(p)];
            out.differences(static_cast<Index>(s), a) =
                (plus.values[static_cast<std::size_t>(p)] - minus.values[static_cast<std::size_t>(q)])
                / (2.0 * steps[s]);
        }
    }
    return out;
}

} // namespace

FdSlopes fd_branch_slopes(const ProblemFamily& family, const Spectrum& base, const Cluster& cluster,
                          const FdOptions& options)
{
    check_cluster(base, cluster);
    if (options.steps.empty()) {
        throw InvalidInput("finite-difference step schedule is empty");
    }
    for (std::size_t i = 0; i < options.steps.size(); ++i) {
        if (!(options.steps[i] > 0.0)) {
            throw InvalidInput("finite-difference steps must be positive");
        }
        for (std::size_t j = 0; j < i; ++j) {
            if (options.steps[j] == options.steps[i]) {
                throw InvalidInput("finite-difference steps must be distinct");
            }
        }
    }
    const Problem p0 = family(0.0);
    const OperatorPair op0 = assemble(p0);
    if (op0.size() != base.free_modes.rows()) {
        throw InvalidInput("base spectrum does not belong to the t = 0 member of the family");
    }
    const Index m = static_cast<Index>(cluster.size());
    Eigen::MatrixXd Phi(op0.size(), m);
    for (Index i = 0; i < m; ++i) {
        Phi.col(i) = base.free_modes.col(cluster[static_cast<std::size_t>(i)]);
    }
    const Eigen::MatrixXd BPhi = op0.B * Phi;
    const double lambda = cluster_mean(base, cluster);

    std::vector<double> steps = options.steps;
    Attempt attempt;
    for (;;) {
        try {
            attempt = difference_quotients(family, BPhi, cluster, steps, options, lambda);
            break;
        } catch (const NumericalFailure& e) {
            const double smallest = *std::min_element(steps.begin(), steps.end());
            if (smallest / 2.0 < options.min_step) {
                throw NumericalFailure(std::string(e.what()) + "; step floor "
                                       + csv::format_number(options.min_step) + " reached");
            }
            for (double& t : steps) {
                t /= 2.0;
            }
        }
    }

    const std::size_t ns = steps.size();
    std::vector<double> x(ns);
    for (std::size_t s = 0; s < ns; ++s) {
        x[s] = steps[s] * steps[s];
    }
    std::vector<double> extrap(static_cast<std::size_t>(m)), err(static_cast<std::size_t>(m));
    std::vector<double> orders;
    for (Index a = 0; a < m; ++a) {
        std::vector<double> y(ns);
        for (std::size_t s = 0; s < ns; ++s) {
            y[s] = attempt.differences(static_cast<Index>(s), a);
        }
        extrap[static_cast<std::size_t>(a)] = neville_at_zero(x, y);
        if (ns >= 2) {
            const std::vector<double> xs(x.begin() + 1, x.end()), ys(y.begin() + 1, y.end());
            err[static_cast<std::size_t>(a)] = std::abs(extrap[static_cast<std::size_t>(a)] - neville_at_zero(xs, ys));
        }
        if (ns >= 3) {
            const double d1 = std::abs(y[0] - y[1]);
            const double d2 = std::abs(y[1] - y[2]);
            const double floor = 1e-13 * (1.0 + std::abs(y[2]));
            if (d1 > floor && d2 > floor) {
                orders.push_back(std::log(d1 / d2) / std::log(steps[0] / steps[1]));
            }
        }
    }
    std::vector<Index> order(static_cast<std::size_t>(m));
    std::iota(order.begin(), order.end(), Index{0});
    std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) {
        return extrap[static_cast<std::size_t>(a)] < extrap[static_cast<std::size_t>(b)];
    });
    FdSlopes out;
    out.steps = steps;
    out.differences.resize(static_cast<Index>(ns), m);
    for (Index a = 0; a < m; ++a) {
        const Index src = order[static_cast<std::size_t>(a)];
        out.slopes.push_back(extrap[static_cast<std::size_t>(src)]);
        out.error_estimate.push_back(err[static_cast<std::size_t>(src)]);
        out.differences.col(a) = attempt.differences.col(src);
    }
    if (orders.empty()) {
        out.observed_order = std::numeric_limits<double>::quiet_NaN();
    } else {
        std::sort(orders.begin(), orders.end());
        out.observed_order = orders[orders.size() / 2];
    }
    return out;
}

ProblemFamily metric_variation_family(const Problem& base, const VariationSpec& var)
{
    const Mesh& mesh = *base.mesh;
    if (var.H.size() != mesh.num_cells()) {
        throw InvalidInput("metric variation H does not match the mesh cell count");
    }
    if (var.eta_dot.values.size() > 0 && var.eta_dot.values.size() != mesh.num_vertices()) {
        throw InvalidInput("eta rate does not match the mesh vertex count");
    }
    return [base, var](double t) {
        Problem p;
        p.mesh = base.mesh;
        p.bc = base.bc;
        p.metric = perturb_metric(base.metric, var.H, t);
        if (var.tensor_rate) {
            std::vector<SmallMat> T(static_cast<std::size_t>(base.tensor.size()));
            for (Index c = 0; c < base.tensor.size(); ++c) {
                T[static_cast<std::size_t>(c)] = base.tensor[c] + t * (*var.tensor_rate)[c];
            }
            p.tensor = SymTensorField(TensorRole::T, std::move(T));
        } else {
            p.tensor = family_tensor(var.family, *base.mesh, p.metric);
        }
        p.eta = base.eta;
        if (var.eta_dot.values.size() > 0) {
            p.eta.values += t * var.eta_dot.values;
            p.eta.generator = {};
        }
        return p;
    };
}

FdSlopes fd_slopes(const Problem& problem, const VariationSpec& var, const Spectrum& spectrum,
                   const Cluster& cluster, const FdOptions& options)
{
    return fd_branch_slopes(metric_variation_family(problem, var), spectrum, cluster, options);
}

double SlopeReport::max_rel_err() const
{
    double worst = 0.0;
    for (double e : rel_err) {
        worst = std::max(worst, e);
    }
    return worst;
}

SlopeReport compare_slopes(const BranchSlopes& predicted, const FdSlopes& oracle)
{
    if (predicted.slopes.size() != oracle.slopes.size()) {
        throw InvalidInput("predicted and oracle slope lists differ in length");
    }
    SlopeReport r;
    r.lambda = predicted.lambda;
    r.predicted = predicted.slopes;
    r.oracle = oracle.slopes;
    r.steps = oracle.steps;
    r.fd_error = oracle.error_estimate;
    r.fd_order = oracle.observed_order;
    const double floor = 1e-8 * (1.0 + std::abs(predicted.lambda));
    for (std::size_t i = 0; i < r.predicted.size(); ++i) {
        r.rel_err.push_back(std::abs(r.predicted[i] - r.oracle[i]) / std::max(std::abs(r.oracle[i]), floor));
    }
    return r;
}

std::string slope_csv(const SlopeReport& report)
{
    csv::Table table({"branch", "predicted", "oracle", "rel_err", "fd_order"});
    for (std::size_t i = 0; i < report.predicted.size(); ++i) {
        table.add_row({std::to_string(i), csv::format_number(report.predicted[i]), csv::format_number(report.oracle[i]),
                       csv::format_number(report.rel_err[i]), csv::format_number(report.fd_order)});
    }
    return table.str();
}

} // namespace hadamard
