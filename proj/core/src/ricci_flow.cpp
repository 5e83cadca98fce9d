#include "hadamard/ricci_flow.hpp"

#include "hadamard/csv.hpp"
#include "hadamard/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace hadamard {

std::string_view to_string(FlowManifold m)
{
    return m == FlowManifold::Sphere ? "sphere" : "flat-torus";
}

FlowManifold flow_manifold_from_string(std::string_view name)
{
    if (name == "sphere") {
        return FlowManifold::Sphere;
    }
    if (name == "flat-torus" || name == "torus") {
        return FlowManifold::FlatTorus;
    }
    throw InvalidInput("unknown flow manifold '" + std::string(name) + "' (sphere | flat-torus)");
}

HomogeneousFlow HomogeneousFlow::sphere(int n, double radius)
{
    if (n < 2) {
        throw InvalidInput("sphere flows need dimension >= 2");
    }
    if (!(radius > 0.0)) {
        throw InvalidInput("sphere radius must be positive");
    }
    HomogeneousFlow f;
    f.manifold = FlowManifold::Sphere;
    f.dim = n;
    f.radius = radius;
    return f;
}

HomogeneousFlow HomogeneousFlow::flat_torus(double lx, double ly)
{
    if (!(lx > 0.0) || !(ly > 0.0)) {
        throw InvalidInput("torus side lengths must be positive");
    }
    HomogeneousFlow f;
    f.manifold = FlowManifold::FlatTorus;
    f.dim = 2;
    f.lx = lx;
    f.ly = ly;
    return f;
}

double HomogeneousFlow::ric0() const
{
    return manifold == FlowManifold::Sphere ? (dim - 1.0) / (radius * radius) : 0.0;
}

double HomogeneousFlow::scalar0() const
{
    return dim * ric0();
}

double HomogeneousFlow::blowup_time() const
{
    const double r = ric0();
    return r > 0.0 ? 1.0 / (2.0 * r) : std::numeric_limits<double>::infinity();
}

double HomogeneousFlow::scale(double t) const
{
    return 1.0 - 2.0 * ric0() * t;
}

FlowState flow_state(const HomogeneousFlow& flow, const FlowFamily& family, double t)
{
    if (!(t >= 0.0) || !(t < flow.blowup_time())) {
        throw InvalidInput("flow time " + csv::format_number(t) + " outside [0, " +
                           csv::format_number(flow.blowup_time()) + ")");
    }
    if (!(family.psi > 0.0)) {
        throw InvalidInput("psi must be strictly positive");
    }
    FlowState s;
    s.t = t;
    s.c = flow.scale(t);
    s.R = flow.scalar0() / s.c;
    s.ric = flow.ric0();
    if (family.rule == FamilyRule::Fixed) {
        s.a = family.psi;
        s.b = 0.0;
    } else {
        s.a = family.psi * s.c;
        s.b = -2.0 * family.psi * s.ric;
    }
    return s;
}

double evolution_rhs(const FlowIntegrals& in, double tol)
{
    if (!(std::abs(in.mass - 1.0) <= tol)) {
        throw InvalidInput("eigenfunction is not mass-normalized (int u^2 = " + csv::format_number(in.mass) + ")");
    }
    return in.curvature_term + in.tensor_term;
}

FlowIntegrals analytic_integrals(const FlowState& s, int /*dim*/, double mu)
{
    // grad u = g^{-1} du = du / c, int |du|^2_{g0} = mu for normalized u
    FlowIntegrals in;
    const double energy = s.a * mu / (s.c * s.c);
    in.lambda = energy;
    in.mass = 1.0;
    in.curvature_term = s.R * (in.lambda - energy);
    in.tensor_term = 4.0 * s.ric * s.a * mu / (s.c * s.c * s.c) + s.b * mu / (s.c * s.c);
    return in;
}

FlowIntegrals fem_integrals(const Problem& problem, const MetricField& g0, const FlowState& s, const Eigen::VectorXd& u,
                            double lambda)
{
    const Mesh& mesh = *problem.mesh;
    if (u.size() != mesh.num_vertices()) {
        throw InvalidInput("mode size does not match the mesh");
    }
    const auto w = cell_weights(mesh, problem.eta);
    const int d = mesh.dim();
    FlowIntegrals in;
    in.lambda = lambda;
    in.mass = 0.0;
    double energy = 0.0, tensor = 0.0;
    for (Index c = 0; c < mesh.num_cells(); ++c) {
        const double vol = problem.metric.cell_volume(mesh, c) * w[static_cast<std::size_t>(c)];
        SmallVec ul(d + 1);
        for (int a = 0; a <= d; ++a) {
            ul(a) = u(mesh.cells()(c, a));
        }
        in.mass += ul.dot(local_mass(d, vol) * ul);
        const SmallMat& ginv = problem.metric.inverse(c);
        const SmallVec grad = ginv * cell_gradient(mesh, c, u);
        const SmallVec Tgrad = ginv * (problem.tensor[c] * grad);
        energy += vol * grad.dot(problem.tensor[c] * grad);
        tensor += vol * (4.0 * s.ric * Tgrad.dot(g0[c] * grad) + s.b * grad.dot(g0[c] * grad));
    }
    in.curvature_term = s.R * (lambda * in.mass - energy);
    in.tensor_term = tensor;
    return in;
}

namespace {

double binom(int n, int k)
{
    if (k < 0 || n < k) {
        return 0.0;
    }
    double r = 1.0;
    for (int i = 1; i <= k; ++i) {
        r = r * (n - k + i) / i;
    }
    return r;
}

} // namespace

std::vector<AnalyticLevel> analytic_levels(const HomogeneousFlow& flow, int count)
{
    std::vector<AnalyticLevel> out;
    if (count <= 0) {
        return out;
    }
    if (flow.manifold == FlowManifold::Sphere) {
        const int n = flow.dim;
        for (int k = 0; k < count; ++k) {
            AnalyticLevel l;
            l.mu = k * (k + n - 1.0) / (flow.radius * flow.radius);
            l.multiplicity = std::llround(binom(n + k, n) - binom(n + k - 2, n));
            out.push_back(l);
        }
        return out;
    }
    const double kx = 2.0 * std::numbers::pi / flow.lx;
    const double ky = 2.0 * std::numbers::pi / flow.ly;
    for (int M = 4;; M *= 2) {
        const double complete = std::min(std::pow(kx * (M + 1), 2), std::pow(ky * (M + 1), 2));
        std::vector<double> vals;
        for (int i = -M; i <= M; ++i) {
            for (int j = -M; j <= M; ++j) {
                const double v = std::pow(kx * i, 2) + std::pow(ky * j, 2);
                if (v < complete) {
                    vals.push_back(v);
                }
            }
        }
        std::sort(vals.begin(), vals.end());
        out.clear();
        for (double v : vals) {
            if (!out.empty() && std::abs(v - out.back().mu) <= 1e-12 * (1.0 + v)) {
                ++out.back().multiplicity;
            } else {
                out.push_back({v, 1});
            }
        }
        if (static_cast<int>(out.size()) >= count) {
            out.resize(static_cast<std::size_t>(count));
            return out;
        }
    }
}

double exact_lambda(const HomogeneousFlow& flow, const FlowFamily& family, double mu, double t)
{
    const double c = flow.scale(t);
    return family.rule == FamilyRule::Fixed ? family.psi * mu / (c * c) : family.psi * mu / c;
}

double exact_lambda_prime(const HomogeneousFlow& flow, const FlowFamily& family, double mu, double t)
{
    const double c = flow.scale(t);
    const double r = flow.ric0();
    return family.rule == FamilyRule::Fixed ? 4.0 * r * family.psi * mu / (c * c * c)
                                            : 2.0 * r * family.psi * mu / (c * c);
}

namespace {

std::string monotone_verdict(const std::vector<double>& v)
{
    bool strict = true, weak = true;
    for (std::size_t i = 1; i < v.size(); ++i) {
        const double tol = 1e-12 * (1.0 + std::abs(v[i]));
        const double diff = v[i] - v[i - 1];
        strict = strict && diff > tol;
        weak = weak && diff >= -tol;
    }
    if (v.size() >= 2 && strict) {
        return "increasing";
    }
    return weak ? "non-decreasing" : "not-monotone";
}

struct FemPath
{
    std::shared_ptr<const Mesh> mesh;
    MetricField g0;
};

} // namespace

FlowTrace eigen_along_flow(const HomogeneousFlow& flow, const FlowFamily& family, const std::vector<int>& levels,
                           const std::vector<double>& times, const FlowOptions& options)
{
    if (times.empty()) {
        throw InvalidInput("flow time grid is empty");
    }
    for (std::size_t i = 0; i < times.size(); ++i) {
        if (i > 0 && !(times[i] > times[i - 1])) {
            throw InvalidInput("flow times must be strictly increasing");
        }
    }
    int max_level = 0;
    for (int l : levels) {
        if (l < 0) {
            throw InvalidInput("eigen levels must be non-negative");
        }
        max_level = std::max(max_level, l);
    }
    FlowTrace tr;
    tr.flow = flow;
    tr.family = family;
    tr.times = times;
    std::vector<FlowState> states;
    for (double t : times) {
        states.push_back(flow_state(flow, family, t)); // validates t < delta
        tr.c.push_back(states.back().c);
        tr.R_min.push_back(states.back().R);
        tr.R_max.push_back(states.back().R);
    }
    const auto table = analytic_levels(flow, max_level + 1);

    const bool fem = options.fem_level > 0;
    if (fem && !(flow.manifold == FlowManifold::Sphere && flow.dim == 2)) {
        throw InvalidInput("the FEM flow path is available on S^2 only");
    }
    FemPath path;
    Index nev = 0;
    if (fem) {
        path.mesh = std::make_shared<const Mesh>(make_icosphere(flow.radius, options.fem_level));
        path.g0 = induced_metric(*path.mesh);
        for (int l = 0; l <= max_level; ++l) {
            nev += table[static_cast<std::size_t>(l)].multiplicity;
        }
    }

    tr.monotonicity_hypothesis = true;
    tr.hypothesis_equality = true;
    for (const auto& s : states) {
        // T' >= -4 Ric(T, .), both multiples of g0
        const double rhs = -4.0 * s.ric * s.a / s.c;
        const double scale = 1e-14 * (1.0 + std::abs(rhs) + std::abs(s.b));
        tr.monotonicity_hypothesis = tr.monotonicity_hypothesis && s.b >= rhs - scale;
        tr.hypothesis_equality = tr.hypothesis_equality && std::abs(s.b - rhs) <= scale;
    }

    for (int l : levels) {
        FlowSeries fs;
        fs.level = l;
        fs.mu = table[static_cast<std::size_t>(l)].mu;
        fs.multiplicity = table[static_cast<std::size_t>(l)].multiplicity;
        for (std::size_t i = 0; i < times.size(); ++i) {
            fs.lambda.push_back(exact_lambda(flow, family, fs.mu, times[i]));
            fs.lambda_prime_exact.push_back(exact_lambda_prime(flow, family, fs.mu, times[i]));
            fs.lambda_prime_pred.push_back(evolution_rhs(analytic_integrals(states[i], flow.dim, fs.mu)));
        }
        double base = fs.lambda.front() * tr.c.front();
        for (std::size_t i = 0; i < times.size(); ++i) {
            if (base != 0.0) {
                fs.scaling_drift = std::max(fs.scaling_drift, std::abs(fs.lambda[i] * tr.c[i] - base) / std::abs(base));
            }
        }
        fs.verdict = monotone_verdict(fs.lambda);
        tr.series.push_back(std::move(fs));
    }

    if (fem) {
        for (std::size_t i = 0; i < times.size(); ++i) {
            const FlowState& s = states[i];
            std::vector<SmallMat> g, T;
            for (Index c = 0; c < path.g0.size(); ++c) {
                g.push_back(s.c * path.g0[c]);
                T.push_back(s.a * path.g0[c]);
            }
            Problem p;
            p.mesh = path.mesh;
            p.metric = MetricField(std::move(g));
            p.tensor = SymTensorField(TensorRole::T, std::move(T));
            p.eta = constant_scalar(*path.mesh, ScalarRole::Eta, 0.0);
            p.bc = BoundaryCondition::TNeumann;
            const Spectrum sp = solve_eigen(assemble(p), nev, options.eigen);
            for (auto& fs : tr.series) {
                Index first = 0;
                for (int j = 0; j < fs.level; ++j) {
                    first += table[static_cast<std::size_t>(j)].multiplicity;
                }
                double lam = 0.0, lp = 0.0;
                for (Index q = first; q < first + fs.multiplicity; ++q) {
                    lam += sp.values(q);
                    lp += evolution_rhs(fem_integrals(p, path.g0, s, sp.modes.col(q), sp.values(q)));
                }
                fs.lambda_fem.push_back(lam / static_cast<double>(fs.multiplicity));
                fs.lambda_prime_fem.push_back(lp / static_cast<double>(fs.multiplicity));
            }
        }
    }

    const double delta = flow.blowup_time();
    if (std::isfinite(delta) && !tr.series.empty()) {
        tr.blowup_constant = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < times.size(); ++i) {
            tr.blowup_constant = std::min(tr.blowup_constant, tr.series.front().lambda[i] * (delta - times[i]));
        }
    }
    return tr;
}

std::string flow_csv(const FlowTrace& trace, std::size_t series)
{
    if (series >= trace.series.size()) {
        throw InvalidInput("flow trace has no series " + std::to_string(series));
    }
    const FlowSeries& fs = trace.series[series];
    csv::Table table({"t", "lambda", "lambda_prime_pred", "lambda_prime_exact", "c_of_t", "R_min", "R_max"});
    for (std::size_t i = 0; i < trace.times.size(); ++i) {
        table.add_row({csv::format_number(trace.times[i]), csv::format_number(fs.lambda[i]),
                       csv::format_number(fs.lambda_prime_pred[i]), csv::format_number(fs.lambda_prime_exact[i]),
                       csv::format_number(trace.c[i]), csv::format_number(trace.R_min[i]),
                       csv::format_number(trace.R_max[i])});
    }
    return table.str();
}

double round_pinching(const HomogeneousFlow& flow)
{
    if (flow.manifold != FlowManifold::Sphere) {
        throw InvalidInput("pinching is defined here for round spheres only");
    }
    return 1.0 / flow.dim;
}

BlowupReport blowup_probe(const HomogeneousFlow& flow, const FlowFamily& family, int level,
                          const std::vector<double>& times, double epsilon)
{
    if (flow.manifold != FlowManifold::Sphere) {
        throw InvalidInput("blow-up probe needs positive Ricci curvature (round sphere)");
    }
    if (!(epsilon > 0.0) || !(epsilon <= 0.5)) {
        throw InvalidInput("pinching constant must lie in (0, 1/2]");
    }
    if (epsilon > round_pinching(flow) * (1.0 + 1e-14)) {
        throw InvalidInput("Ric >= eps R g fails for eps = " + csv::format_number(epsilon));
    }
    if (level < 1) {
        throw InvalidInput("blow-up probe needs a non-constant eigenfunction (level >= 1)");
    }
    BlowupReport r;
    r.level = level;
    r.epsilon = epsilon;
    r.delta = flow.blowup_time();
    r.times = times;
    const double mu = analytic_levels(flow, level + 1).back().mu;
    r.bound_holds = true;
    r.fit_constant = std::numeric_limits<double>::infinity();
    for (double t : times) {
        const FlowState s = flow_state(flow, family, t);
        const double lam = exact_lambda(flow, family, mu, t);
        const double lp = evolution_rhs(analytic_integrals(s, flow.dim, mu));
        const double bound = lam * (s.R + (2.0 * epsilon - 1.0) * s.R);
        r.lambda.push_back(lam);
        r.lambda_prime.push_back(lp);
        r.slope_bound.push_back(bound);
        r.bound_holds = r.bound_holds && lp >= bound - 1e-12 * std::abs(bound);
        r.fit_constant = std::min(r.fit_constant, lam * (r.delta - t));
    }
    r.fit_positive = !times.empty() && r.fit_constant > 0.0;
    return r;
}

} // namespace hadamard
