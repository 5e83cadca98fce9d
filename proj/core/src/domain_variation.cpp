#include "hadamard/domain_variation.hpp"

#include "hadamard/csv.hpp"
#include "hadamard/error.hpp"

#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>

namespace hadamard {

namespace {

// Three-point Gauss rule on [0, 1].
constexpr double kNodes[3] = {0.5 - 0.3872983346207417, 0.5, 0.5 + 0.3872983346207417};
constexpr double kWeights[3] = {5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0};

void require_chart(const Mesh& mesh, const char* what)
{
    if (!mesh.has_global_chart()) {
        throw InvalidInput(std::string(what) + " needs a mesh with a global chart");
    }
}

void check_vector_field(const Mesh& mesh, const VectorField& V)
{
    require_chart(mesh, "domain variation");
    if (V.values.rows() != mesh.num_vertices() || V.values.cols() != mesh.dim()) {
        throw InvalidInput("vector field shape does not match the mesh");
    }
}

// Face endpoints (one for intervals).
std::vector<int> face_vertices(const Mesh& mesh, Index f)
{
    std::vector<int> out;
    for (Index k = 0; k < mesh.boundary_faces().cols(); ++k) {
        out.push_back(mesh.boundary_faces()(f, k));
    }
    return out;
}

void assign_arclength(const Mesh& mesh, std::vector<FaceFrame>& frames)
{
    if (mesh.dim() == 1) {
        for (auto& fr : frames) {
            fr.s = fr.midpoint(0);
        }
        return;
    }
    std::map<int, Index> by_start;
    for (Index f = 0; f < mesh.num_boundary_faces(); ++f) {
        by_start[mesh.boundary_faces()(f, 0)] = f;
    }
    std::vector<bool> done(frames.size(), false);
    for (std::size_t f0 = 0; f0 < frames.size(); ++f0) {
        if (done[f0]) {
            continue;
        }
        double s = 0.0;
        Index f = static_cast<Index>(f0);
        while (!done[static_cast<std::size_t>(f)]) {
            auto& fr = frames[static_cast<std::size_t>(f)];
            done[static_cast<std::size_t>(f)] = true;
            fr.s = s + 0.5 * fr.measure;
            s += fr.measure;
            const auto it = by_start.find(mesh.boundary_faces()(f, 1));
            if (it == by_start.end()) {
                break;
            }
            f = it->second;
        }
    }
}

// Quadrature data of one face: positions along the face, weights including
// e^{-eta} d sigma.
struct FaceRule
{
    std::vector<double> s;
    std::vector<double> w;
};

FaceRule face_rule(const Problem& p, const FaceFrame& fr)
{
    const Mesh& mesh = *p.mesh;
    const auto fv = face_vertices(mesh, fr.face);
    FaceRule r;
    if (fv.size() == 1) {
        r.s = {0.0};
        r.w = {std::exp(-p.eta.values(fv[0]))};
        return r;
    }
    for (int q = 0; q < 3; ++q) {
        const double s = kNodes[q];
        const double eta = (1.0 - s) * p.eta.values(fv[0]) + s * p.eta.values(fv[1]);
        r.s.push_back(s);
        r.w.push_back(kWeights[q] * fr.measure * std::exp(-eta));
    }
    return r;
}

template <class Values>
double interpolate(const std::vector<int>& fv, double s, const Values& at)
{
    if (fv.size() == 1) {
        return at(fv[0]);
    }
    return (1.0 - s) * at(fv[0]) + s * at(fv[1]);
}

// Rate of a scalar along V at each vertex: exact directional derivative of
// the generator when available, otherwise a volume-weighted recovered
// gradient.
Eigen::VectorXd vertex_rate(const Mesh& mesh, const ScalarField& f, const VectorField& V)
{
    const Index nv = mesh.num_vertices();
    Eigen::VectorXd out = Eigen::VectorXd::Zero(nv);
    if (f.values.size() != nv) {
        throw InvalidInput("scalar field does not match the mesh vertex count");
    }
    if (f.generator) {
        for (Index v = 0; v < nv; ++v) {
            const SmallVec x = mesh.vertices().row(v).transpose();
            const SmallVec dir = V.values.row(v).transpose();
            if (dir.cwiseAbs().maxCoeff() == 0.0) {
                continue;
            }
            const double eps = 1e-6 * std::max(1.0, x.cwiseAbs().maxCoeff()) / dir.norm();
            out(v) = (f.generator(x + eps * dir) - f.generator(x - eps * dir)) / (2.0 * eps);
        }
        return out;
    }
    const int d = mesh.dim();
    Eigen::MatrixXd grad = Eigen::MatrixXd::Zero(nv, d);
    Eigen::VectorXd mass = Eigen::VectorXd::Zero(nv);
    for (Index c = 0; c < mesh.num_cells(); ++c) {
        const SmallVec gc = cell_gradient(mesh, c, f.values);
        const double vol = mesh.chart(c).chart_volume;
        for (int a = 0; a <= d; ++a) {
            const int v = mesh.cells()(c, a);
            grad.row(v) += vol * gc.transpose();
            mass(v) += vol;
        }
    }
    for (Index v = 0; v < nv; ++v) {
        out(v) = grad.row(v).dot(V.values.row(v)) / mass(v);
    }
    return out;
}

ScalarField transported(const Mesh& mesh, const ScalarField& f, const VectorField& V, double t, ScalarRole role)
{
    if (t == 0.0) {
        return f;
    }
    Eigen::VectorXd values(mesh.num_vertices());
    if (f.generator) {
        for (Index v = 0; v < mesh.num_vertices(); ++v) {
            const SmallVec x = mesh.vertices().row(v).transpose() + t * V.values.row(v).transpose();
            values(v) = f.generator(x);
        }
    } else {
        values = f.values + t * vertex_rate(mesh, f, V);
    }
    return ScalarField(role, std::move(values));
}

SmallMat jacobian(const Mesh& mesh, const VectorField& V, Index c, double t)
{
    const int d = mesh.dim();
    SmallMat J = SmallMat::Identity(d, d) + t * V.cell_jacobian(mesh, c);
    if (!(J.determinant() > 0.0)) {
        throw NumericalFailure("deformation id + tV inverts cell " + std::to_string(c) + " at t = "
                               + csv::format_number(t));
    }
    return J;
}

} // namespace

std::vector<FaceFrame> boundary_frames(const Problem& problem)
{
    const Mesh& mesh = *problem.mesh;
    std::vector<FaceFrame> frames;
    frames.reserve(static_cast<std::size_t>(mesh.num_boundary_faces()));
    for (Index f = 0; f < mesh.num_boundary_faces(); ++f) {
        FaceFrame fr;
        fr.face = f;
        fr.component = mesh.component_labels()[static_cast<std::size_t>(f)];
        fr.cell = mesh.face_cells()[static_cast<std::size_t>(f)];
        const auto fv = face_vertices(mesh, f);
        const SmallMat& g = problem.metric[fr.cell];
        const SmallMat& gi = problem.metric.inverse(fr.cell);
        if (mesh.dim() == 1) {
            const int a = mesh.local_index(fr.cell, fv[0]);
            const int b = 1 - a;
            const double x = mesh.vertices()(fv[0], 0);
            const double other = mesh.vertices()(mesh.cells()(fr.cell, b), 0);
            fr.conormal = SmallVec::Constant(1, x > other ? 1.0 : -1.0);
            fr.measure = 1.0;
            fr.midpoint = SmallVec::Constant(1, x);
        } else {
            const SmallVec p0 = mesh.vertices().row(fv[0]).transpose();
            const SmallVec p1 = mesh.vertices().row(fv[1]).transpose();
            const SmallVec tangent = p1 - p0;
            if (!(tangent.norm() > 0.0)) {
                throw InvalidInput("boundary face " + std::to_string(f) + " is degenerate");
            }
            fr.conormal = SmallVec(2);
            fr.conormal << tangent(1), -tangent(0);
            fr.conormal /= tangent.norm();
            fr.measure = std::sqrt(tangent.dot(g * tangent));
            fr.midpoint = 0.5 * (p0 + p1);
        }
        fr.norm_scale = std::sqrt(fr.conormal.dot(gi * fr.conormal));
        fr.normal = gi * fr.conormal / fr.norm_scale;
        frames.push_back(std::move(fr));
    }
    assign_arclength(mesh, frames);
    for (auto& fr : frames) {
        const FaceRule r = face_rule(problem, fr);
        fr.weighted_measure = 0.0;
        for (double w : r.w) {
            fr.weighted_measure += w;
        }
    }
    return frames;
}

double boundary_integral(const Problem& problem, const BoundaryField& v)
{
    const auto frames = boundary_frames(problem);
    if (v.values.size() != frames.size()) {
        throw InvalidInput("boundary field does not match the boundary face count");
    }
    double sum = 0.0;
    for (std::size_t f = 0; f < frames.size(); ++f) {
        sum += v.values[f] * frames[f].weighted_measure;
    }
    return sum;
}

double boundary_abs_integral(const Problem& problem, const BoundaryField& v)
{
    BoundaryField a = v;
    for (double& x : a.values) {
        x = std::abs(x);
    }
    return boundary_integral(problem, a);
}

BoundaryField normal_speed(const Problem& problem, const VectorField& V)
{
    check_vector_field(*problem.mesh, V);
    const Mesh& mesh = *problem.mesh;
    BoundaryField out;
    for (const auto& fr : boundary_frames(problem)) {
        const auto fv = face_vertices(mesh, fr.face);
        SmallVec mean = SmallVec::Zero(mesh.dim());
        for (int v : fv) {
            mean += V.values.row(v).transpose();
        }
        mean /= static_cast<double>(fv.size());
        out.values.push_back(mean.dot(fr.conormal) / fr.norm_scale);
        out.components.push_back(fr.component);
    }
    return out;
}

Pullback pullback_metric(const Problem& problem, const VectorField& V, double t)
{
    const Mesh& mesh = *problem.mesh;
    check_vector_field(mesh, V);
    if (t == 0.0) {
        return {problem.metric, problem.eta};
    }
    const MetricField& g = problem.metric;
    std::vector<SmallMat> gt(static_cast<std::size_t>(mesh.num_cells()));
    for (Index c = 0; c < mesh.num_cells(); ++c) {
        const SmallMat J = jacobian(mesh, V, c, t);
        const SmallMat base = g.generator() ? g.generator()(mesh.centroid(c) + t * V.cell_mean(mesh, c)) : g[c];
        gt[static_cast<std::size_t>(c)] = J.transpose() * base * J;
    }
    return {MetricField(std::move(gt)), transported(mesh, problem.eta, V, t, ScalarRole::Eta)};
}

ProblemFamily pullback_family(const Problem& base, const TensorFamily& family, const VectorField& V)
{
    check_vector_field(*base.mesh, V);
    return [base, family, V](double t) {
        const Mesh& mesh = *base.mesh;
        Pullback pb = pullback_metric(base, V, t);
        Problem p;
        p.mesh = base.mesh;
        p.bc = base.bc;
        switch (family.rule) {
        case FamilyRule::MetricItself:
            p.tensor = family_tensor(family, mesh, pb.metric);
            break;
        case FamilyRule::ConformalWeight: {
            TensorFamily moved = family;
            moved.psi = transported(mesh, family.psi, V, t, ScalarRole::Psi);
            p.tensor = family_tensor(moved, mesh, pb.metric);
            break;
        }
        case FamilyRule::Fixed: {
            std::vector<SmallMat> T(static_cast<std::size_t>(mesh.num_cells()));
            for (Index c = 0; c < mesh.num_cells(); ++c) {
                const SmallMat J = jacobian(mesh, V, c, t);
                T[static_cast<std::size_t>(c)] = J.transpose() * family.fixed[c] * J;
            }
            p.tensor = SymTensorField(TensorRole::T, std::move(T));
            break;
        }
        }
        p.metric = std::move(pb.metric);
        p.eta = std::move(pb.eta);
        return p;
    };
}

VariationSpec domain_variation_spec(const Problem& base, const TensorFamily& family, const VectorField& V)
{
    const Mesh& mesh = *base.mesh;
    check_vector_field(mesh, V);
    VariationSpec var;
    var.family = family;
    var.H = lie_derivative_metric(mesh, base.metric, V);
    var.eta_dot = ScalarField(ScalarRole::EtaDot, vertex_rate(mesh, base.eta, V));
    std::vector<SmallMat> rate(static_cast<std::size_t>(mesh.num_cells()));
    switch (family.rule) {
    case FamilyRule::MetricItself:
        rate = var.H.values;
        break;
    case FamilyRule::ConformalWeight: {
        const ScalarField psi_dot(ScalarRole::EtaDot, vertex_rate(mesh, family.psi, V));
        const auto psi = cell_psi(family, mesh);
        for (Index c = 0; c < mesh.num_cells(); ++c) {
            rate[static_cast<std::size_t>(c)] =
                psi_dot.cell_mean(mesh, c) * base.metric[c] + psi[static_cast<std::size_t>(c)] * var.H[c];
        }
        break;
    }
    case FamilyRule::Fixed:
        for (Index c = 0; c < mesh.num_cells(); ++c) {
            const SmallMat D = V.cell_jacobian(mesh, c);
            rate[static_cast<std::size_t>(c)] = D.transpose() * family.fixed[c] + family.fixed[c] * D;
        }
        break;
    }
    var.tensor_rate = SymTensorField(TensorRole::T, std::move(rate));
    return var;
}

namespace {

// Shared boundary quadrature; speed(face, fv, s) returns <V, nu> at the
// point of the face with parameter s.
template <class Speed>
BranchSlopes boundary_matrix(const Problem& problem, const Spectrum& spectrum, const Cluster& cluster, Speed speed)
{
    const Mesh& mesh = *problem.mesh;
    if (spectrum.bc != problem.bc) {
        throw InvalidInput("spectrum and problem use different boundary conditions");
    }
    if (cluster.empty()) {
        throw InvalidInput("empty eigenvalue cluster");
    }
    for (Index i : cluster) {
        if (i < 0 || i >= spectrum.size()) {
            throw InvalidInput("cluster index " + std::to_string(i) + " outside the spectrum");
        }
    }
    const Index m = static_cast<Index>(cluster.size());
    double lambda = 0.0;
    for (Index i : cluster) {
        lambda += spectrum.values(i);
    }
    lambda /= static_cast<double>(m);

    Eigen::MatrixXd S = Eigen::MatrixXd::Zero(m, m);
    const auto frames = boundary_frames(problem);
    for (const auto& fr : frames) {
        const Index c = fr.cell;
        if (!(mesh.chart(c).chart_volume > 0.0)) {
            throw InvalidInput("boundary face " + std::to_string(fr.face) + " touches a degenerate cell");
        }
        const auto fv = face_vertices(mesh, fr.face);
        Eigen::MatrixXd grads(mesh.dim(), m);
        for (Index i = 0; i < m; ++i) {
            grads.col(i) = cell_gradient(mesh, c, spectrum.modes.col(cluster[static_cast<std::size_t>(i)]));
        }
        const SmallMat& gi = problem.metric.inverse(c);
        const SmallMat& T = problem.tensor[c];
        const FaceRule rule = face_rule(problem, fr);
        double flux = 0.0; // integral of v e^{-eta} d sigma
        for (std::size_t q = 0; q < rule.s.size(); ++q) {
            flux += rule.w[q] * speed(fr, fv, rule.s[q]);
        }
        if (problem.bc == BoundaryCondition::Dirichlet) {
            const Eigen::VectorXd dn = grads.transpose() * fr.normal;
            const double tnn = fr.normal.dot(T * fr.normal);
            S -= tnn * flux * dn * dn.transpose();
        } else {
            const Eigen::MatrixXd TG = grads.transpose() * (gi * T * gi) * grads;
            S += flux * TG;
            for (std::size_t q = 0; q < rule.s.size(); ++q) {
                Eigen::VectorXd phi(m);
                for (Index i = 0; i < m; ++i) {
                    const auto& mode = spectrum.modes.col(cluster[static_cast<std::size_t>(i)]);
                    phi(i) = interpolate(fv, rule.s[q], [&](int v) { return mode(v); });
                }
                S -= lambda * rule.w[q] * speed(fr, fv, rule.s[q]) * phi * phi.transpose();
            }
        }
    }
    return slopes_from_matrix(lambda, std::move(S));
}

} // namespace

BranchSlopes boundary_slopes(const Problem& problem, const Spectrum& spectrum, const Cluster& cluster,
                             const VectorField& V)
{
    const Mesh& mesh = *problem.mesh;
    check_vector_field(mesh, V);
    return boundary_matrix(problem, spectrum, cluster, [&](const FaceFrame& fr, const std::vector<int>& fv, double s) {
        double vn = 0.0;
        for (int k = 0; k < mesh.dim(); ++k) {
            vn += interpolate(fv, s, [&](int v) { return V.values(v, k); }) * fr.conormal(k);
        }
        return vn / fr.norm_scale;
    });
}

BranchSlopes boundary_slopes(const Problem& problem, const Spectrum& spectrum, const Cluster& cluster,
                             const BoundaryField& v)
{
    if (static_cast<Index>(v.values.size()) != problem.mesh->num_boundary_faces()) {
        throw InvalidInput("boundary field does not match the boundary face count");
    }
    return boundary_matrix(problem, spectrum, cluster, [&](const FaceFrame& fr, const std::vector<int>&, double) {
        return v.values[static_cast<std::size_t>(fr.face)];
    });
}

FdSlopes fd_domain_slopes(const Problem& base, const TensorFamily& family, const VectorField& V,
                          const Spectrum& spectrum, const Cluster& cluster, const FdOptions& options)
{
    return fd_branch_slopes(pullback_family(base, family, V), spectrum, cluster, options);
}

BoundaryField make_volume_preserving(const Problem& problem, BoundaryField profile)
{
    const auto frames = boundary_frames(problem);
    if (frames.empty()) {
        throw InvalidInput("volume-preserving fields need a non-empty boundary");
    }
    if (profile.values.size() != frames.size()) {
        throw InvalidInput("boundary profile does not match the boundary face count");
    }
    double total = 0.0, measure = 0.0;
    for (std::size_t f = 0; f < frames.size(); ++f) {
        total += profile.values[f] * frames[f].weighted_measure;
        measure += frames[f].weighted_measure;
    }
    const double mean = total / measure;
    profile.components.resize(frames.size());
    for (std::size_t f = 0; f < frames.size(); ++f) {
        profile.values[f] -= mean;
        profile.components[f] = frames[f].component;
    }
    return profile;
}

BoundaryField make_two_component(const Problem& problem, int a, int b)
{
    const Mesh& mesh = *problem.mesh;
    if (mesh.num_components() < 2) {
        throw InvalidInput("two-component volume-preserving field needs at least two boundary components");
    }
    if (a == b || a < 0 || b < 0 || a >= mesh.num_components() || b >= mesh.num_components()) {
        throw InvalidInput("invalid boundary component pair");
    }
    const auto frames = boundary_frames(problem);
    double size_a = 0.0, size_b = 0.0;
    for (const auto& fr : frames) {
        if (fr.component == a) {
            size_a += fr.weighted_measure;
        } else if (fr.component == b) {
            size_b += fr.weighted_measure;
        }
    }
    BoundaryField v;
    for (const auto& fr : frames) {
        v.components.push_back(fr.component);
        v.values.push_back(fr.component == a ? size_b : (fr.component == b ? -size_a : 0.0));
    }
    return v;
}

ExtremalReport extremal_check(const Problem& problem, const Spectrum& spectrum, Index index, int modes)
{
    if (problem.bc != BoundaryCondition::Dirichlet || spectrum.bc != BoundaryCondition::Dirichlet) {
        throw InvalidInput("the extremal-domain check applies to Dirichlet eigenfunctions");
    }
    if (index < 0 || index >= spectrum.size()) {
        throw InvalidInput("eigen index " + std::to_string(index) + " outside the spectrum");
    }
    const Mesh& mesh = *problem.mesh;
    const auto frames = boundary_frames(problem);
    if (frames.empty()) {
        throw InvalidInput("the extremal-domain check needs a boundary");
    }
    ExtremalReport r;
    r.eigen_index = index;
    r.lambda = spectrum.values(index);
    r.component_means.assign(static_cast<std::size_t>(mesh.num_components()), 0.0);
    std::vector<double> comp_measure(static_cast<std::size_t>(mesh.num_components()), 0.0);
    double total = 0.0, measure = 0.0;
    for (const auto& fr : frames) {
        const SmallVec grad = cell_gradient(mesh, fr.cell, spectrum.modes.col(index));
        const double tnn = fr.normal.dot(problem.tensor[fr.cell] * fr.normal);
        const double value = std::abs(grad.dot(fr.normal)) * std::sqrt(tnn);
        r.values.values.push_back(value);
        r.values.components.push_back(fr.component);
        r.s.push_back(fr.s);
        total += value * fr.weighted_measure;
        measure += fr.weighted_measure;
        r.component_means[static_cast<std::size_t>(fr.component)] += value * fr.weighted_measure;
        comp_measure[static_cast<std::size_t>(fr.component)] += fr.weighted_measure;
    }
    r.mean = total / measure;
    double scale = 0.0;
    for (double v : r.values.values) {
        scale = std::max(scale, v);
    }
    if (!(r.mean > 1e-14 * std::max(1.0, scale))) {
        throw NumericalFailure("normal derivative vanishes on the whole boundary; deviation ratio undefined");
    }
    double var = 0.0;
    for (std::size_t f = 0; f < frames.size(); ++f) {
        var += (r.values.values[f] - r.mean) * (r.values.values[f] - r.mean) * frames[f].weighted_measure;
    }
    r.stddev = std::sqrt(var / measure);
    r.deviation_ratio = r.stddev / r.mean;
    for (std::size_t k = 0; k < r.component_means.size(); ++k) {
        r.component_means[k] /= comp_measure[k];
    }

    const Cluster single{index};
    if (mesh.dim() == 2) {
        std::vector<double> length(static_cast<std::size_t>(mesh.num_components()), 0.0);
        for (const auto& fr : frames) {
            length[static_cast<std::size_t>(fr.component)] += fr.measure;
        }
        for (int comp = 0; comp < mesh.num_components(); ++comp) {
            for (int j = 1; j <= modes; ++j) {
                for (int kind = 0; kind < 2; ++kind) {
                    BoundaryField profile;
                    for (const auto& fr : frames) {
                        const double arg = 2.0 * std::numbers::pi * j * fr.s / length[static_cast<std::size_t>(comp)];
                        profile.values.push_back(fr.component == comp ? (kind == 0 ? std::cos(arg) : std::sin(arg)) : 0.0);
                    }
                    const BoundaryField v = make_volume_preserving(problem, profile);
                    const double slope = boundary_slopes(problem, spectrum, single, v).slopes[0];
                    r.first_variations.push_back({std::string(kind == 0 ? "cos" : "sin") + std::to_string(j) + "@"
                                                      + std::to_string(comp),
                                                  slope});
                }
            }
        }
    }
    if (mesh.num_components() >= 2) {
        const BoundaryField v = make_two_component(problem);
        r.first_variations.push_back({"two-component", boundary_slopes(problem, spectrum, single, v).slopes[0]});
    }
    return r;
}

std::string boundary_csv(const ExtremalReport& report)
{
    csv::Table table({"face_id", "component", "s", "value"});
    for (std::size_t f = 0; f < report.values.values.size(); ++f) {
        table.add_row({std::to_string(f), std::to_string(report.values.components[f]), csv::format_number(report.s[f]),
                       csv::format_number(report.values.values[f])});
    }
    return table.str();
}

} // namespace hadamard
