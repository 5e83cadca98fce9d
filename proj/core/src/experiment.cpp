#include "hadamard/experiment.hpp"

#include "hadamard/csv.hpp"
#include "hadamard/domain_variation.hpp"
#include "hadamard/eigensolver.hpp"
#include "hadamard/error.hpp"
#include "hadamard/parallel.hpp"
#include "hadamard/random_fields.hpp"
#include "hadamard/ricci_flow.hpp"
#include "hadamard/splitting.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numbers>
#include <set>
#include <sstream>

#ifndef HADAMARD_VERSION
#define HADAMARD_VERSION "0.0.0"
#endif

namespace hadamard {

using json = nlohmann::json;

std::string_view version()
{
    return HADAMARD_VERSION;
}

std::string_view to_string(ExperimentKind kind)
{
    switch (kind) {
    case ExperimentKind::Spectrum: return "spectrum";
    case ExperimentKind::VaryMetric: return "vary-metric";
    case ExperimentKind::VaryDomain: return "vary-domain";
    case ExperimentKind::Split: return "split";
    case ExperimentKind::ExtremalCheck: return "extremal-check";
    case ExperimentKind::RicciFlow: return "ricci-flow";
    }
    return "unknown";
}

ExperimentKind experiment_kind_from_string(std::string_view name)
{
    for (auto k : {ExperimentKind::Spectrum, ExperimentKind::VaryMetric, ExperimentKind::VaryDomain,
                   ExperimentKind::Split, ExperimentKind::ExtremalCheck, ExperimentKind::RicciFlow}) {
        if (to_string(k) == name) {
            return k;
        }
    }
    throw InvalidInput("kind: unknown experiment '" + std::string(name) + "'");
}

namespace {

std::uint64_t fnv1a(std::string_view data)
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : data) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return h;
}

// Object reader that tracks consumed keys so unknown fields are rejected.
class Reader
{
public:
    Reader(const json& j, std::string path)
        : j_(j), path_(std::move(path))
    {
        if (!j_.is_object()) {
            fail("", "expected an object");
        }
    }

    bool has(const std::string& key)
    {
        seen_.insert(key);
        return j_.contains(key);
    }

    const json& at(const std::string& key)
    {
        seen_.insert(key);
        return j_.at(key);
    }

    std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

    [[noreturn]] void fail(const std::string& key, const std::string& what) const
    {
        const std::string f = key.empty() ? path_ : field(key);
        throw InvalidInput((f.empty() ? std::string("config") : f) + ": " + what);
    }

    double number(const std::string& key, double fallback)
    {
        if (!has(key)) {
            return fallback;
        }
        const json& v = at(key);
        if (!v.is_number()) {
            fail(key, "expected a number");
        }
        const double x = v.get<double>();
        if (!std::isfinite(x)) {
            fail(key, "must be finite");
        }
        return x;
    }

    int integer(const std::string& key, int fallback)
    {
        if (!has(key)) {
            return fallback;
        }
        const json& v = at(key);
        if (!v.is_number_integer()) {
            fail(key, "expected an integer");
        }
        return v.get<int>();
    }

    bool boolean(const std::string& key, bool fallback)
    {
        if (!has(key)) {
            return fallback;
        }
        const json& v = at(key);
        if (!v.is_boolean()) {
            fail(key, "expected true or false");
        }
        return v.get<bool>();
    }

    std::string string(const std::string& key, const std::string& fallback)
    {
        if (!has(key)) {
            return fallback;
        }
        const json& v = at(key);
        if (!v.is_string()) {
            fail(key, "expected a string");
        }
        return v.get<std::string>();
    }

    std::vector<double> numbers(const std::string& key, std::vector<double> fallback)
    {
        if (!has(key)) {
            return fallback;
        }
        const json& v = at(key);
        if (!v.is_array()) {
            fail(key, "expected an array of numbers");
        }
        std::vector<double> out;
        for (const auto& e : v) {
            if (!e.is_number()) {
                fail(key, "expected an array of numbers");
            }
            out.push_back(e.get<double>());
        }
        return out;
    }

    std::vector<int> integers(const std::string& key, std::vector<int> fallback)
    {
        if (!has(key)) {
            return fallback;
        }
        const json& v = at(key);
        if (!v.is_array()) {
            fail(key, "expected an array of integers");
        }
        std::vector<int> out;
        for (const auto& e : v) {
            if (!e.is_number_integer()) {
                fail(key, "expected an array of integers");
            }
            out.push_back(e.get<int>());
        }
        return out;
    }

    void finish() const
    {
        for (auto it = j_.begin(); it != j_.end(); ++it) {
            if (!seen_.count(it.key())) {
                throw InvalidInput(field(it.key()) + ": unknown field");
            }
        }
    }

private:
    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

ScalarSpec parse_scalar(const json& j, const std::string& path)
{
    ScalarSpec s;
    if (j.is_number()) {
        s.value = j.get<double>();
        return s;
    }
    Reader r(j, path);
    const std::string type = r.string("type", "constant");
    if (type == "constant") {
        s.type = ScalarSpec::Type::Constant;
        s.value = r.number("value", 0.0);
    } else if (type == "linear") {
        s.type = ScalarSpec::Type::Linear;
        s.value = r.number("value", 0.0);
        s.coeffs = r.numbers("coeffs", {});
    } else if (type == "gaussian") {
        s.type = ScalarSpec::Type::Gaussian;
        s.value = r.number("value", 1.0);
        s.center = r.numbers("center", {});
        s.width = r.number("width", 1.0);
        if (!(s.width > 0.0)) {
            r.fail("width", "must be positive");
        }
    } else if (type == "random") {
        s.type = ScalarSpec::Type::Random;
        s.amplitude = r.number("amplitude", 0.1);
        s.max_mode = r.integer("max_mode", 3);
        s.offset = r.number("offset", 0.0);
        if (s.max_mode < 1) {
            r.fail("max_mode", "must be at least 1");
        }
    } else {
        r.fail("type", "unknown scalar type '" + type + "' (constant | linear | gaussian | random)");
    }
    r.finish();
    return s;
}

GridPattern pattern_from_string(const std::string& name, Reader& r)
{
    if (name == "criss-cross") {
        return GridPattern::CrissCross;
    }
    if (name == "diagonal") {
        return GridPattern::Diagonal;
    }
    r.fail("pattern", "unknown grid pattern '" + name + "' (criss-cross | diagonal)");
}

template <class Fn>
auto guarded(const std::string& field, Fn&& fn)
{
    try {
        return fn();
    } catch (const InvalidInput& e) {
        const std::string msg = e.what();
        if (msg.rfind(field, 0) == 0) {
            throw;
        }
        throw InvalidInput(field + ": " + msg);
    }
}

bool scalar_positive_constant(const ScalarSpec& s)
{
    return s.type == ScalarSpec::Type::Constant && s.value > 0.0;
}

void validate(ExperimentConfig& c)
{
    const bool needs_mesh = c.kind != ExperimentKind::RicciFlow;
    if (needs_mesh && c.mesh_file.empty() && c.domain.resolution <= 0) {
        throw InvalidInput("domain.resolution: must be positive");
    }
    if (c.solver.k < 1) {
        throw InvalidInput("solver.k: must be at least 1");
    }
    if (!(c.solver.tol > 0.0)) {
        throw InvalidInput("solver.tol: must be positive");
    }
    if (!(c.solver.cluster_tol > 0.0)) {
        throw InvalidInput("solver.cluster_tol: must be positive");
    }
    if (c.threads < 1) {
        throw InvalidInput("threads: must be at least 1");
    }
    if (c.fd_steps.empty()) {
        throw InvalidInput("fd.steps: must not be empty");
    }
    for (std::size_t i = 0; i < c.fd_steps.size(); ++i) {
        if (!(c.fd_steps[i] > 0.0) || (i > 0 && !(c.fd_steps[i] < c.fd_steps[i - 1]))) {
            throw InvalidInput("fd.steps: must be positive and strictly decreasing");
        }
    }
    if (!(c.fd_min_step > 0.0)) {
        throw InvalidInput("fd.min_step: must be positive");
    }
    if (c.fields.psi.type == ScalarSpec::Type::Constant && !(c.fields.psi.value > 0.0)) {
        throw InvalidInput("fields.psi: must be strictly positive");
    }
    if (c.fields.metric_scale.type == ScalarSpec::Type::Constant && !(c.fields.metric_scale.value > 0.0)) {
        throw InvalidInput("fields.metric_scale: must be strictly positive");
    }
    if (c.target.index < 0) {
        throw InvalidInput("target.index: must be non-negative");
    }
    const auto& v = c.variation;
    if (c.kind == ExperimentKind::VaryMetric) {
        static const std::set<std::string> hs{"metric", "conformal", "random-conformal", "random"};
        if (!hs.count(v.H)) {
            throw InvalidInput("variation.H: unknown variation '" + v.H + "' (metric | conformal | random-conformal | random)");
        }
    }
    if (c.kind == ExperimentKind::VaryDomain) {
        static const std::set<std::string> vs{"dilation", "rotation", "random"};
        if (!vs.count(v.V)) {
            throw InvalidInput("variation.V: unknown field '" + v.V + "' (dilation | rotation | random)");
        }
    }
    if (v.max_mode < 1) {
        throw InvalidInput("variation.max_mode: must be at least 1");
    }
    if (!(v.amplitude > 0.0)) {
        throw InvalidInput("variation.amplitude: must be positive");
    }
    if (c.kind == ExperimentKind::Split) {
        guarded("split.mode", [&] { return split_mode_from_string(c.split.mode); });
        if (c.split.trials < 0) {
            throw InvalidInput("split.trials: must be non-negative");
        }
        if (!(c.split.threshold > 0.0)) {
            throw InvalidInput("split.threshold: must be positive");
        }
    }
    if (c.kind == ExperimentKind::ExtremalCheck) {
        if (c.bc != BoundaryCondition::Dirichlet) {
            throw InvalidInput("bc: extremal-check needs the dirichlet condition");
        }
        if (c.extremal.index < 0 || c.extremal.modes < 1) {
            throw InvalidInput("extremal: index must be >= 0 and modes >= 1");
        }
    }
    if (c.kind == ExperimentKind::RicciFlow) {
        const auto& f = c.flow;
        const FlowManifold m = guarded("flow.manifold", [&] { return flow_manifold_from_string(f.manifold); });
        if (m == FlowManifold::FlatTorus && f.dim != 2) {
            throw InvalidInput("flow.dim: flat-torus flows are two-dimensional");
        }
        if (!scalar_positive_constant(c.fields.psi)) {
            throw InvalidInput("fields.psi: flow experiments need a positive constant psi");
        }
        const HomogeneousFlow flow = guarded("flow", [&] {
            return m == FlowManifold::Sphere ? HomogeneousFlow::sphere(f.dim, f.radius)
                                             : HomogeneousFlow::flat_torus(f.lx, f.ly);
        });
        if (f.times.empty()) {
            throw InvalidInput("flow.times: must not be empty");
        }
        for (std::size_t i = 0; i < f.times.size(); ++i) {
            if (!(f.times[i] >= 0.0) || !(f.times[i] < flow.blowup_time())) {
                throw InvalidInput("flow.times: " + csv::format_number(f.times[i]) + " is outside [0, " +
                                   csv::format_number(flow.blowup_time()) + ")");
            }
            if (i > 0 && !(f.times[i] > f.times[i - 1])) {
                throw InvalidInput("flow.times: must be strictly increasing");
            }
        }
        if (f.levels.empty()) {
            throw InvalidInput("flow.levels: must not be empty");
        }
        for (int l : f.levels) {
            if (l < 0) {
                throw InvalidInput("flow.levels: must be non-negative");
            }
        }
        if (f.fem_level < 0 || f.fem_level > 6) {
            throw InvalidInput("flow.fem_level: must lie in [0, 6]");
        }
        if (f.fem_level > 0 && !(m == FlowManifold::Sphere && f.dim == 2)) {
            throw InvalidInput("flow.fem_level: the FEM path exists for the 2-sphere only");
        }
        if (f.epsilon) {
            if (m != FlowManifold::Sphere) {
                throw InvalidInput("flow.epsilon: blow-up probes need a sphere");
            }
            if (!(*f.epsilon > 0.0) || !(*f.epsilon <= 0.5)) {
                throw InvalidInput("flow.epsilon: must lie in (0, 1/2]");
            }
            if (*f.epsilon > 1.0 / f.dim + 1e-14) {
                throw InvalidInput("flow.epsilon: exceeds the pinching 1/n of the round sphere");
            }
        }
    }
}

} // namespace

ExperimentConfig parse_config(std::string_view text, const ConfigOverrides& ov)
{
    json root;
    try {
        root = json::parse(text.begin(), text.end());
    } catch (const json::exception& e) {
        throw InvalidInput(std::string("config: not valid JSON (") + e.what() + ")");
    }
    if (!root.is_object()) {
        throw InvalidInput("config: top level must be an object");
    }
    if (ov.kind) {
        const std::string k(to_string(*ov.kind));
        if (root.contains("kind") && root["kind"] != k) {
            throw InvalidInput("kind: config declares " + root["kind"].dump() + " but '" + k + "' was requested");
        }
        root["kind"] = k;
    }
    if (ov.seed) {
        root["seed"] = *ov.seed;
    }
    if (ov.threads) {
        root["threads"] = *ov.threads;
    }
    if (ov.output) {
        root["output"] = ov.output->generic_string();
    }

    ExperimentConfig c;
    Reader r(root, "");
    if (!r.has("kind")) {
        r.fail("kind", "missing (spectrum | vary-metric | vary-domain | split | extremal-check | ricci-flow)");
    }
    c.kind = experiment_kind_from_string(r.string("kind", ""));
    if (r.has("seed")) {
        const json& s = r.at("seed");
        if (!s.is_number_unsigned() && !(s.is_number_integer() && s.get<long long>() >= 0)) {
            r.fail("seed", "expected a non-negative integer");
        }
        c.seed = s.get<std::uint64_t>();
    }
    c.threads = r.integer("threads", 1);
    c.output = r.string("output", "out");
    c.bc = guarded("bc", [&] { return boundary_condition_from_string(r.string("bc", "dirichlet").c_str()); });

    if (r.has("domain")) {
        Reader d(r.at("domain"), "domain");
        c.mesh_file = d.string("mesh_file", "");
        if (c.mesh_file.empty() || d.has("kind")) {
            c.domain.kind = guarded("domain.kind", [&] { return topology_from_string(d.string("kind", "interval")); });
        }
        c.domain.size = d.numbers("size", {});
        c.domain.resolution = d.integer("resolution", 0);
        c.domain.pattern = pattern_from_string(d.string("pattern", "criss-cross"), d);
        d.finish();
    } else if (c.kind != ExperimentKind::RicciFlow) {
        r.fail("domain", "missing");
    }

    if (r.has("fields")) {
        Reader f(r.at("fields"), "fields");
        c.fields.family = guarded("fields.family", [&] { return family_rule_from_string(f.string("family", "metric")); });
        if (f.has("psi")) {
            c.fields.psi = parse_scalar(f.at("psi"), "fields.psi");
        }
        if (f.has("eta")) {
            c.fields.eta = parse_scalar(f.at("eta"), "fields.eta");
        }
        if (f.has("metric_scale")) {
            c.fields.metric_scale = parse_scalar(f.at("metric_scale"), "fields.metric_scale");
        }
        f.finish();
    }

    if (r.has("target")) {
        Reader t(r.at("target"), "target");
        if (t.has("lambda")) {
            c.target.lambda = t.number("lambda", 0.0);
        }
        c.target.index = t.integer("index", 0);
        t.finish();
    }

    if (r.has("variation")) {
        Reader v(r.at("variation"), "variation");
        c.variation.H = v.string("H", c.variation.H);
        if (v.has("h_factor")) {
            c.variation.h_factor = parse_scalar(v.at("h_factor"), "variation.h_factor");
        }
        if (v.has("eta_dot")) {
            c.variation.eta_dot = parse_scalar(v.at("eta_dot"), "variation.eta_dot");
        }
        c.variation.V = v.string("V", c.variation.V);
        c.variation.center = v.numbers("center", {});
        c.variation.max_mode = v.integer("max_mode", c.variation.max_mode);
        c.variation.amplitude = v.number("amplitude", c.variation.amplitude);
        c.variation.fd = v.boolean("fd", c.variation.fd);
        c.variation.tolerance = v.number("tolerance", c.variation.tolerance);
        v.finish();
    }

    if (r.has("split")) {
        Reader s(r.at("split"), "split");
        c.split.mode = s.string("mode", c.split.mode);
        c.split.trials = s.integer("trials", c.split.trials);
        c.split.threshold = s.number("threshold", c.split.threshold);
        c.split.required_fraction = s.number("required_fraction", c.split.required_fraction);
        s.finish();
    }

    if (r.has("extremal")) {
        Reader e(r.at("extremal"), "extremal");
        c.extremal.index = e.integer("index", c.extremal.index);
        c.extremal.modes = e.integer("modes", c.extremal.modes);
        c.extremal.tolerance = e.number("tolerance", c.extremal.tolerance);
        e.finish();
    }

    if (r.has("flow")) {
        Reader f(r.at("flow"), "flow");
        c.flow.manifold = f.string("manifold", c.flow.manifold);
        c.flow.dim = f.integer("dim", c.flow.dim);
        c.flow.radius = f.number("radius", c.flow.radius);
        c.flow.lx = f.number("lx", c.flow.lx);
        c.flow.ly = f.number("ly", c.flow.ly);
        c.flow.levels = f.integers("levels", c.flow.levels);
        c.flow.times = f.numbers("times", c.flow.times);
        c.flow.fem_level = f.integer("fem_level", c.flow.fem_level);
        if (f.has("epsilon")) {
            c.flow.epsilon = f.number("epsilon", 0.0);
        }
        f.finish();
    }

    if (r.has("solver")) {
        Reader s(r.at("solver"), "solver");
        c.solver.k = s.integer("k", c.solver.k);
        c.solver.tol = s.number("tol", c.solver.tol);
        c.solver.dense_threshold = s.integer("dense_threshold", c.solver.dense_threshold);
        c.solver.cluster_tol = s.number("cluster_tol", c.solver.cluster_tol);
        s.finish();
    }

    if (r.has("fd")) {
        Reader f(r.at("fd"), "fd");
        c.fd_steps = f.numbers("steps", c.fd_steps);
        c.fd_min_step = f.number("min_step", c.fd_min_step);
        f.finish();
    }
    r.finish();

    validate(c);
    c.canonical = root.dump();
    return c;
}

ExperimentConfig load_config(const std::filesystem::path& path, const ConfigOverrides& overrides)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw InvalidInput("config: cannot read '" + path.string() + "'");
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), overrides);
}

std::string fnv1a_hex(std::string_view data)
{
    std::ostringstream ss;
    ss << std::hex << std::setw(16) << std::setfill('0') << fnv1a(data);
    return ss.str();
}

namespace {

std::mt19937_64 named_stream(std::uint64_t seed, std::string_view name)
{
    return substream(seed, fnv1a(name));
}

ScalarFn scalar_fn(const ScalarSpec& s, const Mesh& mesh, std::uint64_t seed, std::string_view name)
{
    switch (s.type) {
    case ScalarSpec::Type::Constant: {
        const double v = s.value;
        return [v](const SmallVec&) { return v; };
    }
    case ScalarSpec::Type::Linear: {
        const auto a = s.coeffs;
        const double v = s.value;
        return [a, v](const SmallVec& x) {
            double r = v;
            for (std::size_t k = 0; k < a.size() && static_cast<Index>(k) < x.size(); ++k) {
                r += a[k] * x(static_cast<Index>(k));
            }
            return r;
        };
    }
    case ScalarSpec::Type::Gaussian: {
        const auto c = s.center;
        const double v = s.value, w = s.width;
        return [c, v, w](const SmallVec& x) {
            double r2 = 0.0;
            for (Index k = 0; k < x.size(); ++k) {
                const double ck = static_cast<std::size_t>(k) < c.size() ? c[static_cast<std::size_t>(k)] : 0.0;
                r2 += (x(k) - ck) * (x(k) - ck);
            }
            return v * std::exp(-r2 / (w * w));
        };
    }
    case ScalarSpec::Type::Random: {
        auto rng = named_stream(seed, name);
        const ScalarFn f = random_smooth_function(mesh, rng, s.max_mode, s.amplitude);
        const double off = s.offset;
        return [f, off](const SmallVec& x) { return off + f(x); };
    }
    }
    throw InvalidInput("unknown scalar type");
}

struct Built
{
    std::shared_ptr<const Mesh> mesh;
    TensorFamily family;
    Problem problem;
};

Built build_problem(const ExperimentConfig& c)
{
    Built b;
    if (!c.mesh_file.empty()) {
        std::ifstream in(c.mesh_file);
        if (!in) {
            throw InvalidInput("domain.mesh_file: cannot read '" + c.mesh_file + "'");
        }
        b.mesh = std::make_shared<const Mesh>(guarded("domain.mesh_file", [&] { return read_mesh(in); }));
    } else {
        b.mesh = std::make_shared<const Mesh>(guarded("domain", [&] { return build_canonical(c.domain); }));
    }
    const Mesh& mesh = *b.mesh;
    MetricField g = induced_metric(mesh);
    if (!(c.fields.metric_scale.type == ScalarSpec::Type::Constant && c.fields.metric_scale.value == 1.0)) {
        const ScalarFn s = scalar_fn(c.fields.metric_scale, mesh, c.seed, "metric_scale");
        if (mesh.has_global_chart()) {
            const int d = mesh.dim();
            g = guarded("fields.metric_scale", [&] {
                return chart_metric(mesh, [s, d](const SmallVec& x) -> SmallMat {
                    return s(x) * SmallMat::Identity(d, d);
                });
            });
        } else if (c.fields.metric_scale.type == ScalarSpec::Type::Constant) {
            std::vector<SmallMat> cells;
            for (Index k = 0; k < g.size(); ++k) {
                cells.push_back(c.fields.metric_scale.value * g[k]);
            }
            g = MetricField(std::move(cells));
        } else {
            throw InvalidInput("fields.metric_scale: only constants are supported on sphere meshes");
        }
    }
    const ScalarField psi = sample_scalar(mesh, ScalarRole::Psi, scalar_fn(c.fields.psi, mesh, c.seed, "psi"));
    if (psi.values.size() > 0 && !(psi.values.minCoeff() > 0.0)) {
        throw InvalidInput("fields.psi: must be strictly positive on every vertex");
    }
    switch (c.fields.family) {
    case FamilyRule::MetricItself:
        b.family = TensorFamily::metric_itself();
        break;
    case FamilyRule::ConformalWeight:
        b.family = TensorFamily::conformal(psi);
        break;
    case FamilyRule::Fixed: {
        std::vector<SmallMat> T;
        for (Index k = 0; k < g.size(); ++k) {
            T.push_back(psi.cell_mean(mesh, k) * g[k]);
        }
        b.family = TensorFamily::fixed_tensor(SymTensorField(TensorRole::T, std::move(T)));
        break;
    }
    }
    const ScalarField eta = sample_scalar(mesh, ScalarRole::Eta, scalar_fn(c.fields.eta, mesh, c.seed, "eta"));
    b.problem = guarded("fields", [&] { return make_problem(b.mesh, std::move(g), b.family, eta, c.bc); });
    return b;
}

EigenOptions eigen_options(const ExperimentConfig& c)
{
    EigenOptions o;
    o.tol = c.solver.tol;
    o.dense_threshold = c.solver.dense_threshold;
    return o;
}

FdOptions fd_options(const ExperimentConfig& c)
{
    FdOptions o;
    o.steps = c.fd_steps;
    o.min_step = c.fd_min_step;
    o.rel_tol = c.solver.cluster_tol;
    o.eigen = eigen_options(c);
    return o;
}

Index spectrum_size(const ExperimentConfig& c, Index needed)
{
    return std::max<Index>(c.solver.k, needed);
}

// Cluster around target.lambda, or the multiplet containing target.index.
Cluster pick_cluster(const ExperimentConfig& c, const Spectrum& sp)
{
    if (c.target.lambda) {
        Cluster cl = cluster_near(sp, *c.target.lambda, c.solver.cluster_tol);
        if (cl.empty()) {
            throw InvalidInput("target.lambda: no computed eigenvalue near " + csv::format_number(*c.target.lambda));
        }
        return cl;
    }
    if (c.target.index >= sp.size()) {
        throw InvalidInput("target.index: exceeds solver.k");
    }
    for (const auto& cl : group_multiplets(sp, c.solver.cluster_tol)) {
        if (std::find(cl.begin(), cl.end(), c.target.index) != cl.end()) {
            return cl;
        }
    }
    return {c.target.index};
}

Spectrum solve_with_margin(const ExperimentConfig& c, const Problem& p)
{
    // solve a few extra pairs so the top multiplet is complete
    Index k = spectrum_size(c, c.target.index + 3);
    const OperatorPair op = assemble(p);
    k = std::min<Index>(k + 2, op.size());
    return solve_eigen(op, k, eigen_options(c));
}

std::vector<double> analytic_spectrum(const ExperimentConfig& c, Index k)
{
    if (!c.mesh_file.empty() || c.fields.psi.type != ScalarSpec::Type::Constant ||
        c.fields.eta.type != ScalarSpec::Type::Constant ||
        !(c.fields.metric_scale.type == ScalarSpec::Type::Constant && c.fields.metric_scale.value == 1.0)) {
        return {};
    }
    const double psi = c.fields.family == FamilyRule::MetricItself ? 1.0 : c.fields.psi.value;
    const bool dir = c.bc == BoundaryCondition::Dirichlet;
    const auto& s = c.domain.size;
    std::vector<double> vals;
    const int lo = dir ? 1 : 0;
    const int M = static_cast<int>(k) + 4;
    const double pi = std::numbers::pi;
    switch (c.domain.kind) {
    case Topology::Interval: {
        const double L = s.size() == 1 ? s[0] : s.at(1) - s.at(0);
        for (int j = lo; j < lo + M; ++j) {
            vals.push_back(std::pow(pi * j / L, 2));
        }
        break;
    }
    case Topology::Rectangle: {
        const double lx = s.size() == 2 ? s[0] : s.at(1) - s.at(0);
        const double ly = s.size() == 2 ? s[1] : s.at(3) - s.at(2);
        for (int i = lo; i < lo + M; ++i) {
            for (int j = lo; j < lo + M; ++j) {
                vals.push_back(std::pow(pi * i / lx, 2) + std::pow(pi * j / ly, 2));
            }
        }
        break;
    }
    case Topology::FlatTorus: {
        const double lx = s.at(0);
        const double ly = s.size() > 1 ? s[1] : lx;
        for (const auto& l : analytic_levels(HomogeneousFlow::flat_torus(lx, ly), static_cast<int>(k) + 1)) {
            for (long long m = 0; m < l.multiplicity; ++m) {
                vals.push_back(l.mu);
            }
        }
        break;
    }
    case Topology::Sphere: {
        const double R = s.empty() ? 1.0 : s[0];
        for (int l = 0; static_cast<Index>(vals.size()) < k; ++l) {
            for (int m = 0; m < 2 * l + 1; ++m) {
                vals.push_back(l * (l + 1.0) / (R * R));
            }
        }
        break;
    }
    default:
        return {};
    }
    std::sort(vals.begin(), vals.end());
    vals.resize(static_cast<std::size_t>(std::min<Index>(k, static_cast<Index>(vals.size()))));
    for (double& v : vals) {
        v *= psi;
    }
    return vals;
}

struct Output
{
    std::vector<std::pair<std::string, std::string>> files;
    json summary = json::object();
    KeyMetric metric;
};

double finite_or_nan(double x)
{
    return std::isfinite(x) ? x : std::numeric_limits<double>::quiet_NaN();
}

json number_json(double x)
{
    return std::isfinite(x) ? json(x) : json(nullptr);
}

json vector_json(const std::vector<double>& v)
{
    json a = json::array();
    for (double x : v) {
        a.push_back(number_json(x));
    }
    return a;
}

KeyMetric make_metric(std::string name, double value, double tol, std::string relation)
{
    KeyMetric m;
    m.name = std::move(name);
    m.value = value;
    m.tolerance = tol;
    m.relation = std::move(relation);
    m.pass = m.relation == "<=" ? value <= tol : value >= tol;
    return m;
}

Output run_spectrum(const ExperimentConfig& c)
{
    const Built b = build_problem(c);
    const OperatorPair op = assemble(b.problem);
    const Index k = std::min<Index>(c.solver.k, op.size());
    const Spectrum sp = solve_eigen(op, k, eigen_options(c));
    Output out;
    out.files.emplace_back("spectrum.csv", spectrum_csv(sp, c.solver.cluster_tol));
    std::vector<double> values(sp.values.data(), sp.values.data() + sp.values.size());
    out.summary["eigenvalues"] = vector_json(values);
    out.summary["max_residual"] = sp.residuals.size() ? sp.residuals.maxCoeff() : 0.0;
    out.summary["orthonormality_residual"] = sp.orthonormality_residual;
    const auto ref = analytic_spectrum(c, k);
    if (static_cast<Index>(ref.size()) == k) {
        double worst = 0.0;
        for (Index i = 0; i < k; ++i) {
            const double denom = std::max(std::abs(ref[static_cast<std::size_t>(i)]), 1e-12);
            worst = std::max(worst, ref[static_cast<std::size_t>(i)] == 0.0
                                        ? std::abs(sp.values(i))
                                        : std::abs(sp.values(i) - ref[static_cast<std::size_t>(i)]) / denom);
        }
        out.summary["analytic"] = vector_json(ref);
        out.summary["max_rel_err_analytic"] = worst;
        out.metric = make_metric("max_rel_err_analytic", worst, 5e-3, "<=");
    } else {
        const double res = sp.residuals.size() ? sp.residuals.maxCoeff() : 0.0;
        out.metric = make_metric("max_residual", res, c.solver.tol, "<=");
    }
    return out;
}

SlopeReport predicted_only(const BranchSlopes& b)
{
    SlopeReport r;
    r.lambda = b.lambda;
    r.predicted = b.slopes;
    const double nan = std::numeric_limits<double>::quiet_NaN();
    r.oracle.assign(b.slopes.size(), nan);
    r.rel_err.assign(b.slopes.size(), nan);
    r.fd_error.assign(b.slopes.size(), nan);
    r.fd_order = nan;
    return r;
}

void slope_summary(Output& out, const SlopeReport& rep, const Cluster& cl, bool fd, double tol)
{
    out.files.emplace_back("slopes.csv", slope_csv(rep));
    out.summary["lambda"] = rep.lambda;
    out.summary["multiplicity"] = cl.size();
    out.summary["predicted"] = vector_json(rep.predicted);
    if (fd) {
        out.summary["oracle"] = vector_json(rep.oracle);
        out.summary["fd_error"] = vector_json(rep.fd_error);
        out.summary["fd_order"] = number_json(rep.fd_order);
        out.summary["max_rel_err"] = rep.max_rel_err();
        out.metric = make_metric("max_rel_err_vs_fd", rep.max_rel_err(), tol, "<=");
    } else {
        out.metric = make_metric("branches", static_cast<double>(rep.predicted.size()), 1.0, ">=");
    }
}

Output run_vary_metric(const ExperimentConfig& c)
{
    const Built b = build_problem(c);
    const Spectrum sp = solve_with_margin(c, b.problem);
    const Cluster cl = pick_cluster(c, sp);
    const Mesh& mesh = *b.mesh;
    const auto& v = c.variation;
    VariationSpec var;
    var.family = b.family;
    if (v.H == "metric") {
        var.H = SymTensorField(TensorRole::H, std::vector<SmallMat>(b.problem.metric.size()));
        for (Index k = 0; k < b.problem.metric.size(); ++k) {
            var.H.values[static_cast<std::size_t>(k)] = b.problem.metric[k];
        }
    } else if (v.H == "conformal") {
        const ScalarField h = sample_scalar(mesh, ScalarRole::Trace, scalar_fn(v.h_factor, mesh, c.seed, "h_factor"));
        std::vector<SmallMat> H;
        for (Index k = 0; k < b.problem.metric.size(); ++k) {
            H.push_back(h.cell_mean(mesh, k) * b.problem.metric[k]);
        }
        var.H = SymTensorField(TensorRole::H, std::move(H));
    } else {
        auto rng = named_stream(c.seed, "H");
        var.H = v.H == "random" ? random_metric_variation(mesh, b.problem.metric, rng, v.max_mode, v.amplitude)
                                : random_conformal_variation(mesh, b.problem.metric, rng, v.max_mode, v.amplitude);
    }
    if (v.eta_dot) {
        var.eta_dot = sample_scalar(mesh, ScalarRole::EtaDot, scalar_fn(*v.eta_dot, mesh, c.seed, "eta_dot"));
    }
    const BranchSlopes pred = hadamard_slopes(b.problem, sp, cl, var);
    Output out;
    if (v.fd) {
        const FdSlopes fd = fd_slopes(b.problem, var, sp, cl, fd_options(c));
        slope_summary(out, compare_slopes(pred, fd), cl, true, v.tolerance);
    } else {
        slope_summary(out, predicted_only(pred), cl, false, v.tolerance);
    }
    return out;
}

VectorField make_domain_field(const ExperimentConfig& c, const Mesh& mesh)
{
    if (!mesh.has_global_chart() || mesh.num_boundary_faces() == 0) {
        throw InvalidInput("domain: domain variations need a chart mesh with boundary");
    }
    const auto& v = c.variation;
    const int d = mesh.dim();
    SmallVec center = SmallVec::Zero(d);
    for (int k = 0; k < d && static_cast<std::size_t>(k) < v.center.size(); ++k) {
        center(k) = v.center[static_cast<std::size_t>(k)];
    }
    if (v.V == "dilation") {
        return sample_vector(mesh, [center](const SmallVec& x) -> SmallVec { return x - center; });
    }
    if (v.V == "rotation") {
        if (d != 2) {
            throw InvalidInput("variation.V: rotation needs a planar domain");
        }
        return sample_vector(mesh, [center](const SmallVec& x) -> SmallVec {
            SmallVec r(2);
            r << -(x(1) - center(1)), x(0) - center(0);
            return r;
        });
    }
    auto rng = named_stream(c.seed, "V");
    return random_vector_field(mesh, rng, v.max_mode, v.amplitude);
}

Output run_vary_domain(const ExperimentConfig& c)
{
    const Built b = build_problem(c);
    const VectorField V = make_domain_field(c, *b.mesh);
    const Spectrum sp = solve_with_margin(c, b.problem);
    const Cluster cl = pick_cluster(c, sp);
    const BranchSlopes pred = boundary_slopes(b.problem, sp, cl, V);
    Output out;
    if (c.variation.fd) {
        const FdSlopes fd = fd_domain_slopes(b.problem, b.family, V, sp, cl, fd_options(c));
        slope_summary(out, compare_slopes(pred, fd), cl, true, c.variation.tolerance);
    } else {
        slope_summary(out, predicted_only(pred), cl, false, c.variation.tolerance);
    }
    return out;
}

Output run_split(const ExperimentConfig& c)
{
    const Built b = build_problem(c);
    const Spectrum sp = solve_with_margin(c, b.problem);
    const Cluster cl = pick_cluster(c, sp);
    SplittingOptions o;
    o.mode = split_mode_from_string(c.split.mode);
    o.trials = c.split.trials;
    o.seed = c.seed;
    o.max_mode = c.variation.max_mode;
    o.amplitude = c.variation.amplitude;
    o.threshold = c.split.threshold;
    const SplittingStats st = splitting_experiment(b.problem, b.family, sp, cl, o);
    Output out;
    out.files.emplace_back("trials.csv", splitting_csv(st));
    out.summary["mode"] = std::string(to_string(st.mode));
    out.summary["lambda"] = st.lambda;
    out.summary["multiplicity"] = st.multiplicity;
    out.summary["trials"] = st.trials;
    out.summary["seed"] = st.seed;
    out.summary["threshold"] = st.threshold;
    out.summary["fraction"] = st.fraction ? json(*st.fraction) : json(nullptr);
    out.summary["near_cluster"] = st.near_cluster;
    out.summary["cluster_spread"] = st.cluster_spread;
    if (o.mode == SplitMode::Metric) {
        out.summary["family_class"] = st.family_class;
        out.summary["outside_hypotheses"] = st.outside_hypotheses;
    }
    out.metric = make_metric("splitting_fraction", st.fraction ? *st.fraction : std::numeric_limits<double>::quiet_NaN(),
                             c.split.required_fraction, ">=");
    return out;
}

Output run_extremal(const ExperimentConfig& c)
{
    const Built b = build_problem(c);
    ExperimentConfig cc = c;
    cc.target.index = c.extremal.index;
    const Spectrum sp = solve_with_margin(cc, b.problem);
    const ExtremalReport rep = extremal_check(b.problem, sp, c.extremal.index, c.extremal.modes);
    Output out;
    out.files.emplace_back("boundary.csv", boundary_csv(rep));
    csv::Table fv({"name", "slope"});
    json samples = json::object();
    for (const auto& s : rep.first_variations) {
        fv.add_row({s.name, csv::format_number(s.slope)});
        samples[s.name] = number_json(s.slope);
    }
    out.files.emplace_back("first_variations.csv", fv.str());
    out.summary["eigen_index"] = rep.eigen_index;
    out.summary["lambda"] = rep.lambda;
    out.summary["mean"] = rep.mean;
    out.summary["stddev"] = rep.stddev;
    out.summary["deviation_ratio"] = rep.deviation_ratio;
    out.summary["component_means"] = vector_json(rep.component_means);
    out.summary["first_variations"] = samples;
    out.metric = make_metric("deviation_ratio", rep.deviation_ratio, c.extremal.tolerance, "<=");
    return out;
}

Output run_flow(const ExperimentConfig& c)
{
    const auto& f = c.flow;
    const HomogeneousFlow flow = flow_manifold_from_string(f.manifold) == FlowManifold::Sphere
                                     ? HomogeneousFlow::sphere(f.dim, f.radius)
                                     : HomogeneousFlow::flat_torus(f.lx, f.ly);
    FlowFamily fam;
    fam.rule = c.fields.family;
    fam.psi = c.fields.psi.value;
    FlowOptions o;
    o.fem_level = f.fem_level;
    o.eigen = eigen_options(c);
    const FlowTrace tr = eigen_along_flow(flow, fam, f.levels, f.times, o);
    Output out;
    double worst = 0.0, worst_fem = 0.0;
    json series = json::array();
    for (std::size_t s = 0; s < tr.series.size(); ++s) {
        const auto& fs = tr.series[s];
        out.files.emplace_back("trace_level" + std::to_string(fs.level) + ".csv", flow_csv(tr, s));
        for (std::size_t i = 0; i < tr.times.size(); ++i) {
            const double ex = fs.lambda_prime_exact[i];
            const double denom = ex == 0.0 ? 1.0 : std::abs(ex);
            worst = std::max(worst, std::abs(fs.lambda_prime_pred[i] - ex) / denom);
            if (!fs.lambda_prime_fem.empty()) {
                worst_fem = std::max(worst_fem, std::abs(fs.lambda_prime_fem[i] - ex) / denom);
            }
        }
        json js;
        js["level"] = fs.level;
        js["mu"] = fs.mu;
        js["multiplicity"] = fs.multiplicity;
        js["verdict"] = fs.verdict;
        js["scaling_drift"] = fs.scaling_drift;
        js["lambda"] = vector_json(fs.lambda);
        if (!fs.lambda_fem.empty()) {
            js["lambda_fem"] = vector_json(fs.lambda_fem);
            js["lambda_prime_fem"] = vector_json(fs.lambda_prime_fem);
        }
        series.push_back(js);
    }
    out.summary["manifold"] = std::string(to_string(flow.manifold));
    out.summary["dim"] = flow.dim;
    out.summary["blowup_time"] = number_json(flow.blowup_time());
    out.summary["times"] = vector_json(tr.times);
    out.summary["series"] = series;
    out.summary["monotonicity_hypothesis"] = tr.monotonicity_hypothesis;
    out.summary["hypothesis_equality"] = tr.hypothesis_equality;
    out.summary["blowup_constant"] = number_json(tr.blowup_constant);
    out.summary["max_rel_err_slope"] = worst;
    if (f.epsilon) {
        const BlowupReport br = blowup_probe(flow, fam, f.levels.front() == 0 ? 1 : f.levels.front(), f.times, *f.epsilon);
        csv::Table t({"t", "lambda", "lambda_prime", "slope_bound"});
        for (std::size_t i = 0; i < br.times.size(); ++i) {
            t.add_row({csv::format_number(br.times[i]), csv::format_number(br.lambda[i]),
                       csv::format_number(br.lambda_prime[i]), csv::format_number(br.slope_bound[i])});
        }
        out.files.emplace_back("blowup.csv", t.str());
        json jb;
        jb["epsilon"] = br.epsilon;
        jb["bound_holds"] = br.bound_holds;
        jb["fit_constant"] = br.fit_constant;
        jb["fit_positive"] = br.fit_positive;
        jb["hessian_hypothesis"] = br.hessian_hypothesis;
        out.summary["blowup"] = jb;
    }
    if (f.fem_level > 0) {
        out.summary["max_rel_err_fem_slope"] = worst_fem;
        out.metric = make_metric("max_rel_err_fem_slope", worst_fem, 1e-2, "<=");
    } else {
        out.metric = make_metric("max_rel_err_slope", worst, 1e-10, "<=");
    }
    return out;
}

json metric_json(const KeyMetric& m)
{
    json j;
    j["name"] = m.name;
    j["value"] = number_json(m.value);
    j["tolerance"] = m.tolerance;
    j["relation"] = m.relation;
    j["pass"] = m.pass;
    return j;
}

std::string utc_now()
{
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    std::ostringstream ss;
    ss << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return ss.str();
}

} // namespace

RunManifest run_config(const ExperimentConfig& config)
{
    set_thread_count(config.threads);
    const auto start = std::chrono::steady_clock::now();
    RunManifest m;
    m.kind = std::string(to_string(config.kind));
    m.config_hash = fnv1a_hex(config.canonical);
    m.version = std::string(version());
    m.started_utc = utc_now();
    m.directory = config.output;

    Output out;
    switch (config.kind) {
    case ExperimentKind::Spectrum: out = run_spectrum(config); break;
    case ExperimentKind::VaryMetric: out = run_vary_metric(config); break;
    case ExperimentKind::VaryDomain: out = run_vary_domain(config); break;
    case ExperimentKind::Split: out = run_split(config); break;
    case ExperimentKind::ExtremalCheck: out = run_extremal(config); break;
    case ExperimentKind::RicciFlow: out = run_flow(config); break;
    }
    out.summary["kind"] = m.kind;
    out.summary["seed"] = config.seed;
    out.summary["metric"] = metric_json(out.metric);
    out.files.emplace_back("summary.json", out.summary.dump(2) + "\n");

    for (const auto& [name, body] : out.files) {
        csv::write_file_atomic(config.output / name, body);
        m.files.push_back(name);
    }
    m.metric = out.metric;
    m.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    csv::write_file_atomic(config.output / "manifest.json", manifest_json(m));
    return m;
}

std::string manifest_json(const RunManifest& m)
{
    json j;
    j["kind"] = m.kind;
    j["config_hash"] = m.config_hash;
    j["version"] = m.version;
    j["started_utc"] = m.started_utc;
    j["seconds"] = m.seconds;
    j["files"] = m.files;
    j["metric"] = metric_json(m.metric);
    return j.dump(2) + "\n";
}

RunManifest read_manifest(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw InvalidInput("missing manifest '" + path.string() + "'");
    }
    RunManifest m;
    try {
        const json j = json::parse(in);
        m.kind = j.at("kind").get<std::string>();
        m.config_hash = j.at("config_hash").get<std::string>();
        m.version = j.at("version").get<std::string>();
        m.started_utc = j.value("started_utc", "");
        m.seconds = j.value("seconds", 0.0);
        m.files = j.at("files").get<std::vector<std::string>>();
        const json& k = j.at("metric");
        m.metric.name = k.at("name").get<std::string>();
        m.metric.value = k.at("value").is_null() ? std::numeric_limits<double>::quiet_NaN() : k.at("value").get<double>();
        m.metric.tolerance = k.at("tolerance").get<double>();
        m.metric.relation = k.at("relation").get<std::string>();
        m.metric.pass = k.at("pass").get<bool>();
    } catch (const json::exception& e) {
        throw InvalidInput("malformed manifest '" + path.string() + "': " + e.what());
    }
    m.directory = path.parent_path();
    return m;
}

std::vector<ReportRow> emit_report(const std::vector<std::filesystem::path>& manifests)
{
    std::vector<ReportRow> rows;
    for (const auto& p : manifests) {
        const RunManifest m = read_manifest(p);
        for (const auto& f : m.files) {
            const auto artifact = m.directory / f;
            if (!std::filesystem::exists(artifact)) {
                throw InvalidInput("missing artifact '" + artifact.string() + "'");
            }
        }
        rows.push_back({m.kind, m.metric});
    }
    return rows;
}

std::string report_csv(const std::vector<ReportRow>& rows)
{
    csv::Table t({"experiment", "key_metric", "value", "tolerance", "pass"});
    for (const auto& r : rows) {
        t.add_row({r.experiment, r.metric.name, csv::format_number(finite_or_nan(r.metric.value)),
                   r.metric.relation + csv::format_number(r.metric.tolerance), r.metric.pass ? "PASS" : "FAIL"});
    }
    return t.str();
}

} // namespace hadamard
