// End-to-end acceptance checks. One PASS/FAIL line per criterion; exit
// status is the number of failures.

#include "hadamard/domain_variation.hpp"
#include "hadamard/error.hpp"
#include "hadamard/experiment.hpp"
#include "hadamard/random_fields.hpp"
#include "hadamard/ricci_flow.hpp"
#include "hadamard/splitting.hpp"

#include "oracles.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

using namespace hadamard;
namespace fs = std::filesystem;

namespace {

constexpr double pi = std::numbers::pi;

struct Outcome
{
    bool pass = true;
    std::ostringstream detail;

    void require(bool ok, const std::string& what)
    {
        if (!ok) {
            pass = false;
            detail << " [failed: " << what << "]";
        }
    }
};

std::shared_ptr<const Mesh> square(int n)
{
    return std::make_shared<const Mesh>(make_rectangle(0.0, pi, 0.0, pi, n, GridPattern::CrissCross));
}

SymTensorField metric_as_h(const Problem& p)
{
    std::vector<SmallMat> H;
    for (Index k = 0; k < p.metric.size(); ++k) {
        H.push_back(p.metric[k]);
    }
    return SymTensorField(TensorRole::H, std::move(H));
}

double max_pair_err(const std::vector<double>& a, const std::vector<double>& b)
{
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        worst = std::max(worst, oracle::rel_err(a[i], b[i]));
    }
    return a.size() == b.size() ? worst : INFINITY;
}

void spectra(Outcome& o)
{
    const auto iv = std::make_shared<const Mesh>(make_interval(0.0, pi, 400));
    const Spectrum a = solve_eigen(assemble(laplace_problem(iv, BoundaryCondition::Dirichlet)), 6);
    const auto ra = oracle::interval_dirichlet(pi, 6);
    double wa = 0.0;
    for (int k = 0; k < 6; ++k) {
        wa = std::max(wa, oracle::rel_err(a.values(k), ra[static_cast<std::size_t>(k)]));
    }
    const Spectrum b = solve_eigen(assemble(laplace_problem(square(100), BoundaryCondition::Dirichlet)), 8);
    const auto rb = oracle::rectangle_spectrum(pi, pi, 8, true);
    double wb = 0.0;
    for (int k = 0; k < 8; ++k) {
        wb = std::max(wb, oracle::rel_err(b.values(k), rb[static_cast<std::size_t>(k)]));
    }
    o.detail << "interval max rel err " << wa << ", square max rel err " << wb;
    o.require(wa <= 5e-3, "interval");
    o.require(wb <= 5e-3, "square");
}

void invariances(Outcome& o)
{
    for (int n : {16, 28}) { // dense and Krylov paths
        const auto mesh = square(n);
        const auto g = induced_metric(*mesh);
        const ScalarFn eta_fn = [](const SmallVec& x) { return 0.3 * std::sin(x(0)) * x(1); };
        const ScalarField eta = sample_scalar(*mesh, ScalarRole::Eta, eta_fn);
        const ScalarField eta_c =
            sample_scalar(*mesh, ScalarRole::Eta, [&](const SmallVec& x) { return eta_fn(x) + 1.7; });
        const Problem p = make_problem(mesh, g, TensorFamily::metric_itself(), eta, BoundaryCondition::Dirichlet);
        const Problem pc = make_problem(mesh, g, TensorFamily::metric_itself(), eta_c, BoundaryCondition::Dirichlet);
        Problem p2 = p;
        for (auto& t : p2.tensor.values) {
            t *= 2.0;
        }
        const Spectrum s = solve_eigen(assemble(p), 6);
        const Spectrum sc = solve_eigen(assemble(pc), 6);
        const Spectrum s2 = solve_eigen(assemble(p2), 6);
        double shift = 0.0, dbl = 0.0;
        for (int k = 0; k < 6; ++k) {
            shift = std::max(shift, oracle::rel_err(sc.values(k), s.values(k)));
            dbl = std::max(dbl, oracle::rel_err(s2.values(k), 2.0 * s.values(k)));
        }
        o.detail << "n=" << n << ": eta+c " << shift << ", 2T " << dbl << "; ";
        o.require(shift <= 1e-10, "eta shift n=" + std::to_string(n));
        o.require(dbl <= 1e-12, "2T n=" + std::to_string(n));
    }
}

void metric_slopes(Outcome& o)
{
    const auto mesh = square(32);
    const Problem p = laplace_problem(mesh, BoundaryCondition::Dirichlet);
    const Spectrum sp = solve_eigen(assemble(p), 6);
    double wm = 0.0, wf = 0.0;
    for (const Cluster& cl : {Cluster{0}, cluster_near(sp, 5.0)}) {
        VariationSpec v;
        v.H = metric_as_h(p);
        v.family = TensorFamily::metric_itself();
        const BranchSlopes m = hadamard_slopes(p, sp, cl, v);
        v.family = TensorFamily::fixed_tensor(p.tensor);
        const BranchSlopes f = hadamard_slopes(p, sp, cl, v);
        for (double s : m.slopes) {
            wm = std::max(wm, oracle::rel_err(s, -m.lambda));
        }
        for (double s : f.slopes) {
            wf = std::max(wf, oracle::rel_err(s, -2.0 * f.lambda));
        }
    }
    auto rng = substream(2024, 0);
    VariationSpec v;
    v.family = TensorFamily::metric_itself();
    v.H = random_conformal_variation(*mesh, p.metric, rng, 3, 0.3);
    const Cluster simple{0};
    const double pred = hadamard_slopes(p, sp, simple, v).slopes[0];
    // independent central difference with Richardson extrapolation
    const double fd = oracle::derivative(
        [&](double t) {
            Problem q = p;
            q.metric = perturb_metric(p.metric, v.H, t);
            q.tensor = family_tensor(v.family, *mesh, q.metric);
            return solve_eigen(assemble(q), 1).values(0);
        },
        1e-2);
    const double err = oracle::rel_err(pred, fd);
    o.detail << "H=g metric-itself " << wm << ", fixed " << wf << ", conformal vs FD " << err;
    o.require(wm <= 1e-8, "H=g metric-itself");
    o.require(wf <= 1e-8, "H=g fixed");
    o.require(err <= 1e-3, "random conformal");
}

void cluster_branches(Outcome& o)
{
    const auto mesh = square(32);
    const Problem p = laplace_problem(mesh, BoundaryCondition::Dirichlet);
    const Spectrum sp = solve_eigen(assemble(p), 6);
    const Cluster cl = cluster_near(sp, 5.0);
    o.require(cl.size() == 2, "cluster size");
    double worst = 0.0;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        auto rng = substream(seed, 0);
        VariationSpec v;
        v.family = TensorFamily::metric_itself();
        v.H = random_conformal_variation(*mesh, p.metric, rng, 3, 0.5);
        const BranchSlopes pred = hadamard_slopes(p, sp, cl, v);
        const FdSlopes fd = fd_slopes(p, v, sp, cl);
        worst = std::max(worst, max_pair_err(pred.slopes, fd.slopes));
    }
    o.detail << "worst branch rel err over 5 seeds " << worst;
    o.require(worst <= 0.01, "branches");
}

void dilations(Outcome& o)
{
    const auto iv = std::make_shared<const Mesh>(make_interval(0.0, pi, 20000));
    const Problem p = laplace_problem(iv, BoundaryCondition::Dirichlet);
    // the boundary flux amplifies eigenvector error by 1/h, so solve tightly
    EigenOptions tight;
    tight.tol = 1e-11;
    const Spectrum sp = solve_eigen(assemble(p), 3, tight);
    const VectorField V = sample_vector(*iv, [](const SmallVec& x) -> SmallVec { return x; });
    double wi = 0.0;
    for (int k = 0; k < 3; ++k) {
        const double s = boundary_slopes(p, sp, Cluster{k}, V).slopes[0];
        wi = std::max(wi, std::abs(s + 2.0 * (k + 1.0) * (k + 1.0)));
    }
    const auto disk = std::make_shared<const Mesh>(make_disk(1.0, 80));
    const Problem pd = laplace_problem(disk, BoundaryCondition::Dirichlet);
    const Spectrum sd = solve_eigen(assemble(pd), 2);
    const VectorField R = sample_vector(*disk, [](const SmallVec& x) -> SmallVec { return x; });
    const double pred = boundary_slopes(pd, sd, Cluster{0}, R).slopes[0];
    const double fd = fd_domain_slopes(pd, TensorFamily::metric_itself(), R, sd, Cluster{0}).slopes[0];
    const double err = oracle::rel_err(pred, fd);
    const double j = oracle::first_j0_root();
    o.detail << "interval max |slope + 2k^2| " << wi << ", disk pred " << pred << " vs FD " << fd << " (rel " << err
             << "; continuum " << -2.0 * j * j << ")";
    o.require(wi <= 1e-6, "interval");
    o.require(err <= 0.02, "disk");
}

void neumann(Outcome& o)
{
    const auto mesh = square(32);
    const Problem p = laplace_problem(mesh, BoundaryCondition::TNeumann);
    const Spectrum sp = solve_eigen(assemble(p), 6);
    auto rng = substream(31, 0);
    const VectorField V = random_vector_field(*mesh, rng, 2, 0.3);
    double worst = 0.0;
    for (double target : {1.0, 2.0}) {
        const Cluster cl = cluster_near(sp, target, 1e-3);
        const BranchSlopes pred = boundary_slopes(p, sp, cl, V);
        const FdSlopes fd = fd_domain_slopes(p, TensorFamily::metric_itself(), V, sp, cl);
        worst = std::max(worst, max_pair_err(pred.slopes, fd.slopes));
    }
    const VectorField Vt = sample_vector(*mesh, [](const SmallVec& x) -> SmallVec {
        SmallVec v(2);
        v << std::sin(x(0)) * std::cos(x(1)), std::sin(x(1)) * (1.0 + x(0));
        return v;
    });
    double tang = 0.0;
    for (const auto& cl : group_multiplets(sp)) {
        for (double s : boundary_slopes(p, sp, cl, Vt).slopes) {
            tang = std::max(tang, std::abs(s) / (1.0 + sp.values(cl[0])));
        }
    }
    o.detail << "seeded V vs FD " << worst << ", tangential |slope|/(1+lambda) " << tang;
    o.require(worst <= 0.02, "seeded V");
    o.require(tang <= 1e-8, "tangential");
}

void extremal(Outcome& o)
{
    double ratio[2];
    int i = 0;
    for (int rings : {20, 40}) {
        const auto disk = std::make_shared<const Mesh>(make_disk(1.0, rings));
        const Problem p = laplace_problem(disk, BoundaryCondition::Dirichlet);
        ratio[i++] = extremal_check(p, solve_eigen(assemble(p), 2), 0).deviation_ratio;
    }
    const Problem sq = laplace_problem(square(40), BoundaryCondition::Dirichlet);
    const double rs = extremal_check(sq, solve_eigen(assemble(sq), 2), 0).deviation_ratio;
    o.detail << "disk ratio " << ratio[0] << " -> " << ratio[1] << ", square ratio " << rs;
    o.require(ratio[1] <= 0.02, "disk ratio");
    o.require(ratio[1] < ratio[0], "disk refinement");
    o.require(rs >= 0.2, "square ratio");
}

void splitting(Outcome& o)
{
    const auto mesh = square(32);
    const Problem p = laplace_problem(mesh, BoundaryCondition::Dirichlet);
    const Spectrum sp = solve_eigen(assemble(p), 6);
    const Cluster cl = cluster_near(sp, 5.0);
    // T = g held fixed: G = -2T in two dimensions
    const TensorFamily fixed = TensorFamily::fixed_tensor(p.tensor);
    SplittingOptions so;
    so.trials = 20;
    so.seed = 17;
    const SplittingStats m = splitting_experiment(p, fixed, sp, cl, so);
    so.mode = SplitMode::Domain;
    const SplittingStats d = splitting_experiment(p, TensorFamily::metric_itself(), sp, cl, so);
    VariationSpec iso;
    iso.family = fixed;
    iso.H = metric_as_h(p);
    const double gap = single_trial_gap(p, sp, cl, iso);
    o.detail << "metric fraction " << m.fraction.value_or(-1) << " (" << m.family_class << "), domain fraction "
             << d.fraction.value_or(-1) << ", H=g gap " << gap;
    o.require(m.fraction.value_or(0.0) >= 0.95, "metric");
    o.require(d.fraction.value_or(0.0) >= 0.95, "domain");
    o.require(gap == 0.0, "H=g gap");
}

void classifier(Outcome& o)
{
    const auto mesh = square(6);
    const MetricField g = induced_metric(*mesh);
    auto rng = substream(9, 0);
    const ScalarFn psi_fn = random_smooth_function(*mesh, rng, 2, 0.3);
    std::vector<double> psi;
    std::vector<SmallMat> T;
    for (Index c = 0; c < g.size(); ++c) {
        SmallVec x = SmallVec::Zero(2);
        for (int a = 0; a < 3; ++a) {
            x += mesh->vertices().row(mesh->cells()(c, a)).transpose() / 3.0;
        }
        psi.push_back(1.0 + psi_fn(x));
        SmallMat t(2, 2);
        t << 2.0 + x(0), 0.3, 0.3, 1.0 + x(1);
        T.push_back(t);
    }
    const SymTensorField fixed(TensorRole::T, std::move(T));
    const auto a = property_p_tensor(FamilyRule::ConformalWeight, g, 3, psi);
    const auto b = property_p_tensor(FamilyRule::MetricItself, g, 2);
    const auto c = property_p_tensor(FamilyRule::Fixed, g, 3, {}, &fixed);
    o.detail << "conformal n=3 " << to_string(a.classification) << ", metric n=2 " << to_string(b.classification)
             << ", fixed SPD n=3 " << to_string(c.classification);
    o.require(a.classification == Definiteness::Positive, "conformal");
    o.require(b.classification == Definiteness::IdenticallyZero, "metric");
    o.require(c.classification == Definiteness::Negative, "fixed");
}

void ricci(Outcome& o)
{
    const auto s2 = HomogeneousFlow::sphere(2);
    FlowOptions fo;
    fo.fem_level = 4;
    const std::vector<double> t2{0.0, 0.1, 0.2, 0.3};
    const FlowTrace a = eigen_along_flow(s2, {}, {1, 2}, t2, fo);
    double an = 0.0, fem = 0.0;
    for (const auto& fs : a.series) {
        for (std::size_t i = 0; i < t2.size(); ++i) {
            // lambda' = 2 lambda at t = 0, 2 lambda / c(t) along the flow
            an = std::max(an, oracle::rel_err(fs.lambda_prime_pred[i], 2.0 * fs.lambda[i] / (1.0 - 2.0 * t2[i])));
            fem = std::max(fem, oracle::rel_err(fs.lambda_prime_fem[i], fs.lambda_prime_exact[i]));
        }
    }
    o.detail << "S2 analytic " << an << ", icosphere " << fem;
    o.require(an <= 1e-10, "S2 analytic");
    o.require(fem <= 0.01, "S2 FEM");

    const auto s3 = HomogeneousFlow::sphere(3);
    const std::vector<double> t3{0.0, 0.05, 0.1, 0.15, 0.2, 0.24};
    const FlowTrace b = eigen_along_flow(s3, {}, {1, 2}, t3);
    double rate = 0.0, drift = 0.0;
    bool mono = true;
    for (const auto& fs : b.series) {
        for (std::size_t i = 0; i < t3.size(); ++i) {
            rate = std::max(rate, oracle::rel_err(fs.lambda_prime_pred[i], 4.0 * fs.lambda[i] / (1.0 - 4.0 * t3[i])));
            // lambda c constant, checked against the initial value independently
            drift = std::max(drift, oracle::rel_err(fs.lambda[i] * (1.0 - 4.0 * t3[i]), fs.mu));
        }
        mono = mono && fs.verdict == "increasing";
    }
    const double ratio = b.series[0].lambda.back() / b.series[0].lambda.front();
    o.detail << "; S3 rate " << rate << ", lambda c drift " << drift << ", lambda(0.24)/lambda(0) " << ratio;
    o.require(rate <= 1e-10, "S3 rate");
    o.require(drift <= 1e-10, "S3 lambda c");
    o.require(std::abs(ratio - 25.0) <= 1e-8, "S3 ratio");
    o.require(mono, "S3 monotone");

    const FlowTrace c = eigen_along_flow(HomogeneousFlow::flat_torus(2.0 * pi, 2.0 * pi), {}, {1, 2}, {0.0, 0.5, 1.0, 5.0});
    double flat = 0.0;
    bool nd = true;
    for (const auto& fs : c.series) {
        for (double lp : fs.lambda_prime_pred) {
            flat = std::max(flat, std::abs(lp));
        }
        nd = nd && fs.verdict == "non-decreasing";
    }
    o.detail << "; torus max |lambda'| " << flat << ", verdict " << c.series[0].verdict
             << (c.hypothesis_equality ? " (equality)" : "");
    o.require(flat == 0.0, "torus rate");
    o.require(nd && c.hypothesis_equality, "torus verdict");
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void reproducible(Outcome& o)
{
    const fs::path root = fs::temp_directory_path() / "hadamard_acceptance";
    fs::remove_all(root);
    std::vector<fs::path> configs;
    for (const auto& e : fs::directory_iterator(HADAMARD_CONFIG_DIR)) {
        if (e.path().extension() == ".json") {
            configs.push_back(e.path());
        }
    }
    std::sort(configs.begin(), configs.end());
    int compared = 0;
    for (const auto& cfg : configs) {
        std::vector<fs::path> dirs;
        for (int rep = 0; rep < 2; ++rep) {
            ConfigOverrides ov;
            ov.output = root / (cfg.stem().string() + "_" + std::to_string(rep));
            const RunManifest m = run_config(load_config(cfg, ov));
            o.require(m.metric.pass, cfg.filename().string() + " key metric");
            dirs.push_back(*ov.output);
        }
        for (const auto& e : fs::directory_iterator(dirs[0])) {
            if (e.path().extension() != ".csv") {
                continue;
            }
            ++compared;
            o.require(slurp(e.path()) == slurp(dirs[1] / e.path().filename()),
                      cfg.stem().string() + "/" + e.path().filename().string());
        }
    }
    o.detail << configs.size() << " configs, " << compared << " CSVs compared";
    o.require(compared > 0, "no CSVs");
    fs::remove_all(root);
}

} // namespace

int main()
{
    const std::vector<std::pair<std::string, std::function<void(Outcome&)>>> criteria{
        {"reference spectra", spectra},
        {"weight shift and tensor scaling", invariances},
        {"metric variation slopes", metric_slopes},
        {"degenerate branch slopes", cluster_branches},
        {"domain dilation slopes", dilations},
        {"T-Neumann domain slopes", neumann},
        {"extremal boundary check", extremal},
        {"generic splitting", splitting},
        {"property P classifier", classifier},
        {"Ricci flow evolution", ricci},
        {"seeded reproducibility", reproducible},
    };
    int failures = 0;
    const auto start = std::chrono::steady_clock::now();
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        const auto t0 = std::chrono::steady_clock::now();
        try {
            criteria[i].second(o);
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail << " [exception: " << e.what() << "]";
        }
        const double sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        failures += o.pass ? 0 : 1;
        std::cout << (o.pass ? "PASS" : "FAIL") << " " << i + 1 << " " << criteria[i].first << ": " << o.detail.str()
                  << " (" << std::fixed;
        std::cout.precision(1);
        std::cout << sec << " s)" << std::defaultfloat << std::endl;
        std::cout.precision(6);
    }
    const double total = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::cout << failures << " of " << criteria.size() << " criteria failed, " << total << " s" << std::endl;
    return failures;
}
