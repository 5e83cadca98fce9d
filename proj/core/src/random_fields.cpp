#include "hadamard/random_fields.hpp"

#include "hadamard/error.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

namespace hadamard {

std::mt19937_64 substream(std::uint64_t master, std::uint64_t trial)
{
    std::seed_seq seq{static_cast<std::uint32_t>(master), static_cast<std::uint32_t>(master >> 32),
                      static_cast<std::uint32_t>(trial), static_cast<std::uint32_t>(trial >> 32)};
    return std::mt19937_64(seq);
}

double uniform(std::mt19937_64& rng, double a, double b)
{
    const double u = static_cast<double>(rng() >> 11) * 0x1p-53;
    return a + (b - a) * u;
}

namespace {

struct Term
{
    std::vector<double> freq; // per coordinate
    double coeff = 0.0;
    double phase = 0.0;
};

} // namespace

ScalarFn random_smooth_function(const Mesh& mesh, std::mt19937_64& rng, int max_mode, double amplitude)
{
    if (max_mode < 1) {
        throw InvalidInput("random field needs at least one mode");
    }
    const int dims = mesh.ambient_dim();
    std::vector<double> lo(static_cast<std::size_t>(dims)), span(static_cast<std::size_t>(dims));
    for (int k = 0; k < dims; ++k) {
        lo[static_cast<std::size_t>(k)] = mesh.vertices().col(k).minCoeff();
        span[static_cast<std::size_t>(k)] = std::max(mesh.vertices().col(k).maxCoeff() - lo[static_cast<std::size_t>(k)], 1e-12);
    }
    const bool torus = mesh.topology() == Topology::FlatTorus;
    if (torus) {
        span = {mesh.period().x(), mesh.period().y()};
    }
    // Wave numbers: pi * j / span on open charts (cosine-like basis on the
    // bounding box), 2 pi * j / period on the torus.
    const double base = torus ? 2.0 * std::numbers::pi : std::numbers::pi;
    std::vector<Term> terms;
    std::vector<int> idx(static_cast<std::size_t>(dims), 0);
    for (;;) {
        int norm2 = 0;
        for (int j : idx) {
            norm2 += j * j;
        }
        Term t;
        for (int k = 0; k < dims; ++k) {
            t.freq.push_back(base * idx[static_cast<std::size_t>(k)] / span[static_cast<std::size_t>(k)]);
        }
        t.coeff = uniform(rng, -1.0, 1.0) / (1.0 + norm2);
        t.phase = uniform(rng, 0.0, 2.0 * std::numbers::pi);
        terms.push_back(std::move(t));
        int k = 0;
        while (k < dims && ++idx[static_cast<std::size_t>(k)] > max_mode) {
            idx[static_cast<std::size_t>(k)] = 0;
            ++k;
        }
        if (k == dims) {
            break;
        }
    }
    auto raw = [terms, lo](const SmallVec& x) {
        double sum = 0.0;
        for (const auto& t : terms) {
            double arg = t.phase;
            for (std::size_t k = 0; k < t.freq.size(); ++k) {
                arg += t.freq[k] * (x(static_cast<Index>(k)) - lo[k]);
            }
            sum += t.coeff * std::cos(arg);
        }
        return sum;
    };
    double peak = 0.0;
    for (Index v = 0; v < mesh.num_vertices(); ++v) {
        peak = std::max(peak, std::abs(raw(mesh.vertices().row(v).transpose())));
    }
    const double scale = peak > 0.0 ? amplitude / peak : 0.0;
    return [raw, scale](const SmallVec& x) { return scale * raw(x); };
}

namespace {

SmallVec cell_point(const Mesh& mesh, Index c)
{
    if (mesh.has_global_chart()) {
        return mesh.centroid(c);
    }
    SmallVec x = SmallVec::Zero(mesh.ambient_dim());
    for (int a = 0; a <= mesh.dim(); ++a) {
        x += mesh.vertices().row(mesh.cells()(c, a)).transpose();
    }
    return x / (mesh.dim() + 1.0);
}

} // namespace

SymTensorField random_conformal_variation(const Mesh& mesh, const MetricField& g, std::mt19937_64& rng, int max_mode,
                                          double amplitude)
{
    return random_metric_variation(mesh, g, rng, max_mode, amplitude, false);
}

SymTensorField random_metric_variation(const Mesh& mesh, const MetricField& g, std::mt19937_64& rng, int max_mode,
                                       double amplitude, bool shear)
{
    const ScalarFn a = random_smooth_function(mesh, rng, max_mode, amplitude);
    ScalarFn b1, b2;
    const bool use_shear = shear && mesh.dim() == 2 && mesh.has_global_chart();
    if (use_shear) {
        b1 = random_smooth_function(mesh, rng, max_mode, 0.5 * amplitude);
        b2 = random_smooth_function(mesh, rng, max_mode, 0.5 * amplitude);
    }
    std::vector<SmallMat> H(static_cast<std::size_t>(mesh.num_cells()));
    for (Index c = 0; c < mesh.num_cells(); ++c) {
        const SmallVec x = cell_point(mesh, c);
        SmallMat h = a(x) * g[c];
        if (use_shear) {
            // trace-free with respect to g: g^{1/2} S0 g^{1/2} with S0 trace-free
            SmallMat S0(2, 2);
            S0 << b1(x), b2(x), b2(x), -b1(x);
            Eigen::SelfAdjointEigenSolver<SmallMat> es(g[c]);
            const SmallMat root = es.operatorSqrt();
            h += root * S0 * root;
        }
        H[static_cast<std::size_t>(c)] = h;
    }
    return SymTensorField(TensorRole::H, std::move(H));
}

VectorField random_vector_field(const Mesh& mesh, std::mt19937_64& rng, int max_mode, double amplitude)
{
    if (!mesh.has_global_chart()) {
        throw InvalidInput("random vector fields need a mesh with a global chart");
    }
    std::vector<ScalarFn> comps;
    for (int k = 0; k < mesh.dim(); ++k) {
        comps.push_back(random_smooth_function(mesh, rng, max_mode, amplitude));
    }
    return sample_vector(mesh, [comps](const SmallVec& x) {
        SmallVec v(static_cast<Index>(comps.size()));
        for (std::size_t k = 0; k < comps.size(); ++k) {
            v(static_cast<Index>(k)) = comps[k](x);
        }
        return v;
    });
}

} // namespace hadamard
