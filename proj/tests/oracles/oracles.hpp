#pragma once

// Independent reference values for the tests. Nothing here calls into the
// library: spectra come from closed forms, lattice enumeration, special
// functions and plain finite differences.

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <numbers>
#include <vector>

namespace oracle {

/// J0 by its power series (|x| < 10 is plenty for the first root).
inline double bessel_j0(double x)
{
    double term = 1.0, sum = 1.0;
    const double q = -x * x / 4.0;
    for (int k = 1; k < 60; ++k) {
        term *= q / (static_cast<double>(k) * k);
        sum += term;
    }
    return sum;
}

/// First positive zero of J0 by bisection on [2, 3].
inline double first_j0_root()
{
    double a = 2.0, b = 3.0;
    for (int i = 0; i < 200; ++i) {
        const double m = 0.5 * (a + b);
        (bessel_j0(a) * bessel_j0(m) <= 0.0 ? b : a) = m;
    }
    return 0.5 * (a + b);
}

/// Dirichlet spectrum of (0, L), first `count` values.
inline std::vector<double> interval_dirichlet(double L, int count)
{
    std::vector<double> v;
    for (int k = 1; k <= count; ++k) {
        v.push_back(std::pow(std::numbers::pi * k / L, 2));
    }
    return v;
}

/// Rectangle spectrum by lattice enumeration, sorted, with multiplicity.
inline std::vector<double> rectangle_spectrum(double lx, double ly, int count, bool dirichlet)
{
    std::vector<double> v;
    const int lo = dirichlet ? 1 : 0;
    const int M = count + 2;
    for (int i = lo; i <= M; ++i) {
        for (int j = lo; j <= M; ++j) {
            v.push_back(std::pow(std::numbers::pi * i / lx, 2) + std::pow(std::numbers::pi * j / ly, 2));
        }
    }
    std::sort(v.begin(), v.end());
    v.resize(static_cast<std::size_t>(count));
    return v;
}

/// Distinct flat-torus eigenvalues |2 pi m / L|^2 and multiplicities.
inline std::vector<std::pair<double, int>> torus_levels(double lx, double ly, int count)
{
    std::map<long long, int> bins;
    const int M = 4 * count + 4;
    for (int i = -M; i <= M; ++i) {
        for (int j = -M; j <= M; ++j) {
            // exact integer key for the square-period case
            const double v = std::pow(2.0 * std::numbers::pi * i / lx, 2) + std::pow(2.0 * std::numbers::pi * j / ly, 2);
            ++bins[std::llround(v * 1e6)];
        }
    }
    std::vector<std::pair<double, int>> out;
    for (const auto& [k, m] : bins) {
        out.emplace_back(static_cast<double>(k) * 1e-6, m);
        if (static_cast<int>(out.size()) == count) {
            break;
        }
    }
    return out;
}

/// Dimension of degree-k spherical harmonics on S^n, by counting monomials
/// in n+1 variables: dim P_k - dim P_{k-2}.
inline long long sphere_multiplicity(int n, int k)
{
    auto monomials = [n](int deg) {
        if (deg < 0) {
            return 0LL;
        }
        // count exponent vectors of length n+1 summing to deg
        std::vector<long long> ways(static_cast<std::size_t>(deg) + 1, 0);
        ways[0] = 1;
        for (int var = 0; var <= n; ++var) {
            for (int s = 1; s <= deg; ++s) {
                ways[static_cast<std::size_t>(s)] += ways[static_cast<std::size_t>(s - 1)];
            }
        }
        return ways[static_cast<std::size_t>(deg)];
    };
    return monomials(k) - monomials(k - 2);
}

/// Eigenvalue k(k + n - 1) of the unit S^n.
inline double sphere_eigenvalue(int n, int k)
{
    return k * (k + n - 1.0);
}

/// Central difference with Richardson extrapolation over h, h/2.
inline double derivative(const std::function<double(double)>& f, double h)
{
    auto d = [&](double s) { return (f(s) - f(-s)) / (2.0 * s); };
    return (4.0 * d(h / 2) - d(h)) / 3.0;
}

inline double rel_err(double a, double b)
{
    return std::abs(a - b) / std::max(std::abs(b), 1e-300);
}

} // namespace oracle
