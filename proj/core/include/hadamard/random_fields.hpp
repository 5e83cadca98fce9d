#pragma once

#include "hadamard/fields.hpp"
#include "hadamard/mesh.hpp"

#include <cstdint>
#include <random>

namespace hadamard {

/// Per-trial generator derived from a master seed and a trial index.
std::mt19937_64 substream(std::uint64_t master, std::uint64_t trial);

/// Uniform double in [a, b) from the top 53 bits of one draw.
double uniform(std::mt19937_64& rng, double a = 0.0, double b = 1.0);

/// Truncated trigonometric series with coefficients decaying like
/// 1/(1 + |k|^2), normalised so that max |f| over the mesh vertices equals
/// `amplitude`. Periodic on the flat torus; uses embedding coordinates on
/// the sphere.
ScalarFn random_smooth_function(const Mesh& mesh, std::mt19937_64& rng, int max_mode, double amplitude);

/// H = a(x) g + b(x) S with a random conformal factor a and a random
/// trace-free shear S (chart meshes) or conformal only (sphere).
SymTensorField random_metric_variation(const Mesh& mesh, const MetricField& g, std::mt19937_64& rng,
                                       int max_mode = 3, double amplitude = 0.5, bool shear = true);

/// Conformal H = a(x) g.
SymTensorField random_conformal_variation(const Mesh& mesh, const MetricField& g, std::mt19937_64& rng,
                                          int max_mode = 3, double amplitude = 0.5);

/// Random smooth vector field (chart meshes).
VectorField random_vector_field(const Mesh& mesh, std::mt19937_64& rng, int max_mode = 3, double amplitude = 0.5);

} // namespace hadamard
