#pragma once

#include "hadamard/mesh.hpp"
#include "hadamard/types.hpp"
#include "hadamard/variation.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace hadamard {

std::string_view version();

enum class ExperimentKind { Spectrum, VaryMetric, VaryDomain, Split, ExtremalCheck, RicciFlow };

std::string_view to_string(ExperimentKind kind);
ExperimentKind experiment_kind_from_string(std::string_view name);

/// Scalar field recipe. JSON: a bare number (constant) or an object
///   {"type": "constant", "value": v}
///   {"type": "linear", "value": c, "coeffs": [a0, a1, ...]}     c + a.x
///   {"type": "gaussian", "value": A, "center": [...], "width": w}
///   {"type": "random", "amplitude": A, "max_mode": m, "offset": c}
struct ScalarSpec
{
    enum class Type { Constant, Linear, Gaussian, Random };
    Type type = Type::Constant;
    double value = 0.0;
    std::vector<double> coeffs;
    std::vector<double> center;
    double width = 1.0;
    double amplitude = 0.0;
    int max_mode = 3;
    double offset = 0.0;

    static ScalarSpec constant(double v)
    {
        ScalarSpec s;
        s.value = v;
        return s;
    }
};

struct FieldsConfig
{
    FamilyRule family = FamilyRule::MetricItself;
    ScalarSpec psi = ScalarSpec::constant(1.0);
    ScalarSpec eta{};
    /// g = metric_scale * (flat or induced metric).
    ScalarSpec metric_scale = ScalarSpec::constant(1.0);
};

struct TargetConfig
{
    std::optional<double> lambda;
    int index = 0;
};

struct VariationConfig
{
    /// "metric" (H = g), "conformal" (H = h_factor g), "random-conformal", "random"
    std::string H = "random-conformal";
    ScalarSpec h_factor = ScalarSpec::constant(1.0);
    std::optional<ScalarSpec> eta_dot;
    /// "dilation", "rotation", "random"
    std::string V = "dilation";
    std::vector<double> center;
    int max_mode = 3;
    double amplitude = 0.3;
    bool fd = true;
    /// Pass threshold for the slope comparison against finite differences.
    double tolerance = 1e-2;
};

struct SplitConfig
{
    std::string mode = "metric";
    int trials = 20;
    double threshold = 1e-6;
    double required_fraction = 0.95;
};

struct ExtremalConfig
{
    int index = 0;
    int modes = 3;
    double tolerance = 0.02;
};

struct FlowConfig
{
    std::string manifold = "sphere";
    int dim = 2;
    double radius = 1.0;
    double lx = 6.283185307179586;
    double ly = 6.283185307179586;
    std::vector<int> levels{1};
    std::vector<double> times{0.0, 0.1, 0.2, 0.4};
    int fem_level = 0;
    std::optional<double> epsilon;
};

struct SolverConfig
{
    int k = 6;
    double tol = 1e-10;
    int dense_threshold = 600;
    double cluster_tol = 1e-6;
};

struct ExperimentConfig
{
    ExperimentKind kind = ExperimentKind::Spectrum;
    DomainSpec domain;
    std::string mesh_file;
    BoundaryCondition bc = BoundaryCondition::Dirichlet;
    FieldsConfig fields;
    TargetConfig target;
    VariationConfig variation;
    SplitConfig split;
    ExtremalConfig extremal;
    FlowConfig flow;
    SolverConfig solver;
    std::vector<double> fd_steps{1e-2, 5e-3, 2.5e-3};
    double fd_min_step = 1e-5;
    std::uint64_t seed = 1;
    int threads = 1;
    std::filesystem::path output = "out";
    /// Canonical JSON of the effective configuration (hashed into the manifest).
    std::string canonical;
};

/// Command-line overrides applied on top of the file.
struct ConfigOverrides
{
    std::optional<ExperimentKind> kind;
    std::optional<std::uint64_t> seed;
    std::optional<int> threads;
    std::optional<std::filesystem::path> output;
};

/// Parses and validates. Throws InvalidInput naming the offending field.
ExperimentConfig parse_config(std::string_view json_text, const ConfigOverrides& overrides = {});
ExperimentConfig load_config(const std::filesystem::path& path, const ConfigOverrides& overrides = {});

struct KeyMetric
{
    std::string name;
    double value = 0.0;
    double tolerance = 0.0;
    /// "<=" or ">="
    std::string relation = "<=";
    bool pass = false;
};

struct RunManifest
{
    std::string kind;
    std::string config_hash;
    std::string version;
    std::string started_utc;
    double seconds = 0.0;
    std::filesystem::path directory;
    std::vector<std::string> files;
    KeyMetric metric;
};

/// 64-bit FNV-1a, 16 hex digits.
std::string fnv1a_hex(std::string_view data);

/// Runs the experiment and writes CSVs, summary.json and manifest.json
/// into config.output. Nothing is written when validation or the
/// computation fails.
RunManifest run_config(const ExperimentConfig& config);

std::string manifest_json(const RunManifest& manifest);
RunManifest read_manifest(const std::filesystem::path& path);

struct ReportRow
{
    std::string experiment;
    KeyMetric metric;
};

/// One row per manifest. Throws InvalidInput naming the path of a missing
/// manifest or artifact.
std::vector<ReportRow> emit_report(const std::vector<std::filesystem::path>& manifests);

/// experiment, key_metric, value, tolerance, pass
std::string report_csv(const std::vector<ReportRow>& rows);

} // namespace hadamard
