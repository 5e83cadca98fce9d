// hadamard: run one eigenvalue-variation experiment from a JSON config.
//
//   hadamard spectrum --config interval.json --out runs/interval
//   hadamard split --config square_split.json --seed 11 --threads 4
//   hadamard report runs/*/manifest.json
//
// Exit status: 0 success, 2 invalid input, 3 numerical failure.

#include "hadamard/csv.hpp"
#include "hadamard/error.hpp"
#include "hadamard/experiment.hpp"

#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace {

constexpr int kInvalid = 2;
constexpr int kNumerical = 3;

struct RunArgs
{
    std::string config;
    std::optional<std::string> out;
    std::optional<std::uint64_t> seed;
    std::optional<int> threads;
    std::string format = "csv";
};

void add_run_command(CLI::App& app, hadamard::ExperimentKind kind, RunArgs& args, std::optional<hadamard::ExperimentKind>& chosen)
{
    const std::string name(hadamard::to_string(kind));
    auto* cmd = app.add_subcommand(name, "run a " + name + " experiment");
    cmd->add_option("--config", args.config, "JSON experiment config")->required();
    cmd->add_option("--out", args.out, "output directory (overrides config 'output')");
    cmd->add_option("--seed", args.seed, "master RNG seed (overrides config 'seed')");
    cmd->add_option("--threads", args.threads, "worker threads")->check(CLI::PositiveNumber);
    cmd->add_option("--format", args.format, "table format")->check(CLI::IsMember({"csv"}));
    cmd->callback([&chosen, kind] { chosen = kind; });
}

int run(const RunArgs& args, hadamard::ExperimentKind kind)
{
    hadamard::ConfigOverrides ov;
    ov.kind = kind;
    ov.seed = args.seed;
    ov.threads = args.threads;
    if (args.out) {
        ov.output = *args.out;
    }
    const auto config = hadamard::load_config(args.config, ov);
    const auto m = hadamard::run_config(config);
    std::cout << m.kind << ": " << m.metric.name << " = " << m.metric.value << " (" << m.metric.relation << " "
              << m.metric.tolerance << ") " << (m.metric.pass ? "PASS" : "FAIL") << "\n";
    std::cout << "wrote " << m.files.size() + 1 << " files to " << config.output.string() << " in " << m.seconds
              << " s\n";
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Eigenvalue variations of weighted elliptic operators"};
    app.set_version_flag("--version", std::string(hadamard::version()));
    app.require_subcommand(1);

    RunArgs args;
    std::optional<hadamard::ExperimentKind> kind;
    for (auto k : {hadamard::ExperimentKind::Spectrum, hadamard::ExperimentKind::VaryMetric,
                   hadamard::ExperimentKind::VaryDomain, hadamard::ExperimentKind::Split,
                   hadamard::ExperimentKind::ExtremalCheck, hadamard::ExperimentKind::RicciFlow}) {
        add_run_command(app, k, args, kind);
    }

    std::vector<std::string> manifests;
    std::optional<std::string> report_out;
    auto* report = app.add_subcommand("report", "consolidate run manifests into one table");
    report->add_option("manifests", manifests, "manifest.json files");
    report->add_option("--out", report_out, "write the table here instead of stdout");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kInvalid;
    }

    try {
        if (kind) {
            return run(args, *kind);
        }
        std::vector<std::filesystem::path> paths(manifests.begin(), manifests.end());
        const std::string table = hadamard::report_csv(hadamard::emit_report(paths));
        if (report_out) {
            hadamard::csv::write_file_atomic(*report_out, table);
        } else {
            std::cout << table;
        }
        return 0;
    } catch (const hadamard::InvalidInput& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kInvalid;
    } catch (const hadamard::NumericalFailure& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return kNumerical;
    } catch (const std::exception& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return kNumerical;
    }
}
