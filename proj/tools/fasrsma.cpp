// fasrsma: outage-probability sweeps for fluid-antenna RSMA receivers.
//
//   fasrsma run <scenario> [--out DIR] [--seed N] [--threads N]
//   fasrsma validate <scenario>
//   fasrsma version
//
// Exit status: 0 clean, 1 usage, 2 parse error, 3 validation error,
// 4 partial results (some sweep points failed), 5 output not writable.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <thread>

#include "CLI11.hpp"

#include "fasrsma/scenario.hpp"
#include "fasrsma/sim.hpp"

namespace {

enum ExitCode : int {
    kClean = 0,
    kUsage = 1,
    kParse = 2,
    kValidation = 3,
    kPartial = 4,
    kOutput = 5,
};

constexpr const char* kThreadsEnv = "FASRSMA_THREADS";

std::size_t default_threads() {
    if (const char* env = std::getenv(kThreadsEnv)) {
        try {
            const long v = std::stol(env);
            if (v > 0) return static_cast<std::size_t>(v);
        } catch (const std::exception&) {
        }
        std::cerr << "warning: ignoring invalid " << kThreadsEnv << "='" << env << "'\n";
    }
    return 1;
}

bool write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) return false;
    out << content;
    return static_cast<bool>(out);
}

int run_command(const std::string& path, std::optional<std::string> out_dir, std::optional<std::uint64_t> seed,
                std::optional<std::size_t> threads) {
    using namespace fasrsma;
    scenario::Scenario sc;
    try {
        sc = scenario::load_scenario(path);
    } catch (const scenario::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kParse;
    } catch (const scenario::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kValidation;
    }
    if (out_dir) sc.output = *out_dir;
    if (seed) {
        sc.mc.seed = *seed;
        sc.mvt.seed = *seed;
    }
    const std::size_t workers = threads.value_or(default_threads());

    sim::SweepSettings settings{sc.mvt, sc.mc, sc.mc_enabled, workers};
    std::vector<sim::OutageResult> rows;
    try {
        rows = sim::run_sweep(sc.system, sc.schemes, sc.snr.points(), settings);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kValidation;
    }

    const std::filesystem::path dir(sc.output);
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    const auto table_path = dir / "outage.csv";
    const auto manifest_path = dir / "manifest.json";
    if (!write_file(table_path, scenario::format_table(rows, sc.mc_enabled)) ||
        !write_file(manifest_path, scenario::manifest(sc, path, workers).dump(2) + "\n")) {
        std::cerr << "error: cannot write results under '" << dir.string() << "'\n";
        return kOutput;
    }

    std::size_t failed = 0;
    for (const auto& r : rows) {
        for (const auto& f : r.flags) {
            if (f.rfind("error:", 0) == 0) {
                ++failed;
                break;
            }
        }
    }
    std::cout << "wrote " << rows.size() << " rows to " << table_path.string() << "\n";
    if (failed > 0) {
        std::cerr << failed << " sweep point(s) failed; see the flags column\n";
        return kPartial;
    }
    return kClean;
}

int validate_command(const std::string& path) {
    using namespace fasrsma;
    scenario::Scenario sc;
    try {
        sc = scenario::load_scenario(path);
    } catch (const scenario::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kParse;
    } catch (const scenario::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kValidation;
    }
    const auto report = scenario::validate_scenario(sc);
    for (const auto& note : report.notes) std::cout << "note: " << note << "\n";
    for (const auto& problem : report.problems) std::cout << "problem: " << problem << "\n";
    std::cout << (report.clean() ? "scenario is clean\n" : "scenario has problems\n");
    return report.clean() ? kClean : kValidation;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Outage probability of fluid-antenna RSMA receivers"};
    app.require_subcommand(1);

    std::string run_path;
    std::optional<std::string> out_dir;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> threads;
    auto* run = app.add_subcommand("run", "Evaluate a scenario sweep and write the result table");
    run->add_option("scenario", run_path, "Scenario file")->required();
    run->add_option("--out", out_dir, "Output directory (overrides the scenario)");
    run->add_option("--seed", seed, "Seed for both the QMC shifts and Monte Carlo");
    run->add_option("--threads", threads, std::string("Worker threads (default: $") + kThreadsEnv + " or 1)")
        ->check(CLI::PositiveNumber);

    std::string validate_path;
    auto* validate = app.add_subcommand("validate", "Dry-run checks of a scenario");
    validate->add_option("scenario", validate_path, "Scenario file")->required();

    auto* version = app.add_subcommand("version", "Print the version");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kClean : kUsage;
    }

    if (*run) return run_command(run_path, out_dir, seed, threads);
    if (*validate) return validate_command(validate_path);
    if (*version) {
        std::cout << "fasrsma " << fasrsma::scenario::kVersion << "\n";
        return kClean;
    }
    return kUsage;
}
