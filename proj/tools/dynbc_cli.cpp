#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "dynbc/config.hpp"
#include "dynbc/control.hpp"
#include "dynbc/kernels.hpp"
#include "dynbc/logconvexity.hpp"
#include "dynbc/pipeline.hpp"

namespace {

enum Exit : int { ok = 0, certification_failed = 1, config_error = 2, numerical_error = 3 };

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"dynbc: heat equation with dynamic boundary conditions, observability and impulse control"};
    app.require_subcommand(1);
    std::string config_path;
    std::string out_dir;
    std::optional<std::uint64_t> seed;
    int threads = 0;
    app.add_option("--config", config_path, "config file");
    app.add_option("--out", out_dir, "output directory (overrides output.dir)");
    app.add_option("--seed", seed, "random seed (overrides ensemble.seed)");
    app.add_option("--threads", threads, "worker threads (0: runtime default)")->check(CLI::NonNegativeNumber);

    const char* names[] = {"simulate", "observe", "commutator-check", "control", "cost-study", "report"};
    const char* help[] = {"free evolution, trajectory and energy CSV",
                          "frequency trace, constants and observability fit",
                          "commutator identity residual under refinement",
                          "impulse control synthesis and certification",
                          "control cost sweep over eps",
                          "merge run artifacts into report.json"};
    for (int i = 0; i < 6; ++i) app.add_subcommand(names[i], help[i])->fallthrough();
    CLI11_PARSE(app, argc, argv);
    const std::string sub = app.get_subcommands().front()->get_name();

    try {
        if (threads > 0) dynbc::kernels::set_threads(threads);
        dynbc::RunConfig cfg;
        if (!config_path.empty()) {
            cfg = dynbc::load_config(config_path);
        } else if (sub != "report") {
            throw dynbc::ConfigError("--config is required for '" + sub + "'");
        }
        if (seed) cfg.seed = *seed;
        const std::filesystem::path out = out_dir.empty() ? std::filesystem::path(cfg.output_dir) : std::filesystem::path(out_dir);

        dynbc::Json result;
        if (sub == "simulate") result = dynbc::run_simulate(cfg, out);
        else if (sub == "observe") result = dynbc::run_observe(cfg, out);
        else if (sub == "commutator-check") result = dynbc::run_commutator(cfg, out);
        else if (sub == "control") result = dynbc::run_control(cfg, out);
        else if (sub == "cost-study") result = dynbc::run_cost_study(cfg, out);
        else result = dynbc::run_report(out);

        const bool passed = sub == "report" ? result.value("all_passed", false) : result.value("passed", false);
        std::cout << sub << ": " << (passed ? "passed" : "certification failed") << " (artifacts in " << out.string()
                  << ")\n";
        return passed ? ok : certification_failed;
    } catch (const dynbc::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return config_error;
    } catch (const dynbc::ReportError& e) {
        std::cerr << "report error: " << e.what() << "\n";
        return config_error;
    } catch (const dynbc::NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return numerical_error;
    } catch (const dynbc::CalibrationError& e) {
        std::cerr << "calibration error: " << e.what() << "\n";
        return numerical_error;
    } catch (const dynbc::DegenerateDataError& e) {
        std::cerr << "degenerate data: " << e.what() << "\n";
        return numerical_error;
    } catch (const std::invalid_argument& e) {
        std::cerr << "invalid input: " << e.what() << "\n";
        return config_error;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return numerical_error;
    }
}
