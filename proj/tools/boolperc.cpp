// Command-line front end: runs a JSON config (single run or lambda sweep)
// and writes results.csv / report.json / plot.svg under the output
// directory, with an append-only runs.log for sweep resume.

#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "boolperc/cli.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Poisson-Boolean continuum percolation lab"};
    std::string config_path;
    std::string out;
    uint64_t seed = 0;
    int threads = 0;
    bool force = false;
    app.add_option("--config", config_path, "run config JSON file")->required();
    auto* seed_opt = app.add_option("--seed", seed, "override the config seed");
    app.add_option("--threads", threads, "worker threads (does not affect results)");
    app.add_option("--out", out, "output directory (env BOOLPERC_OUT overrides)");
    app.add_flag("--force", force, "rerun configs already present in runs.log");
    CLI11_PARSE(app, argc, argv);

    try {
        std::ifstream in(config_path);
        if (!in) {
            std::cerr << "error: cannot open config " << config_path << "\n";
            return 2;
        }
        boolperc::json cfg;
        try {
            in >> cfg;
        } catch (const boolperc::json::exception& e) {
            std::cerr << "error: config parse: " << e.what() << "\n";
            return 2;
        }
        const std::optional<uint64_t> seed_override =
            seed_opt->count() > 0 ? std::optional<uint64_t>(seed) : std::nullopt;
        return boolperc::cli::run(std::move(cfg), out, seed_override, threads, force);
    } catch (const boolperc::config_error& e) {
        std::cerr << "error: config: " << e.what() << "\n";
        return 2;
    } catch (const boolperc::json::exception& e) {
        std::cerr << "error: config: " << e.what() << "\n";
        return 2;
    } catch (const boolperc::infeasible_error& e) {
        std::cerr << "error: infeasible: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: internal: " << e.what() << "\n";
        return 4;
    }
}
