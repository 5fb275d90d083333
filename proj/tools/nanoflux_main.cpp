#include "nanoflux/config.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
    CLI::App app{"nanoflux - stationary nanofluid convection solver"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    bool upwind = false;
    int threads = 1;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "configuration file (JSON)")->required();
        sub->add_option("--out", out_dir, "output directory (overrides config)");
        sub->add_flag("--upwind", upwind, "first-order upwind transport");
        sub->add_option("--threads", threads,
                        "reserved for concurrent parameter sweeps (runs are sequential)");
    };
    add_common(app.add_subcommand("solve", "run the continuation solver"));
    add_common(app.add_subcommand("mms", "manufactured-solution convergence study"));
    add_common(app.add_subcommand("sweep-eps", "regularization sweep with residual monitor"));
    add_common(app.add_subcommand("check", "solve and gate on the invariant suite"));

    CLI11_PARSE(app, argc, argv);

    try {
        nanoflux::RunConfig cfg = nanoflux::load_config(config_path);
        cfg.mode = nanoflux::parse_mode(app.get_subcommands().front()->get_name());
        if (!out_dir.empty()) cfg.out_dir = out_dir;
        if (upwind) {
            cfg.upwind = true;
            cfg.sub.scheme = nanoflux::AdvectScheme::Upwind;
        }
        cfg.threads = threads;
        return nanoflux::run(std::move(cfg));
    } catch (const nanoflux::ConfigError& e) {
        std::cerr << "nanoflux: config error: " << e.what() << "\n";
        return nanoflux::kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "nanoflux: " << e.what() << "\n";
        return nanoflux::kExitSolver;
    }
}
