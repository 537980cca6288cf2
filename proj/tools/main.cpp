// labyrinth: batch front end. Precedence: built-in defaults < --config file < command-line flags.
#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <map>

#include "commands.hpp"
#include "labyrinth/error.hpp"

using namespace lab::cli;

int main(int argc, char** argv) {
    CLI::App app{"labyrinth: barriers, certified lengths and telescoped potentials"};
    app.require_subcommand(1);
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<int> threads;
    std::optional<std::string> out;
    std::optional<double> resolution;
    app.add_option("--config", config_path, "JSON run configuration")->check(CLI::ExistingFile);
    app.add_option("--seed", seed, "master seed (lattice, shifts, audits)");
    app.add_option("--threads", threads, "worker cap");
    app.add_option("--out", out, "output directory");
    app.add_option("--resolution", resolution, "path grid: step = eta_s / resolution");
    bool dump = false;
    app.add_flag("--print-config", dump, "print the effective config and exit");
    app.fallthrough();

    const std::map<std::string, void (*)(Run&)> commands = {
        {"lattice", cmd_lattice}, {"lift", cmd_lift},           {"barrier", cmd_barrier},   {"certify-path", cmd_certify_path},
        {"runge", cmd_runge},     {"potential", cmd_potential}, {"pipeline", cmd_pipeline},
    };
    for (const auto& [name, fn] : commands) app.add_subcommand(name, "run the " + name + " stage(s)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    RunConfig cfg;
    try {
        if (!config_path.empty()) {
            std::ifstream is(config_path);
            nlohmann::json j;
            try {
                j = nlohmann::json::parse(is);
            } catch (const nlohmann::json::exception& e) {
                throw lab::Error("cli.InvalidConfig", std::string("cannot parse ") + config_path + ": " + e.what());
            }
            cfg = config_from_json(j);
        }
        if (seed) cfg.seed = *seed;
        if (threads) cfg.threads = *threads;
        if (out) cfg.out = *out;
        if (resolution) cfg.resolution = *resolution;
        validate(cfg);
    } catch (const lab::Error& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return 2;
    }
    if (dump) {
        std::cout << to_json(cfg).dump(2) << "\n";
        return 0;
    }

    const std::string name = app.get_subcommands().front()->get_name();
    Run run(cfg, name);
    std::cerr << name << " config " << run.hash() << " -> " << cfg.out << "\n";
    commands.at(name)(run);
    run.finish();
    const bool ok = run.all_pass();
    std::cerr << (ok ? "all certificates pass" : "some certificates FAILED") << "\n";
    return ok ? 0 : 1;
}
