// darwinize <command> --config <path> --out <dir> [--seed N] [--override k=v]... [--sweep k=v1,v2,...]
//
// Exit status: 0 success, 2 bad input or config, 3 numeric-domain failure,
// 1 anything else.

#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "darwinize/errors.hpp"
#include "darwinize/experiment.hpp"

namespace {

int env_threads() {
    const char* v = std::getenv("DARWINIZE_THREADS");
    if (!v || !*v) return 0;
    char* end = nullptr;
    const long n = std::strtol(v, &end, 10);
    if (*end != '\0' || n < 1) throw darwinize::ConfigError("DARWINIZE_THREADS must be a positive integer");
    return static_cast<int>(n);
}

int run(int argc, char** argv) {
    CLI::App app{"Quantum Darwinism of a qubit in a pseudomode environment"};
    app.set_version_flag("--version", "darwinize " DARWINIZE_VERSION);
    std::string command, config, out, sweep;
    std::vector<std::string> overrides;
    long long seed = -1;
    app.add_option("command", command, "dynamics | partial-info | correlations | redundancy-series | nonmarkov")
        ->required();
    app.add_option("--config", config, "key = value configuration file")->required();
    app.add_option("--out", out, "output directory")->required();
    app.add_option("--seed", seed, "sampling seed (default 42)")->check(CLI::NonNegativeNumber);
    app.add_option("--override", overrides, "key=value, applied after the config file");
    app.add_option("--sweep", sweep, "key=v1,v2,...: one run per value in <out>/<key>=<value>/");
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    using namespace darwinize;
    RunRequest req;
    req.command = parse_command(command);
    req.config_path = config;
    req.out_dir = out;
    req.threads = env_threads();
    req.entries = read_config_file(req.config_path);
    for (const auto& o : overrides) {
        const auto [k, v] = split_assignment(o);
        set_entry(req.entries, k, v);
        req.overrides.push_back(k + "=" + v);
    }
    if (seed >= 0) {
        set_entry(req.entries, "seed", std::to_string(seed));
        req.overrides.push_back("seed=" + std::to_string(seed));
    }

    if (sweep.empty()) {
        run_experiment(req);
    } else {
        const auto [key, list] = split_assignment(sweep);
        run_sweep(req, key, split_values(list));
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const darwinize::InputError& e) {
        std::cerr << "darwinize: " << e.what() << '\n';
        return 2;
    } catch (const darwinize::NumericError& e) {
        std::cerr << "darwinize: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "darwinize: " << e.what() << '\n';
        return 1;
    }
}
