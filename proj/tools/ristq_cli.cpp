// SPDX-License-Identifier: Apache-2.0
//
// ristq: run Monte-Carlo sweeps from JSON configs.
//
//   ristq run --config sweep.json --out results.csv
//   ristq list-scenarios
//   ristq selftest
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ristq/error.hpp"
#include "ristq/harness.hpp"
#include "ristq/selftest.hpp"

int main(int argc, char **argv) {
    CLI::App app{"Task-based quantization channel estimation for RIS-aided uplinks"};
    app.require_subcommand(1);

    std::string config_path, out_path;
    auto *run = app.add_subcommand("run", "Run a sweep and write CSV results");
    run->add_option("--config", config_path, "JSON sweep config")->required()->check(CLI::ExistingFile);
    run->add_option("--out", out_path, "Output CSV path")->required();

    auto *list = app.add_subcommand("list-scenarios", "List built-in scenario presets");
    auto *self = app.add_subcommand("selftest", "Run the invariant self-test suite");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run) {
            const ristq::SweepSpec spec = ristq::load_sweep_spec(config_path);
            std::vector<std::string> warnings;
            const auto rows = ristq::run_sweep(spec, &warnings);
            for (const auto &w : warnings)
                std::cerr << "warning: " << w << '\n';
            std::ofstream out(out_path, std::ios::binary);
            if (!out) {
                std::cerr << "error: cannot write '" << out_path << "'\n";
                return 1;
            }
            ristq::write_csv(out, rows);
            std::cerr << "wrote " << rows.size() << " rows to " << out_path << '\n';
            return 0;
        }
        if (*list) {
            for (const auto &p : ristq::scenario_presets())
                std::cout << p.name << "\t" << p.description << '\n';
            return 0;
        }
        if (*self)
            return ristq::run_selftest(std::cout) == 0 ? 0 : 1;
    } catch (const ristq::Error &e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
