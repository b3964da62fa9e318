// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

// Command-line front end for the convergence, power and distance studies and
// the tiny-instance oracle comparison.

#include <chrono>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "trisbf/experiments.hpp"

namespace {

using namespace trisbf;

struct Overrides {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<int> trials;
    std::optional<std::string> out;
    std::optional<int> n;
    std::optional<int> threads;
};

ExperimentConfig resolve(const Overrides& o) {
    ExperimentConfig cfg = o.config_path.empty() ? default_config() : load_config(o.config_path);
    if (o.seed) cfg.scenario.seed = *o.seed;
    if (o.trials) cfg.trials = *o.trials;
    if (o.out) cfg.output_path = *o.out;
    if (o.threads) cfg.threads = *o.threads;
    if (o.n) {
        cfg.system.N = *o.n;
        cfg.n_values = {*o.n};
        if (cfg.sweep.kind == SweepKind::elements) cfg.sweep = {};
    }
    if (cfg.n_values.empty()) cfg.n_values = {cfg.system.N};
    if (cfg.k_values.empty()) cfg.k_values = {cfg.system.K};
    cfg.validate();
    return cfg;
}

std::string sibling(const std::string& out, const std::string& suffix) {
    const std::string ext = ".csv";
    const bool has_ext = out.size() > ext.size() && out.compare(out.size() - ext.size(), ext.size(), ext) == 0;
    return (has_ext ? out.substr(0, out.size() - ext.size()) : out) + suffix;
}

std::ofstream open_output(const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write " + path);
    return os;
}

void write_manifest(const std::string& command, const ExperimentConfig& cfg, double seconds) {
    std::ofstream os = open_output(sibling(cfg.output_path, ".manifest.json"));
    os << make_manifest(command, cfg, seconds).dump(2) << '\n';
}

void report_points(const std::vector<SweepPoint>& points, const char* label) {
    for (const SweepPoint& p : points) {
        std::cout << "N=" << p.N << " K=" << p.K << ' ' << label << '=' << p.value
                  << "  mean=" << std::setprecision(6) << p.mean_sum_rate
                  << " bits  converged " << p.converged << '/' << p.trials.size() << '\n';
        for (const TrialOutcome& t : p.trials)
            if (!t.usable())
                std::cerr << "  trial " << t.trial << " (seed " << t.seed << ") skipped: "
                          << to_string(t.status) << (t.diagnostics.empty() ? "" : ": ")
                          << t.diagnostics << '\n';
    }
}

int run_command(const std::string& command, const Overrides& o, int resolution) {
    const ExperimentConfig cfg = resolve(o);
    const auto start = std::chrono::steady_clock::now();

    if (command == "converge") {
        const std::vector<SweepPoint> series = run_convergence(cfg);
        std::ofstream os = open_output(cfg.output_path);
        write_convergence_csv(os, series);
        std::ofstream trials = open_output(sibling(cfg.output_path, ".trials.csv"));
        write_trials_csv(trials, series, "N_value");
        report_points(series, "series");
    } else if (command == "sweep-power" || command == "sweep-distance") {
        const bool power = command == "sweep-power";
        const std::vector<SweepPoint> points = power ? run_power_sweep(cfg) : run_distance_sweep(cfg);
        const char* column = power ? "p_t_dbm" : "max_id_distance_m";
        std::ofstream os = open_output(cfg.output_path);
        write_sweep_csv(os, points, column);
        std::ofstream trials = open_output(sibling(cfg.output_path, ".trials.csv"));
        write_trials_csv(trials, points, column);
        report_points(points, column);
    } else {
        const std::vector<OracleComparison> rows = run_oracle_check(cfg, resolution);
        std::ofstream os = open_output(cfg.output_path);
        write_oracle_csv(os, rows);
        for (const OracleComparison& r : rows)
            std::cout << "trial " << r.trial << ": optimizer " << r.optimizer_sum_rate
                      << " oracle " << r.oracle_sum_rate << " gap " << r.relative_gap << " ("
                      << to_string(r.status) << ")\n";
    }

    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    write_manifest(command, cfg, seconds);
    std::cout << "wrote " << cfg.output_path << " in " << std::fixed << std::setprecision(1)
              << seconds << " s\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Per-element power constrained SWIPT beamforming experiments"};
    app.require_subcommand(1);
    app.fallthrough();

    Overrides o;
    int resolution = 25;
    app.add_option("--config", o.config_path, "JSON experiment configuration");
    app.add_option("--seed", o.seed, "base seed (trial i uses seed + i)");
    app.add_option("--trials", o.trials, "Monte Carlo trials per point")->check(CLI::PositiveNumber);
    app.add_option("--out", o.out, "output CSV path");
    app.add_option("--n", o.n, "number of transmit elements")->check(CLI::PositiveNumber);
    app.add_option("--threads", o.threads, "worker threads (0: all cores)")->check(CLI::NonNegativeNumber);

    std::string command;
    auto add = [&](const char* name, const char* help) {
        app.add_subcommand(name, help)->callback([&command, name] { command = name; });
    };
    add("converge", "per-iteration sum-rate traces for each configured N");
    add("sweep-power", "mean sum-rate versus per-element power");
    add("sweep-distance", "mean sum-rate versus largest ID-user distance");
    CLI::App* oracle = app.add_subcommand("oracle-check", "optimizer versus exhaustive search (N=2, K=G=1)");
    oracle->add_option("--resolution", resolution, "grid steps per real dimension")->check(CLI::Range(2, 200));
    oracle->callback([&command] { command = "oracle-check"; });

    CLI11_PARSE(app, argc, argv);
    try {
        return run_command(command, o, resolution);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
