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

#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "trisbf/channel_gen.hpp"
#include "trisbf/optimizer.hpp"

namespace trisbf {

enum class SweepKind { none, power, distance, elements };

const char* to_string(SweepKind k);

struct SweepSpec {
    SweepKind kind = SweepKind::none;
    std::vector<double> values;  ///< dBm, metres or element counts
};

/// Everything one CLI invocation needs. Loaded from a JSON document; see
/// README.md for the key schema.
struct ExperimentConfig {
    ScenarioParams scenario;
    SystemConfig system;
    double p_t_dbm = 10.0;
    double noise_dbm = -90.0;
    /// Absolute harvest requirement [W]. When unset the requirement is
    /// q_t_fraction times the largest harvest reachable for each drawn
    /// channel.
    std::optional<double> q_t_w;
    double q_t_fraction = 0.1;
    SweepSpec sweep;
    std::vector<int> n_values;  ///< defaults to {system.N}
    std::vector<int> k_values;  ///< defaults to {system.K}
    int trials = 1;
    PenaltySchedule schedule;
    Tolerances tolerances;
    std::string output_path = "results.csv";
    int threads = 0;  ///< 0: hardware concurrency

    /// Throws std::invalid_argument on an out-of-range field.
    void validate() const;
};

/// Raised for malformed configuration text. `line` is 1-based, 0 if unknown.
class ConfigError : public std::runtime_error {
public:
    ConfigError(const std::string& what, int line)
        : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + what : what),
          line(line) {}
    int line;
};

ExperimentConfig default_config();
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);
nlohmann::json to_json(const ExperimentConfig& cfg);

/// One Monte Carlo trial: draw the scenario, fix Q_t, run the optimizer.
struct TrialOutcome {
    int N = 0;
    int K = 0;
    double sweep_value = 0.0;
    int trial = 0;
    std::uint64_t seed = 0;
    RunStatus status = RunStatus::infeasible;
    double q_t = 0.0;
    double sum_rate = 0.0;  ///< recomputed from the recovered beams
    double harvest = 0.0;
    double lifted_sum_rate = 0.0;
    int outer_iterations = 0;
    double residual_I = 0.0;
    double residual_E = 0.0;
    double trace_I = 0.0;
    double trace_E = 0.0;
    double max_violation = 0.0;  ///< of the per-element and harvest rows by the beams
    std::vector<IterateState> trajectory;
    std::string diagnostics;

    /// Converged or out of iterations: beams exist and count toward means.
    bool usable() const;
};

/// Runs one trial of `cfg` with the scenario seed replaced by `seed`.
TrialOutcome run_trial(const ExperimentConfig& cfg, std::uint64_t seed, bool keep_trajectory);

/// Trials 0..trials-1 with seeds base + index, run concurrently and returned
/// in trial order.
std::vector<TrialOutcome> run_trials(const ExperimentConfig& cfg, bool keep_trajectory);

struct SweepPoint {
    int N = 0;
    int K = 0;
    double value = 0.0;
    std::vector<TrialOutcome> trials;
    int usable = 0;
    int converged = 0;
    double mean_sum_rate = 0.0;
    double median_sum_rate = 0.0;
};

SweepPoint summarize(int N, int K, double value, std::vector<TrialOutcome> trials);

/// One trajectory set per configured element count.
std::vector<SweepPoint> run_convergence(const ExperimentConfig& cfg);
/// Mean sum-rate versus per-element power (dBm), per (N, K).
std::vector<SweepPoint> run_power_sweep(const ExperimentConfig& cfg);
/// Mean sum-rate versus the largest ID-user distance (m), per (N, K).
/// The nearest ID distance stays at the scenario's minimum.
std::vector<SweepPoint> run_distance_sweep(const ExperimentConfig& cfg);

struct OracleComparison {
    int trial = 0;
    std::uint64_t seed = 0;
    RunStatus status = RunStatus::infeasible;
    double optimizer_sum_rate = 0.0;
    double oracle_sum_rate = 0.0;
    double relative_gap = 0.0;  ///< (oracle - optimizer) / oracle
    double max_violation = 0.0;
    bool oracle_feasible = false;
};

/// Optimizer versus exhaustive search at N = 2, K = G = 1.
std::vector<OracleComparison> run_oracle_check(const ExperimentConfig& cfg, int resolution = 25);

/// N,trial,seed,iteration,sum_rate_bits,penalty_residual_I,penalty_residual_E,rho,surrogate_objective
void write_convergence_csv(std::ostream& os, const std::vector<SweepPoint>& series);
/// N,K,<value_name>,trials,usable,converged,mean_sum_rate_bits,median_sum_rate_bits
void write_sweep_csv(std::ostream& os, const std::vector<SweepPoint>& points,
                     const std::string& value_name);
/// One row per trial with status, rates, harvest and iteration count.
void write_trials_csv(std::ostream& os, const std::vector<SweepPoint>& points,
                      const std::string& value_name);
void write_oracle_csv(std::ostream& os, const std::vector<OracleComparison>& rows);

/// JSON run manifest: command, config echo, library versions, wall time.
nlohmann::json make_manifest(const std::string& command, const ExperimentConfig& cfg,
                             double wall_seconds);

/// Largest relative violation of the per-element and harvest rows by beams.
double beam_violation(const BeamformerPair& beams, const ChannelSet& ch,
                      const SelectionOperators& ops, const SystemConfig& cfg);

}  // namespace trisbf
