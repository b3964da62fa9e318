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

#include <iosfwd>
#include <string>
#include <vector>

#include "trisbf/convex_solver.hpp"

namespace trisbf {

/// ||F||_* - ||F||_2 per block, with the block traces for relative tests.
struct PenaltyResiduals {
    double I = 0.0;
    double E = 0.0;
    double trace_I = 0.0;
    double trace_E = 0.0;
};

PenaltyResiduals penalty_residuals(const LiftedPair& lift);

/// True when each block's residual is at most rel * Tr(F) + abs_floor.
bool residuals_within(const PenaltyResiduals& r, double rel, double abs_floor = 0.0);

/// Penalty-factor schedule. rho shrinks (the penalty weight 1/(2 rho) grows)
/// while either block is still away from rank one.
///
/// With `power_normalized` set, rho is measured in units of the per-element
/// power limit: the subproblem receives rho * P_t, which makes the schedule
/// independent of the absolute power scale of the scenario.
struct PenaltySchedule {
    double initial_rho = 1.0;
    double decay = 0.7;
    double floor = 1e-6;
    double residual_target = 1e-7;  ///< relative to Tr(F) per block
    bool power_normalized = true;

    double step(double rho, const PenaltyResiduals& r, double abs_floor = 0.0) const;
};

struct Tolerances {
    double surrogate_rel = 1e-4;
    int max_outer_iters = 50;
    /// A solved block whose trace is below this fraction of N * P_t is
    /// barrier residue: it is replaced by zero before the next expansion.
    double negligible_power = 1e-7;
    SolverOptions solver;
};

struct IterateState {
    LiftedPair lift;
    double sum_rate = 0.0;  ///< lifted sum-rate at `lift`
    double penalty_residual_I = 0.0;
    double penalty_residual_E = 0.0;
    double surrogate_objective = 0.0;
    double rho = 0.0;
    int iteration = 0;
    int solver_iterations = 0;
};

enum class RunStatus { converged, max_iters, infeasible, numerical_failure };

const char* to_string(RunStatus s);

struct RunResult {
    BeamformerPair beams;
    double achieved_sum_rate = 0.0;  ///< from the recovered beams (vector form)
    double achieved_harvest = 0.0;
    double lifted_sum_rate = 0.0;    ///< at the final lifted iterate
    std::vector<IterateState> trajectory;
    RunStatus status = RunStatus::infeasible;
    int outer_iterations = 0;
    std::string diagnostics;
};

struct Initialization {
    bool feasible = false;
    LiftedPair start;     ///< rank-one expansion point for the first surrogate
    LiftedPair interior;  ///< strictly interior point, used to start every solve
    bool energy_beam = false;
};

/// Builds the starting point. Information beams start as equal-gain
/// phase-matched beams sharing each element's power; if they do not harvest
/// 110% of Q_t an energy beam along the dominant EH direction takes a share
/// of the power. The result is scaled to stay strictly inside the
/// per-element limits.
Initialization initialize(const SystemConfig& cfg, const ChannelSet& ch,
                          const SelectionOperators& ops, const QuadFormCache& qf,
                          const SolverOptions& solver = {});

/// Largest total harvest reachable under the per-element limits.
double max_total_harvest(const SystemConfig& cfg, const ChannelSet& ch,
                         const SolverOptions& solver = {});

/// Raised when a lifted block is not close enough to rank one to read a
/// beamformer off it.
class RankOneError : public std::runtime_error {
public:
    RankOneError(const std::string& what, PenaltyResiduals r)
        : std::runtime_error(what), residuals(r) {}
    PenaltyResiduals residuals;
};

/// Zeroes every block whose trace is at most `floor`.
LiftedPair drop_negligible(LiftedPair lift, double floor);

/// f = sqrt(lambda_max) v_max per block. Blocks with trace <= abs_floor are
/// returned as zero beams.
BeamformerPair extract_rank_one(const LiftedPair& lift, double residual_rel = 1e-7,
                                double abs_floor = 0.0);

/// Scales beams down (by at most 0.1% in power) if round-off pushed an
/// element over P_t. Returns false if a larger correction would be needed.
bool enforce_power_limits(BeamformerPair& beams, const SelectionOperators& ops,
                          const SystemConfig& cfg);

/// The outer successive-approximation loop with the rank-one penalty.
RunResult run(const SystemConfig& cfg, const ChannelSet& ch, const PenaltySchedule& schedule = {},
              const Tolerances& tol = {});

/// iteration,sum_rate_bits,penalty_residual_I,penalty_residual_E,rho,surrogate_objective
void write_trajectory_csv(std::ostream& os, const std::vector<IterateState>& trajectory,
                          bool header = true);

}  // namespace trisbf
