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

#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "trisbf/subproblem.hpp"

namespace trisbf {

/// Log-barrier path-following settings. The barrier weight starts at
/// `initial_barrier`, shrinks by `barrier_decay` per stage, and the method
/// stops once weight * barrier degree drops below `gap_target` (the degree
/// is the number of inequality rows plus both PSD block sizes).
struct SolverOptions {
    double initial_barrier = 1.0;
    double barrier_decay = 0.2;
    double gap_target = 1e-8;
    double fraction_to_boundary = 0.98;
    double centering_tol = 1e-10;  ///< on lambda^2 / (2 mu)
    int max_newton_per_stage = 200;
    int max_total_newton = 4000;
    int polish_steps = 6;
};

enum class SolveStatus { optimal, max_iters, numerical_failure, infeasible };

const char* to_string(SolveStatus s);

struct SolverTrace {
    int iteration = 0;
    double barrier = 0.0;
    double objective = 0.0;
    double step = 0.0;
    double decrement = 0.0;
};

using TraceSink = std::function<void(const SolverTrace&)>;

struct SolveReport {
    LiftedPair solution;
    double objective = std::numeric_limits<double>::quiet_NaN();
    int iterations = 0;
    double max_constraint_violation = 0.0;  ///< max over rows of violation / (1 + |bound|)
    SolveStatus status = SolveStatus::numerical_failure;
    std::string diagnostics;
    double final_barrier = 0.0;
    double kkt_residual = 0.0;  ///< Frobenius norm of the barrier-augmented gradient
    std::vector<double> stage_objectives;  ///< objective after centering at each weight
};

/// Maximizes the subproblem. A warm start is used only if it is strictly
/// interior; otherwise a Phase-I point is computed first.
SolveReport solve(const SubproblemData& sub, const std::optional<LiftedPair>& warm_start = {},
                  const SolverOptions& options = {}, const TraceSink& sink = {});

enum class Phase1Status { feasible, infeasible, no_strict_interior };

const char* to_string(Phase1Status s);

struct Phase1Result {
    Phase1Status status = Phase1Status::infeasible;
    LiftedPair point;
    /// For the lower-bound row: its bound and the largest value reachable
    /// under the upper-bound rows (NaN when there is no lower-bound row or
    /// when the scaled identity already satisfies it).
    double required = std::numeric_limits<double>::quiet_NaN();
    double best_value = std::numeric_limits<double>::quiet_NaN();
};

/// Finds F_I, F_E > 0 with every trace row strictly satisfied. Supports the
/// subproblem family: upper-bound rows that a scaled identity can meet plus
/// at most one lower-bound row.
Phase1Result phase1_feasible(const SubproblemData& sub, const SolverOptions& options = {});

struct LinearMaxResult {
    SolveStatus status = SolveStatus::numerical_failure;
    LiftedPair solution;
    double value = std::numeric_limits<double>::quiet_NaN();
};

/// maximize <target, F> subject to the `limits` rows and F >= 0, starting
/// from a scaled identity. The limits must all be upper bounds.
LinearMaxResult maximize_linear(const TraceConstraint& target,
                                const std::vector<TraceConstraint>& limits, int dim_I, int dim_E,
                                const SolverOptions& options = {});

}  // namespace trisbf
