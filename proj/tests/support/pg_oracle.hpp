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

// First-order reference solver for the surrogate problem family. It shares
// no code with the interior-point solver: objective and gradient are written
// out again here. The trace rows are priced by an augmented Lagrangian and
// each inner problem is solved by projected gradient onto the PSD cone.

#include "trisbf/subproblem.hpp"

namespace trisbf::testing {

struct PgOptions {
    int max_outer = 60;
    int max_inner = 20000;
    double stationarity_tol = 1e-10;  ///< on the gradient-mapping norm
    double feasibility_tol = 1e-12;   ///< row violation / (1 + |bound|)
};

struct PgResult {
    LiftedPair solution;
    double objective = 0.0;
    int iterations = 0;  ///< inner gradient steps, summed
    double max_violation = 0.0;  ///< violation / (1 + |bound|)
    double min_eigenvalue = 0.0;
    bool converged = false;
};

double pg_objective(const SubproblemData& sub, const LiftedPair& F);

/// Augmented Lagrangian outer loop; inner maximization by accelerated
/// projected gradient with function-value restarts.
PgResult pg_solve(const SubproblemData& sub, const PgOptions& opt = {});

}  // namespace trisbf::testing
