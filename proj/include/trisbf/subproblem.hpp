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

#include "json.hpp"

#include "trisbf/metrics.hpp"

namespace trisbf {

/// log(constant + <coeff_I, F_I> + <coeff_E, F_E>) in the subproblem's base.
struct LogTerm {
    double constant = 0.0;
    CMat coeff_I;
    CMat coeff_E;
};

enum class Sense { less_equal, greater_equal };

/// <A_I, F_I> + <A_E, F_E>  (<= or >=)  bound
struct TraceConstraint {
    CMat A_I;
    CMat A_E;
    double bound = 0.0;
    Sense sense = Sense::less_equal;

    double evaluate(const LiftedPair& lift) const {
        return trace_inner(A_I, lift.F_I) + trace_inner(A_E, lift.F_E);
    }
    /// Positive when strictly satisfied.
    double slack(const LiftedPair& lift) const {
        const double v = evaluate(lift);
        return sense == Sense::less_equal ? bound - v : v - bound;
    }
};

/// One convex surrogate problem:
///
///   maximize  sum_j log(c_j + <C_j, F>) - <linear, F> + constant_offset
///   s.t.      trace constraints,  F_I >= 0,  F_E >= 0.
struct SubproblemData {
    std::vector<LogTerm> log_terms;
    CMat linear_I;
    CMat linear_E;
    double constant_offset = 0.0;
    std::vector<TraceConstraint> constraints;
    int dim_I = 0;
    int dim_E = 0;
    double rho = 1.0;
    LogBase log_base = LogBase::bits;

    /// Throws std::invalid_argument when a shape or sign invariant fails.
    void validate() const;

    /// Objective value; throws NumericalPsdError if a log argument is not positive.
    double objective(const LiftedPair& lift) const;
};

/// Raised when the expansion point violates the problem constraints, so the
/// surrogate built around it cannot be trusted.
class StaleIterateError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Constraint rows shared by every subproblem of a scenario: N per-element
/// power limits followed by the total-harvest requirement.
std::vector<TraceConstraint> feasibility_constraints(const QuadFormCache& qf,
                                                     const SelectionOperators& ops,
                                                     const SystemConfig& cfg);

/// Largest relative violation of the constraint rows at `lift`, each row's
/// shortfall divided by max(|bound|, |row value|); zero when feasible.
double max_relative_violation(const std::vector<TraceConstraint>& rows, const LiftedPair& lift);

/// Assembles the surrogate around lift0 with penalty factor rho. Throws
/// StaleIterateError if lift0 is infeasible beyond 1e-6 relative.
SubproblemData build_subproblem(const LiftedPair& lift0, const QuadFormCache& qf,
                                const SelectionOperators& ops, const SystemConfig& cfg, double rho);

/// Rate surrogate minus the weighted penalty surrogate, recomputed from the
/// metric functions rather than from the assembled data.
double surrogate_objective(const LiftedPair& lift, const LiftedPair& lift0,
                           const QuadFormCache& qf, const SystemConfig& cfg, double rho);

/// Sum-rate minus (1/(2 rho)) times the true rank-one residuals.
double penalized_objective(const LiftedPair& lift, const QuadFormCache& qf,
                           const SystemConfig& cfg, double rho);

/// Text dump: matrices as row-major arrays of [re, im] pairs.
nlohmann::json to_json(const SubproblemData& sub);
SubproblemData subproblem_from_json(const nlohmann::json& j);

void write_subproblem(std::ostream& os, const SubproblemData& sub);

}  // namespace trisbf
