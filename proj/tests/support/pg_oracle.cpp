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

#include "pg_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Eigenvalues>

namespace trisbf::testing {

namespace {

double inner(const CMat& A, const CMat& B) { return (A.adjoint() * B).trace().real(); }

double inner(const LiftedPair& a, const LiftedPair& b) {
    return inner(a.F_I, b.F_I) + inner(a.F_E, b.F_E);
}

double norm2(const LiftedPair& a) { return a.F_I.squaredNorm() + a.F_E.squaredNorm(); }

CMat psd_part(const CMat& A) {
    if (A.rows() == 0) return A;
    Eigen::SelfAdjointEigenSolver<CMat> es(0.5 * (A + A.adjoint()));
    const RVec w = es.eigenvalues().cwiseMax(0.0);
    return es.eigenvectors() * w.asDiagonal() * es.eigenvectors().adjoint();
}

double min_eig(const CMat& A) {
    if (A.rows() == 0) return 0.0;
    return Eigen::SelfAdjointEigenSolver<CMat>(A, Eigen::EigenvaluesOnly).eigenvalues()(0);
}

double log_base(LogBase b, double x) { return b == LogBase::bits ? std::log2(x) : std::log(x); }

/// +1 for an upper-bound row, -1 for a lower-bound row: every row becomes
/// sign * <A, F> <= sign * bound.
double row_sign(const TraceConstraint& c) { return c.sense == Sense::less_equal ? 1.0 : -1.0; }

double row_value(const TraceConstraint& c, const LiftedPair& F) {
    return inner(c.A_I, F.F_I) + inner(c.A_E, F.F_E);
}

double max_violation(const SubproblemData& sub, const LiftedPair& F) {
    double worst = 0.0;
    for (const TraceConstraint& c : sub.constraints) {
        const double excess = row_sign(c) * (row_value(c, F) - c.bound);
        worst = std::max(worst, excess / (1.0 + std::abs(c.bound)));
    }
    return worst;
}

LiftedPair gradient(const SubproblemData& sub, const LiftedPair& F) {
    const double unit = sub.log_base == LogBase::bits ? 1.0 / std::log(2.0) : 1.0;
    LiftedPair g{-sub.linear_I, -sub.linear_E};
    for (const LogTerm& t : sub.log_terms) {
        const double arg = t.constant + inner(t.coeff_I, F.F_I) + inner(t.coeff_E, F.F_E);
        g.F_I += (unit / arg) * t.coeff_I;
        g.F_E += (unit / arg) * t.coeff_E;
    }
    return g;
}

}  // namespace

double pg_objective(const SubproblemData& sub, const LiftedPair& F) {
    double v = sub.constant_offset - inner(sub.linear_I, F.F_I) - inner(sub.linear_E, F.F_E);
    for (const LogTerm& t : sub.log_terms) {
        const double arg = t.constant + inner(t.coeff_I, F.F_I) + inner(t.coeff_E, F.F_E);
        if (!(arg > 0.0)) return -std::numeric_limits<double>::infinity();
        v += log_base(sub.log_base, arg);
    }
    return v;
}

namespace {

/// Augmented Lagrangian of the maximization for fixed multipliers y and
/// weight mu, over the PSD cone.
struct Augmented {
    const SubproblemData& sub;
    const std::vector<double>& y;
    double mu;

    double excess(const LiftedPair& F, std::size_t i) const {
        const TraceConstraint& c = sub.constraints[i];
        return row_sign(c) * (row_value(c, F) - c.bound);
    }

    double value(const LiftedPair& F) const {
        double v = pg_objective(sub, F);
        for (std::size_t i = 0; i < y.size(); ++i) {
            const double p = std::max(0.0, y[i] + mu * excess(F, i));
            v -= (p * p - y[i] * y[i]) / (2.0 * mu);
        }
        return v;
    }

    LiftedPair grad(const LiftedPair& F) const {
        LiftedPair g = gradient(sub, F);
        for (std::size_t i = 0; i < y.size(); ++i) {
            const double p = std::max(0.0, y[i] + mu * excess(F, i));
            const double w = p * row_sign(sub.constraints[i]);
            g.F_I -= w * sub.constraints[i].A_I;
            g.F_E -= w * sub.constraints[i].A_E;
        }
        return g;
    }
};

LiftedPair project_psd(const LiftedPair& F) { return {psd_part(F.F_I), psd_part(F.F_E)}; }

/// FISTA with restarts on one augmented problem, from x. Returns the final
/// gradient-mapping norm; `step` and `steps` carry over between calls.
double maximize_inner(const Augmented& aug, LiftedPair& x, double& step, int& steps,
                      double tol, int max_inner) {
    double fx = aug.value(x);
    LiftedPair x_prev = x;
    double momentum = 1.0;
    double mapping = std::numeric_limits<double>::infinity();
    for (int it = 0; it < max_inner; ++it) {
        ++steps;
        const double m_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * momentum * momentum));
        LiftedPair y = x + ((momentum - 1.0) / m_next) * (x - x_prev);
        double fy = aug.value(y);
        if (!std::isfinite(fy)) {
            y = x;
            fy = fx;
        }
        const LiftedPair g = aug.grad(y);

        // Backtracking on the quadratic lower model of the concave objective.
        step *= 1.25;
        LiftedPair x_new;
        double f_new = 0.0;
        for (int bt = 0; bt < 200; ++bt) {
            x_new = project_psd(y + step * g);
            f_new = aug.value(x_new);
            const LiftedPair d = x_new - y;
            if (std::isfinite(f_new) &&
                f_new >= fy + inner(g, d) - norm2(d) / (2.0 * step) - 1e-15 * std::abs(fy))
                break;
            step *= 0.5;
        }

        mapping = std::sqrt(norm2(x_new - y)) / step;
        if (f_new < fx && momentum > 1.0) {
            momentum = 1.0;
            x_prev = x;
            continue;
        }
        x_prev = x;
        x = std::move(x_new);
        fx = f_new;
        momentum = m_next;
        if (mapping <= tol * (1.0 + std::sqrt(norm2(g)))) break;
    }
    return mapping;
}

}  // namespace

PgResult pg_solve(const SubproblemData& sub, const PgOptions& opt) {
    const std::size_t m = sub.constraints.size();
    double row_scale = 0.0;
    for (const TraceConstraint& c : sub.constraints)
        row_scale = std::max(row_scale, c.A_I.squaredNorm() + c.A_E.squaredNorm());
    double mu = 10.0 / std::max(row_scale, 1e-300);

    const double scale = sub.dim_I + sub.dim_E;
    LiftedPair x{CMat::Identity(sub.dim_I, sub.dim_I) / scale,
                 CMat::Identity(sub.dim_E, sub.dim_E) / scale};
    std::vector<double> y(m, 0.0);
    double step = 1.0 / mu;
    double inner_tol = 1e-4;
    double last_violation = std::numeric_limits<double>::infinity();

    PgResult out;
    for (int outer = 0; outer < opt.max_outer; ++outer) {
        const Augmented aug{sub, y, mu};
        const double mapping =
            maximize_inner(aug, x, step, out.iterations, inner_tol, opt.max_inner);
        const bool inner_done = inner_tol <= opt.stationarity_tol &&
                                mapping <= opt.stationarity_tol * 10.0 * (1.0 + mu);

        double violation = 0.0, multiplier_change = 0.0;
        std::vector<double> y_next(m);
        for (std::size_t i = 0; i < m; ++i) {
            const double e = aug.excess(x, i);
            const double s = 1.0 + std::abs(sub.constraints[i].bound);
            violation = std::max(violation, e / s);
            y_next[i] = std::max(0.0, y[i] + mu * e);
            multiplier_change = std::max(multiplier_change, std::abs(y_next[i] - y[i]) / mu / s);
        }
        y = std::move(y_next);
        if (inner_done && violation <= opt.feasibility_tol &&
            multiplier_change <= opt.feasibility_tol) {
            out.converged = true;
            break;
        }
        if (violation > 0.25 * last_violation) {
            mu *= 10.0;
            step /= 10.0;
        }
        last_violation = violation;
        inner_tol = std::max(opt.stationarity_tol, 0.1 * inner_tol);
    }

    out.solution = x;
    out.objective = pg_objective(sub, x);
    out.max_violation = max_violation(sub, x);
    out.min_eigenvalue = std::min(min_eig(x.F_I), min_eig(x.F_E));
    return out;
}

}  // namespace trisbf::testing
