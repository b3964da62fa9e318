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

#include "trisbf/convex_solver.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <Eigen/SVD>

namespace trisbf {

const char* to_string(SolveStatus s) {
    switch (s) {
        case SolveStatus::optimal: return "optimal";
        case SolveStatus::max_iters: return "max-iters";
        case SolveStatus::numerical_failure: return "numerical-failure";
        case SolveStatus::infeasible: return "infeasible";
    }
    return "unknown";
}

const char* to_string(Phase1Status s) {
    switch (s) {
        case Phase1Status::feasible: return "feasible";
        case Phase1Status::infeasible: return "infeasible";
        case Phase1Status::no_strict_interior: return "no-strict-interior";
    }
    return "unknown";
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Inequality row in the form  beta - <A, F> > 0.
struct Row {
    LiftedPair A;
    double beta = 0.0;
};

struct LogRow {
    LiftedPair C;
    double constant = 0.0;
};

// maximize  weight * sum_j ln(c_j + <C_j, F>) - <L, F>   s.t. rows, F > 0
struct BarrierProblem {
    std::vector<LogRow> logs;
    double weight = 1.0;
    LiftedPair L;
    std::vector<Row> rows;
    int dim_I = 0;
    int dim_E = 0;

    double degree() const { return static_cast<double>(rows.size() + dim_I + dim_E); }
};

Row normalize(const TraceConstraint& c) {
    if (c.sense == Sense::less_equal) return {{c.A_I, c.A_E}, c.bound};
    return {{-c.A_I, -c.A_E}, -c.bound};
}

// Evaluation of the barrier function at a point.
struct Eval {
    bool interior = false;
    double phi = kInf;
    double f = 0.0;  // weight * sum ln(u) - <L, F>
    std::vector<double> u;
    std::vector<double> s;
    Eigen::LLT<CMat> chol_I;
    Eigen::LLT<CMat> chol_E;
};

double log_det(const Eigen::LLT<CMat>& llt) {
    return 2.0 * llt.matrixLLT().diagonal().real().array().log().sum();
}

Eval evaluate(const BarrierProblem& bp, const LiftedPair& F, double mu) {
    Eval e;
    e.chol_I.compute(F.F_I);
    e.chol_E.compute(F.F_E);
    if (e.chol_I.info() != Eigen::Success || e.chol_E.info() != Eigen::Success) return e;
    double f = -trace_inner(bp.L, F);
    double barrier = 0.0;
    for (const LogRow& lr : bp.logs) {
        const double u = lr.constant + trace_inner(lr.C, F);
        if (!(u > 0.0)) return e;
        e.u.push_back(u);
        f += bp.weight * std::log(u);
    }
    for (const Row& r : bp.rows) {
        const double s = r.beta - trace_inner(r.A, F);
        if (!(s > 0.0)) return e;
        e.s.push_back(s);
        barrier += std::log(s);
    }
    const double ld_I = log_det(e.chol_I);
    const double ld_E = log_det(e.chol_E);
    if (!std::isfinite(ld_I) || !std::isfinite(ld_E)) return e;
    barrier += ld_I + ld_E;
    e.f = f;
    e.phi = -f - mu * barrier;
    e.interior = std::isfinite(e.phi);
    return e;
}

CMat inverse(const Eigen::LLT<CMat>& llt, Eigen::Index n) {
    return llt.solve(CMat::Identity(n, n));
}

class BarrierSolver {
public:
    BarrierSolver(const BarrierProblem& bp, const SolverOptions& opt, const TraceSink& sink,
                  std::function<double(const LiftedPair&)> report_objective)
        : bp_(bp), opt_(opt), sink_(sink), report_(std::move(report_objective)) {
        for (const LogRow& lr : bp_.logs) factors_.push_back(factor(lr.C));
        for (const Row& r : bp_.rows) factors_.push_back(factor(r.A));
    }

    struct Outcome {
        SolveStatus status = SolveStatus::numerical_failure;
        LiftedPair point;
        int iterations = 0;
        double mu = 0.0;
        double kkt = 0.0;
        std::vector<double> stage_objectives;
        std::string diagnostics;
    };

    Outcome run(LiftedPair start) {
        Outcome out;
        F_ = std::move(start);
        mu_ = opt_.initial_barrier;
        while (true) {
            const SolveStatus st = center(opt_.centering_tol, opt_.max_newton_per_stage, out);
            if (st != SolveStatus::optimal) {
                out.status = st;
                break;
            }
            out.stage_objectives.push_back(report_(F_));
            if (mu_ * bp_.degree() < opt_.gap_target) {
                polish();
                out.status = SolveStatus::optimal;
                break;
            }
            mu_ *= opt_.barrier_decay;
        }
        out.point = F_;
        out.iterations = iterations_;
        out.mu = mu_;
        out.kkt = gradient_norm();
        return out;
    }

private:
    struct Direction {
        LiftedPair d;
        LiftedPair scaled;  // L^-1 d L^-H per block, F = L L^H
        double lambda2 = 0.0;
    };

    // A Hermitian coefficient block written as B diag(sign) B^H, so that the
    // congruence L^H A L costs O(n^2 r) for rank r instead of O(n^3).
    struct LowRank {
        CMat B_I, B_E;
        RVec sign_I, sign_E;
    };

    static void factor_block(const CMat& A, CMat& B, RVec& sign) {
        Eigen::SelfAdjointEigenSolver<CMat> es(A);
        const RVec& w = es.eigenvalues();
        const double cut = 1e-14 * w.cwiseAbs().maxCoeff();
        std::vector<Eigen::Index> keep;
        for (Eigen::Index i = 0; i < w.size(); ++i)
            if (std::abs(w(i)) > cut) keep.push_back(i);
        B.resize(A.rows(), static_cast<Eigen::Index>(keep.size()));
        sign.resize(static_cast<Eigen::Index>(keep.size()));
        for (std::size_t j = 0; j < keep.size(); ++j) {
            B.col(j) = std::sqrt(std::abs(w(keep[j]))) * es.eigenvectors().col(keep[j]);
            sign(j) = w(keep[j]) > 0.0 ? 1.0 : -1.0;
        }
    }

    static LowRank factor(const LiftedPair& A) {
        LowRank f;
        factor_block(A.F_I, f.B_I, f.sign_I);
        factor_block(A.F_E, f.B_E, f.sign_E);
        return f;
    }

    static CMat congruence_block(const CMat& L, const CMat& B, const RVec& sign) {
        if (B.cols() == 0) return CMat::Zero(L.rows(), L.rows());
        const CMat X = L.adjoint() * B;
        return X * sign.asDiagonal() * X.adjoint();
    }

    static void flatten_into(const LiftedPair& X, double scale, Eigen::Ref<RVec> out) {
        const Eigen::Index a = 2 * X.F_I.size(), b = 2 * X.F_E.size();
        out.head(a) = scale * Eigen::Map<const RVec>(reinterpret_cast<const double*>(X.F_I.data()), a);
        out.tail(b) = scale * Eigen::Map<const RVec>(reinterpret_cast<const double*>(X.F_E.data()), b);
    }

    static LiftedPair unflatten(const RVec& v, Eigen::Index nI, Eigen::Index nE) {
        LiftedPair X{CMat(nI, nI), CMat(nE, nE)};
        Eigen::Map<RVec>(reinterpret_cast<double*>(X.F_I.data()), 2 * nI * nI) = v.head(2 * nI * nI);
        Eigen::Map<RVec>(reinterpret_cast<double*>(X.F_E.data()), 2 * nE * nE) = v.tail(2 * nE * nE);
        return X;
    }

    LiftedPair gradient(const Eval& e, const LiftedPair& W) const {
        LiftedPair g = smooth_gradient(e);
        g += (-mu_) * W;
        return g;
    }

    // Gradient without the log-det part: L - sum w/u C + sum mu/s A.
    LiftedPair smooth_gradient(const Eval& e) const {
        LiftedPair g = bp_.L;
        for (std::size_t j = 0; j < bp_.logs.size(); ++j)
            g += (-bp_.weight / e.u[j]) * bp_.logs[j].C;
        for (std::size_t i = 0; i < bp_.rows.size(); ++i) g += (mu_ / e.s[i]) * bp_.rows[i].A;
        return g;
    }

    // Newton step in the coordinates x = L^-1 d L^-H, where the log-det
    // Hessian becomes mu * I and the remaining Hessian is V V^T with columns
    // v_a = L^H V_a L. An orthogonal factorization V = Q T lets the stiff
    // directions of nearly active rows be solved directly rather than by
    // cancellation: H^-1 g = Q (mu + T T^T)^-1 Q^T g + (I - Q Q^T) g / mu.
    Direction newton_direction(const Eval& e) {
        const CMat L_I = e.chol_I.matrixL();
        const CMat L_E = e.chol_E.matrixL();
        const Eigen::Index nI = L_I.rows(), nE = L_E.rows();
        const Eigen::Index n = 2 * (nI * nI + nE * nE);

        LiftedPair gs = smooth_gradient(e);
        gs.F_I = L_I.adjoint() * gs.F_I * L_I;
        gs.F_E = L_E.adjoint() * gs.F_E * L_E;
        gs.F_I -= mu_ * CMat::Identity(nI, nI);
        gs.F_E -= mu_ * CMat::Identity(nE, nE);
        RVec g(n);
        flatten_into(gs, 1.0, g);

        const std::size_t nlog = bp_.logs.size();
        const Eigen::Index m = static_cast<Eigen::Index>(factors_.size());
        RMat V(n, m);
        for (Eigen::Index a = 0; a < m; ++a) {
            const std::size_t k = static_cast<std::size_t>(a);
            const double w = k < nlog ? std::sqrt(bp_.weight) / e.u[k]
                                      : std::sqrt(mu_) / e.s[k - nlog];
            const LowRank& f = factors_[k];
            const LiftedPair va{congruence_block(L_I, f.B_I, f.sign_I),
                                congruence_block(L_E, f.B_E, f.sign_E)};
            flatten_into(va, w, V.col(a));
        }

        RVec x = g / mu_;
        if (m > 0) {
            const Eigen::ColPivHouseholderQR<RMat> qr(V);
            const Eigen::Index r = qr.rank();
            if (r > 0) {
                RVec y = qr.householderQ().transpose() * g;
                const RMat T = qr.matrixR().topRows(r).triangularView<Eigen::Upper>();
                const Eigen::JacobiSVD<RMat> svd(T, Eigen::ComputeFullU);
                const RVec& sig = svd.singularValues();
                RVec inv(r);
                for (Eigen::Index i = 0; i < r; ++i)
                    inv(i) = 1.0 / (mu_ + (i < sig.size() ? sig(i) * sig(i) : 0.0));
                const RVec c = y.head(r);
                y.head(r) = svd.matrixU() * (inv.asDiagonal() * (svd.matrixU().transpose() * c));
                y.tail(n - r) /= mu_;
                x = qr.householderQ() * y;
            }
        }

        Direction dir;
        dir.lambda2 = g.dot(x);
        dir.scaled = unflatten(-x, nI, nE);
        dir.scaled.F_I = hermitian_part(dir.scaled.F_I);
        dir.scaled.F_E = hermitian_part(dir.scaled.F_E);
        dir.d = {hermitian_part(L_I * dir.scaled.F_I * L_I.adjoint()),
                 hermitian_part(L_E * dir.scaled.F_E * L_E.adjoint())};
        return dir;
    }

    double step_limit(const Eval& e, const Direction& dir) const {
        auto psd_limit = [](const CMat& X) {
            Eigen::SelfAdjointEigenSolver<CMat> es(X, Eigen::EigenvaluesOnly);
            const double lo = es.eigenvalues()(0);
            return lo < 0.0 ? -1.0 / lo : kInf;
        };
        double alpha = std::min(psd_limit(dir.scaled.F_I), psd_limit(dir.scaled.F_E));
        const LiftedPair& d = dir.d;
        for (std::size_t j = 0; j < bp_.logs.size(); ++j) {
            const double du = trace_inner(bp_.logs[j].C, d);
            if (du < 0.0) alpha = std::min(alpha, -e.u[j] / du);
        }
        for (std::size_t i = 0; i < bp_.rows.size(); ++i) {
            const double ds = -trace_inner(bp_.rows[i].A, d);
            if (ds < 0.0) alpha = std::min(alpha, -e.s[i] / ds);
        }
        return alpha;
    }

    // Newton's method on the barrier function at the current weight.
    SolveStatus center(double tol, int max_steps, Outcome& out) {
        Eval e = evaluate(bp_, F_, mu_);
        if (!e.interior) {
            out.diagnostics = "iterate left the interior";
            return SolveStatus::numerical_failure;
        }
        for (int step = 0; step < max_steps; ++step) {
            if (iterations_ >= opt_.max_total_newton) {
                out.diagnostics = "Newton iteration budget exhausted";
                return SolveStatus::max_iters;
            }
            const Direction dir = newton_direction(e);
            if (!std::isfinite(dir.lambda2)) {
                out.diagnostics = "non-finite Newton decrement";
                return SolveStatus::numerical_failure;
            }
            const double dec = dir.lambda2 / mu_;  // self-concordant scaling
            // Below the round-off floor a Newton step cannot change the
            // barrier function measurably, whatever the weight.
            const double floor = 1e-13 * (1.0 + std::abs(e.phi));
            if (dec / 2.0 <= tol || dir.lambda2 <= floor) return SolveStatus::optimal;

            double alpha = std::min(1.0, opt_.fraction_to_boundary * step_limit(e, dir));
            Eval next;
            bool accepted = false;
            for (int bt = 0; bt < 60; ++bt) {
                next = evaluate(bp_, F_ + alpha * dir.d, mu_);
                if (next.interior &&
                    (next.phi <= e.phi - 0.25 * alpha * dir.lambda2 ||
                     (dir.lambda2 <= 1e3 * floor && next.phi <= e.phi + 1e-15 * std::abs(e.phi)))) {
                    accepted = true;
                    break;
                }
                alpha *= 0.5;
            }
            ++iterations_;
            if (!accepted) {
                // No measurable decrease left: the decrement is at round-off level.
                if (dir.lambda2 <= 1e3 * floor) return SolveStatus::optimal;
                std::ostringstream msg;
                msg << "line search failed (decrement " << dec << ", barrier " << mu_ << ")";
                out.diagnostics = msg.str();
                return SolveStatus::numerical_failure;
            }
            F_ = F_ + alpha * dir.d;
            F_.F_I = hermitian_part(F_.F_I);
            F_.F_E = hermitian_part(F_.F_E);
            e = evaluate(bp_, F_, mu_);
            if (!e.interior) {
                out.diagnostics = "iterate left the interior after symmetrization";
                return SolveStatus::numerical_failure;
            }
            if (sink_) sink_({iterations_, mu_, report_(F_), alpha, dec});
        }
        out.diagnostics = "centering did not converge at barrier " + std::to_string(mu_);
        return SolveStatus::max_iters;
    }

    // Extra Newton steps at the final weight. The barrier value stops
    // registering progress long before the unscaled gradient is small, so
    // steps are judged by the gradient norm instead.
    void polish() {
        double best = gradient_norm();
        for (int step = 0; step < opt_.polish_steps; ++step) {
            const Eval e = evaluate(bp_, F_, mu_);
            const Direction dir = newton_direction(e);
            if (!std::isfinite(dir.lambda2)) return;
            const double alpha = std::min(1.0, opt_.fraction_to_boundary * step_limit(e, dir));
            LiftedPair trial = F_ + alpha * dir.d;
            trial.F_I = hermitian_part(trial.F_I);
            trial.F_E = hermitian_part(trial.F_E);
            if (!evaluate(bp_, trial, mu_).interior) return;
            std::swap(F_, trial);
            const double g = gradient_norm();
            if (!(g < best)) {
                std::swap(F_, trial);
                return;
            }
            best = g;
            ++iterations_;
            if (sink_) sink_({iterations_, mu_, report_(F_), alpha, dir.lambda2 / mu_});
        }
    }

    double gradient_norm() {
        const Eval e = evaluate(bp_, F_, mu_);
        if (!e.interior) return kInf;
        const LiftedPair W{inverse(e.chol_I, F_.F_I.rows()), inverse(e.chol_E, F_.F_E.rows())};
        const LiftedPair g = gradient(e, W);
        return std::sqrt(trace_inner(g, g));
    }

    const BarrierProblem& bp_;
    SolverOptions opt_;
    TraceSink sink_;
    std::vector<LowRank> factors_;  // log coefficients first, then rows
    std::function<double(const LiftedPair&)> report_;
    LiftedPair F_;
    double mu_ = 1.0;
    int iterations_ = 0;
};

bool strictly_interior(const BarrierProblem& bp, const LiftedPair& F) {
    if (F.F_I.rows() != bp.dim_I || F.F_E.rows() != bp.dim_E) return false;
    return evaluate(bp, F, 1.0).interior;
}

// Scaled identity meeting every upper-bound row with room to spare.
LiftedPair scaled_identity(const std::vector<Row>& rows, int dim_I, int dim_E) {
    double c = 1.0;
    bool limited = false;
    for (const Row& r : rows) {
        const double tr = r.A.F_I.trace().real() + r.A.F_E.trace().real();
        if (tr > 0.0) {
            if (!(r.beta > 0.0))
                throw std::invalid_argument("phase-I: an upper-bound row excludes every PSD point");
            c = limited ? std::min(c, 0.5 * r.beta / tr) : 0.5 * r.beta / tr;
            limited = true;
        } else if (!(r.beta > 0.0) && !(tr < 0.0)) {
            throw std::invalid_argument("phase-I: a scaled identity cannot satisfy every limit");
        }
    }
    LiftedPair F{c * CMat::Identity(dim_I, dim_I), c * CMat::Identity(dim_E, dim_E)};
    for (const Row& r : rows)
        if (!(r.beta - trace_inner(r.A, F) > 0.0))
            throw std::invalid_argument("phase-I: a scaled identity cannot satisfy every limit");
    return F;
}

struct SplitRows {
    std::vector<Row> upper;           // rows a scaled identity must satisfy
    std::vector<TraceConstraint> lower;
    bool trivially_infeasible = false;
};

// Drops rows with all-zero coefficients (always satisfied or never).
SplitRows split_rows(const std::vector<TraceConstraint>& constraints) {
    SplitRows out;
    for (const TraceConstraint& c : constraints) {
        const bool zero = c.A_I.norm() == 0.0 && c.A_E.norm() == 0.0;
        if (zero) {
            const bool ok = c.sense == Sense::less_equal ? c.bound > 0.0 : c.bound < 0.0;
            if (!ok) out.trivially_infeasible = true;
            continue;
        }
        if (c.sense == Sense::less_equal)
            out.upper.push_back(normalize(c));
        else
            out.lower.push_back(c);
    }
    return out;
}

LinearMaxResult maximize_rows(const TraceConstraint& target, const std::vector<Row>& limits,
                              int dim_I, int dim_E, const SolverOptions& options) {
    LinearMaxResult res;
    const LiftedPair start = scaled_identity(limits, dim_I, dim_E);
    const double v0 = target.evaluate(start);
    BarrierProblem bp;
    bp.dim_I = dim_I;
    bp.dim_E = dim_E;
    bp.rows = limits;
    // Scale the objective so it is 1 at the start; the barrier schedule is absolute.
    const double scale = v0 > 0.0 ? v0 : std::max(1e-300, std::sqrt(target.A_I.squaredNorm() +
                                                                     target.A_E.squaredNorm()));
    bp.L = {-target.A_I / scale, -target.A_E / scale};
    BarrierSolver solver(bp, options, {}, [&](const LiftedPair& F) { return target.evaluate(F); });
    const auto out = solver.run(start);
    res.status = out.status;
    res.solution = out.point;
    res.value = target.evaluate(out.point);
    return res;
}

}  // namespace

LinearMaxResult maximize_linear(const TraceConstraint& target,
                                const std::vector<TraceConstraint>& limits, int dim_I, int dim_E,
                                const SolverOptions& options) {
    const SplitRows rows = split_rows(limits);
    if (!rows.lower.empty())
        throw std::invalid_argument("maximize_linear: limits must be upper bounds");
    if (rows.trivially_infeasible) return {SolveStatus::infeasible, {}, std::nan("")};
    return maximize_rows(target, rows.upper, dim_I, dim_E, options);
}

Phase1Result phase1_feasible(const SubproblemData& sub, const SolverOptions& options) {
    Phase1Result res;
    const SplitRows rows = split_rows(sub.constraints);
    if (rows.trivially_infeasible) return res;
    if (rows.lower.size() > 1)
        throw std::invalid_argument("phase-I: at most one lower-bound row is supported");

    const LiftedPair start = scaled_identity(rows.upper, sub.dim_I, sub.dim_E);
    if (rows.lower.empty() || rows.lower.front().slack(start) > 0.0) {
        res.status = Phase1Status::feasible;
        res.point = start;
        return res;
    }

    const TraceConstraint& target = rows.lower.front();
    const LinearMaxResult best = maximize_rows(target, rows.upper, sub.dim_I, sub.dim_E, options);
    res.required = target.bound;
    res.best_value = best.value;
    if (best.status != SolveStatus::optimal) return res;

    const double margin = (best.value - target.bound) /
                          std::max({std::abs(target.bound), std::abs(best.value), 1e-300});
    if (margin > 1e-6) {
        // Both endpoints are strictly interior, so is every convex combination.
        const double v0 = target.evaluate(start);
        const double goal = 0.5 * (target.bound + best.value);
        const double theta = std::clamp((goal - v0) / (best.value - v0), 0.0, 1.0);
        res.point = (1.0 - theta) * start + theta * best.solution;
        res.status = Phase1Status::feasible;
    } else if (margin >= -1e-6) {
        res.status = Phase1Status::no_strict_interior;
    }
    return res;
}

SolveReport solve(const SubproblemData& sub, const std::optional<LiftedPair>& warm_start,
                  const SolverOptions& options, const TraceSink& sink) {
    sub.validate();
    SolveReport report;

    const SplitRows split = split_rows(sub.constraints);
    if (split.trivially_infeasible) {
        report.status = SolveStatus::infeasible;
        report.diagnostics = "a constraint with zero coefficients cannot be met";
        return report;
    }

    BarrierProblem bp;
    bp.dim_I = sub.dim_I;
    bp.dim_E = sub.dim_E;
    bp.weight = log_factor(sub.log_base);
    bp.L = {sub.linear_I, sub.linear_E};
    for (const LogTerm& t : sub.log_terms) bp.logs.push_back({{t.coeff_I, t.coeff_E}, t.constant});
    bp.rows = split.upper;
    for (const TraceConstraint& c : split.lower) bp.rows.push_back(normalize(c));

    LiftedPair start;
    if (warm_start && strictly_interior(bp, *warm_start)) {
        start = *warm_start;
    } else {
        const Phase1Result p1 = phase1_feasible(sub, options);
        if (p1.status != Phase1Status::feasible) {
            report.status = SolveStatus::infeasible;
            report.diagnostics = std::string("phase-I: ") + to_string(p1.status);
            return report;
        }
        start = p1.point;
    }

    BarrierSolver solver(bp, options, sink, [&](const LiftedPair& F) { return sub.objective(F); });
    auto out = solver.run(std::move(start));

    report.solution = std::move(out.point);
    report.iterations = out.iterations;
    report.final_barrier = out.mu;
    report.kkt_residual = out.kkt;
    report.stage_objectives = std::move(out.stage_objectives);
    report.diagnostics = out.diagnostics;
    report.status = out.status;
    report.objective = sub.objective(report.solution);
    for (const TraceConstraint& c : sub.constraints)
        report.max_constraint_violation = std::max(
            report.max_constraint_violation, std::max(0.0, -c.slack(report.solution)) /
                                                 (1.0 + std::abs(c.bound)));
    if (report.status == SolveStatus::optimal) {
        try {
            require_psd(report.solution.F_I, "solution F_I");
            require_psd(report.solution.F_E, "solution F_E");
        } catch (const NumericalPsdError& err) {
            report.status = SolveStatus::numerical_failure;
            report.diagnostics = err.what();
        }
    }
    return report;
}

}  // namespace trisbf
