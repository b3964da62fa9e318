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

#include "trisbf/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>

namespace trisbf {

const char* to_string(RunStatus s) {
    switch (s) {
        case RunStatus::converged: return "converged";
        case RunStatus::max_iters: return "max-iters";
        case RunStatus::infeasible: return "infeasible";
        case RunStatus::numerical_failure: return "numerical-failure";
    }
    return "unknown";
}

PenaltyResiduals penalty_residuals(const LiftedPair& lift) {
    return {rank_one_residual(lift.F_I), rank_one_residual(lift.F_E), lift.F_I.trace().real(),
            lift.F_E.trace().real()};
}

bool residuals_within(const PenaltyResiduals& r, double rel, double abs_floor) {
    return r.I <= rel * std::max(r.trace_I, 0.0) + abs_floor &&
           r.E <= rel * std::max(r.trace_E, 0.0) + abs_floor;
}

double PenaltySchedule::step(double rho, const PenaltyResiduals& r, double abs_floor) const {
    if (!(rho > 0.0)) throw std::invalid_argument("penalty schedule: rho must be positive");
    if (residuals_within(r, residual_target, abs_floor)) return rho;
    return std::max(rho * decay, floor);
}

namespace {

SubproblemData constraint_shell(const SystemConfig& cfg, const QuadFormCache& qf,
                                const SelectionOperators& ops) {
    SubproblemData shell;
    shell.dim_I = cfg.dim_I();
    shell.dim_E = cfg.dim_E();
    shell.linear_I = CMat::Zero(shell.dim_I, shell.dim_I);
    shell.linear_E = CMat::Zero(shell.dim_E, shell.dim_E);
    shell.log_base = cfg.log_base;
    shell.constraints = feasibility_constraints(qf, ops, cfg);
    return shell;
}

/// Unit-modulus conjugate-phase weights for one channel.
CVec phase_matched(const CVec& h) {
    CVec w(h.size());
    for (Eigen::Index n = 0; n < h.size(); ++n) {
        const double m = std::abs(h(n));
        w(n) = m > 0.0 ? h(n) / m : cd(1.0, 0.0);
    }
    return w;
}

double max_element_power(const BeamformerPair& bf, const SelectionOperators& ops) {
    double worst = 0.0;
    for (int n = 0; n < ops.N(); ++n) worst = std::max(worst, per_antenna_power(bf, ops, n));
    return worst;
}

}  // namespace

Initialization initialize(const SystemConfig& cfg, const ChannelSet& ch,
                          const SelectionOperators& ops, const QuadFormCache& qf,
                          const SolverOptions& solver) {
    Initialization init;
    const Phase1Result p1 = phase1_feasible(constraint_shell(cfg, qf, ops), solver);
    if (p1.status != Phase1Status::feasible) return init;
    init.feasible = true;
    init.interior = p1.point;

    const int N = cfg.N;
    BeamformerPair info{CVec::Zero(cfg.dim_I()), CVec::Zero(cfg.dim_E())};
    const double amp = std::sqrt(cfg.P_t / cfg.K);
    for (int k = 0; k < cfg.K; ++k) info.f_I.segment(k * N, N) = amp * phase_matched(ch.h_I[k]);

    // Dominant direction of the summed EH channel covariance; every energy
    // beam carries the same copy so the stacked vector is the top eigenvector
    // of sum_g hbar_E[g] hbar_E[g]^H.
    CMat cov = CMat::Zero(N, N);
    for (const CVec& h : ch.h_E) cov += h * h.adjoint();
    const TopEigen top = top_eigen(cov);
    const double peak = top.vector.cwiseAbs().maxCoeff();
    BeamformerPair energy{CVec::Zero(cfg.dim_I()), CVec::Zero(cfg.dim_E())};
    if (peak > 0.0) {
        const CVec p = top.vector * (std::sqrt(cfg.P_t) / peak);
        energy.f_E = repeat_vector(p, cfg.G) / std::sqrt(static_cast<double>(cfg.G));
    }

    const double h_info = total_harvest(info, ch, ops, cfg);
    const double h_energy = total_harvest(energy, ch, ops, cfg);
    const double goal = 1.1 * cfg.Q_t;
    double share = 0.0;
    if (cfg.Q_t > 0.0 && h_info < goal) {
        if (h_energy >= goal) {
            share = (goal - h_info) / (h_energy - h_info);
        } else if (h_energy > cfg.Q_t) {
            share = 1.0;
        } else {
            // Neither construction meets the requirement; start from the
            // interior point instead.
            init.start = init.interior;
            return init;
        }
    }

    BeamformerPair mix{std::sqrt(1.0 - share) * info.f_I, std::sqrt(share) * energy.f_E};
    init.energy_beam = share > 0.0;
    const double worst = max_element_power(mix, ops);
    const double scale = worst > 0.0 ? std::sqrt(0.999 * cfg.P_t / worst) : 1.0;
    mix.f_I *= scale;
    mix.f_E *= scale;
    init.start = lift(mix);
    if (max_relative_violation(feasibility_constraints(qf, ops, cfg), init.start) > 0.0)
        init.start = init.interior;
    return init;
}

double max_total_harvest(const SystemConfig& cfg, const ChannelSet& ch,
                         const SolverOptions& solver) {
    cfg.validate();
    const SelectionOperators ops(cfg);
    const QuadFormCache qf = build_quadform_cache(ops, ch);
    std::vector<TraceConstraint> rows = feasibility_constraints(qf, ops, cfg);
    const TraceConstraint target = rows.back();
    rows.pop_back();
    const LinearMaxResult best = maximize_linear(target, rows, cfg.dim_I(), cfg.dim_E(), solver);
    if (best.status != SolveStatus::optimal)
        throw std::runtime_error(std::string("harvest maximization failed: ") +
                                 to_string(best.status));
    return best.value;
}

BeamformerPair extract_rank_one(const LiftedPair& lift, double residual_rel, double abs_floor) {
    const PenaltyResiduals r = penalty_residuals(lift);
    if (!residuals_within(r, residual_rel, abs_floor)) {
        std::ostringstream msg;
        msg << "rank one not reached: residual_I=" << r.I << " (trace " << r.trace_I
            << "), residual_E=" << r.E << " (trace " << r.trace_E << ")";
        throw RankOneError(msg.str(), r);
    }
    auto recover = [abs_floor](const CMat& F) -> CVec {
        if (F.trace().real() <= abs_floor) return CVec::Zero(F.rows());
        const TopEigen top = top_eigen(F);
        return std::sqrt(std::max(top.value, 0.0)) * top.vector;
    };
    return {recover(lift.F_I), recover(lift.F_E)};
}

LiftedPair drop_negligible(LiftedPair lift, double floor) {
    if (lift.F_I.trace().real() <= floor) lift.F_I.setZero();
    if (lift.F_E.trace().real() <= floor) lift.F_E.setZero();
    return lift;
}

bool enforce_power_limits(BeamformerPair& beams, const SelectionOperators& ops,
                          const SystemConfig& cfg) {
    const double worst = max_element_power(beams, ops);
    if (worst <= cfg.P_t) return true;
    if (worst > cfg.P_t / 0.999) return false;
    const double s = std::sqrt(cfg.P_t / worst);
    beams.f_I *= s;
    beams.f_E *= s;
    return true;
}

namespace {

IterateState make_state(const LiftedPair& F, const QuadFormCache& qf, const SystemConfig& cfg,
                        int iteration, double rho, double surrogate, int solver_iterations) {
    IterateState s;
    s.lift = F;
    s.sum_rate = sum_rate_lifted(F, qf, cfg);
    s.penalty_residual_I = rank_one_residual(F.F_I);
    s.penalty_residual_E = rank_one_residual(F.F_E);
    s.surrogate_objective = surrogate;
    s.rho = rho;
    s.iteration = iteration;
    s.solver_iterations = solver_iterations;
    return s;
}

}  // namespace

RunResult run(const SystemConfig& cfg, const ChannelSet& ch, const PenaltySchedule& schedule,
              const Tolerances& tol) {
    cfg.validate();
    if (!(schedule.initial_rho > 0.0) || !(schedule.decay > 0.0 && schedule.decay < 1.0) ||
        !(schedule.floor > 0.0))
        throw std::invalid_argument("run: invalid penalty schedule");
    if (tol.max_outer_iters < 1) throw std::invalid_argument("run: max_outer_iters must be >= 1");

    const SelectionOperators ops(cfg);
    const QuadFormCache qf = build_quadform_cache(ops, ch);
    RunResult result;

    const Initialization init = initialize(cfg, ch, ops, qf, tol.solver);
    if (!init.feasible) {
        result.status = RunStatus::infeasible;
        result.diagnostics = "no strictly feasible point: the harvest requirement is out of reach";
        return result;
    }

    const double unit = schedule.power_normalized ? cfg.P_t : 1.0;
    const double abs_floor = tol.negligible_power * cfg.N * cfg.P_t;
    double rho = schedule.initial_rho;
    LiftedPair current = init.start;
    double previous = penalized_objective(current, qf, cfg, rho * unit);
    result.trajectory.push_back(make_state(current, qf, cfg, 0, rho, previous, 0));
    result.status = RunStatus::max_iters;

    for (int t = 1; t <= tol.max_outer_iters; ++t) {
        SubproblemData sub;
        try {
            sub = build_subproblem(current, qf, ops, cfg, rho * unit);
        } catch (const std::exception& e) {
            result.status = RunStatus::numerical_failure;
            result.diagnostics = std::string("iteration ") + std::to_string(t) + ": " + e.what();
            break;
        }

        SolveReport rep = solve(sub, init.interior, tol.solver);
        if (rep.status != SolveStatus::optimal) {
            SolverOptions tighter = tol.solver;
            tighter.gap_target *= 0.1;
            SolveReport retry = solve(sub, init.interior, tighter);
            if (retry.status != SolveStatus::optimal) {
                result.status = rep.status == SolveStatus::infeasible ? RunStatus::infeasible
                                                                      : RunStatus::numerical_failure;
                result.diagnostics = std::string("iteration ") + std::to_string(t) +
                                     ": subproblem " + to_string(retry.status) + " (" +
                                     retry.diagnostics + ")";
                break;
            }
            rep = std::move(retry);
        }

        // An interior solution never reaches an exactly empty block; clear
        // the ones left with barrier residue so rank one is judged strictly.
        const LiftedPair expansion = current;
        current = drop_negligible(rep.solution, abs_floor);
        const double surrogate = surrogate_objective(current, expansion, qf, cfg, rho * unit);
        result.trajectory.push_back(make_state(current, qf, cfg, t, rho, surrogate, rep.iterations));
        result.outer_iterations = t;

        const PenaltyResiduals r = penalty_residuals(current);
        const bool flat =
            std::abs(surrogate - previous) <= tol.surrogate_rel * (1.0 + std::abs(surrogate));
        const bool rank_one = residuals_within(r, schedule.residual_target);
        previous = surrogate;
        if (flat && rank_one) {
            result.status = RunStatus::converged;
            break;
        }
        rho = schedule.step(rho, r);
    }

    const LiftedPair& final_lift = result.trajectory.back().lift;
    result.lifted_sum_rate = result.trajectory.back().sum_rate;
    try {
        result.beams = extract_rank_one(final_lift, schedule.residual_target);
    } catch (const RankOneError& e) {
        if (result.status == RunStatus::converged) throw;
        // Not converged: report the dominant-eigenvector beams anyway.
        result.beams = extract_rank_one(final_lift, 1e300);
    }
    if (!enforce_power_limits(result.beams, ops, cfg) && result.status == RunStatus::converged) {
        result.status = RunStatus::numerical_failure;
        result.diagnostics = "recovered beams exceed the per-element limit by more than 0.1%";
    }
    result.achieved_sum_rate = sum_rate(result.beams, ch, ops, cfg);
    result.achieved_harvest = total_harvest(result.beams, ch, ops, cfg);
    return result;
}

void write_trajectory_csv(std::ostream& os, const std::vector<IterateState>& trajectory,
                          bool header) {
    if (header)
        os << "iteration,sum_rate_bits,penalty_residual_I,penalty_residual_E,rho,"
              "surrogate_objective\n";
    std::ostringstream line;
    line << std::setprecision(17);
    for (const IterateState& s : trajectory) {
        line.str("");
        line << s.iteration << ',' << s.sum_rate << ',' << s.penalty_residual_I << ','
             << s.penalty_residual_E << ',' << s.rho << ',' << s.surrogate_objective << '\n';
        os << line.str();
    }
}

}  // namespace trisbf
