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

#include "trisbf/subproblem.hpp"

#include <cmath>
#include <ostream>
#include <string>

namespace trisbf {

namespace {

bool is_hermitian(const CMat& A) {
    return (A - A.adjoint()).norm() <= 1e-12 * std::max(1.0, A.norm());
}

void check_square(const CMat& A, int dim, const std::string& what) {
    if (A.rows() != dim || A.cols() != dim)
        throw std::invalid_argument(what + " has the wrong dimension");
    if (!is_hermitian(A)) throw std::invalid_argument(what + " is not Hermitian");
}

}  // namespace

void SubproblemData::validate() const {
    if (dim_I < 1 || dim_E < 1) throw std::invalid_argument("SubproblemData: empty PSD block");
    if (!(rho > 0.0)) throw std::invalid_argument("SubproblemData: rho must be positive");
    check_square(linear_I, dim_I, "linear_I");
    check_square(linear_E, dim_E, "linear_E");
    for (const LogTerm& t : log_terms) {
        if (!(t.constant > 0.0))
            throw std::invalid_argument("SubproblemData: log-term constants must be positive");
        check_square(t.coeff_I, dim_I, "log-term coeff_I");
        check_square(t.coeff_E, dim_E, "log-term coeff_E");
        require_psd(t.coeff_I, "log-term coeff_I");
        require_psd(t.coeff_E, "log-term coeff_E");
    }
    for (const TraceConstraint& c : constraints) {
        check_square(c.A_I, dim_I, "constraint A_I");
        check_square(c.A_E, dim_E, "constraint A_E");
        if (!std::isfinite(c.bound))
            throw std::invalid_argument("SubproblemData: constraint bound is not finite");
    }
}

double SubproblemData::objective(const LiftedPair& lift) const {
    double value = constant_offset - trace_inner(linear_I, lift.F_I) -
                   trace_inner(linear_E, lift.F_E);
    for (const LogTerm& t : log_terms) {
        const double arg =
            t.constant + trace_inner(t.coeff_I, lift.F_I) + trace_inner(t.coeff_E, lift.F_E);
        if (!(arg > 0.0)) throw NumericalPsdError("log-term argument is not positive");
        value += log_in(log_base, arg);
    }
    return value;
}

std::vector<TraceConstraint> feasibility_constraints(const QuadFormCache& qf,
                                                     const SelectionOperators& ops,
                                                     const SystemConfig& cfg) {
    std::vector<TraceConstraint> rows;
    rows.reserve(cfg.N + 1);
    for (int n = 0; n < cfg.N; ++n)
        rows.push_back({ops.Abar_I(n).cast<cd>(), ops.Abar_E(n).cast<cd>(), cfg.P_t,
                        Sense::less_equal});

    TraceConstraint eh{CMat::Zero(cfg.dim_I(), cfg.dim_I()), CMat::Zero(cfg.dim_E(), cfg.dim_E()),
                       cfg.Q_t, Sense::greater_equal};
    for (int g = 0; g < cfg.G; ++g) {
        for (const BlockOuter& m : qf.M_EI.at(g)) m.add_to(eh.A_I, cfg.zeta);
        for (const BlockOuter& m : qf.M_EE.at(g)) m.add_to(eh.A_E, cfg.zeta);
    }
    rows.push_back(std::move(eh));
    return rows;
}

double max_relative_violation(const std::vector<TraceConstraint>& rows, const LiftedPair& lift) {
    double worst = 0.0;
    for (const TraceConstraint& c : rows) {
        const double s = c.slack(lift);
        if (s >= 0.0) continue;
        const double denom = std::max(std::abs(c.bound), std::abs(c.evaluate(lift)));
        worst = std::max(worst, denom > 0.0 ? -s / denom : 0.0);
    }
    return worst;
}

SubproblemData build_subproblem(const LiftedPair& lift0, const QuadFormCache& qf,
                                const SelectionOperators& ops, const SystemConfig& cfg,
                                double rho) {
    if (!(rho > 0.0)) throw std::invalid_argument("build_subproblem: rho must be positive");
    require_psd(lift0.F_I, "expansion point F_I");
    require_psd(lift0.F_E, "expansion point F_E");

    SubproblemData sub;
    sub.dim_I = cfg.dim_I();
    sub.dim_E = cfg.dim_E();
    sub.rho = rho;
    sub.log_base = cfg.log_base;
    sub.constraints = feasibility_constraints(qf, ops, cfg);
    const double violation = max_relative_violation(sub.constraints, lift0);
    if (violation > 1e-6)
        throw StaleIterateError("expansion point violates the constraints (relative " +
                                std::to_string(violation) + "); re-initialize");

    sub.linear_I = CMat::Zero(sub.dim_I, sub.dim_I);
    sub.linear_E = CMat::Zero(sub.dim_E, sub.dim_E);
    double offset = 0.0;
    for (int k = 0; k < cfg.K; ++k) {
        LogTerm term{cfg.sigma2[k], CMat::Zero(sub.dim_I, sub.dim_I),
                     CMat::Zero(sub.dim_E, sub.dim_E)};
        for (const BlockOuter& m : qf.M_II.at(k)) m.add_to(term.coeff_I);
        for (const BlockOuter& m : qf.M_IE.at(k)) m.add_to(term.coeff_E);
        sub.log_terms.push_back(std::move(term));

        const DcGradients grad = dc_gradient(lift0, qf, k, cfg);
        sub.linear_I += grad.G_I;
        sub.linear_E += grad.G_E;
        offset += -grad.value0 + trace_inner(grad.G_I, lift0.F_I) +
                  trace_inner(grad.G_E, lift0.F_E);
    }

    // Penalty: (1/(2 rho)) (Tr F - ||F0||_2 - <v v^H, F - F0>) per block, with
    // the nuclear norm written as a trace on the PSD cone.
    const double w = 1.0 / (2.0 * rho);
    auto add_penalty = [&](const CMat& F0, CMat& linear) {
        const TopEigen top = top_eigen(F0);
        const CMat vvH = top.vector * top.vector.adjoint();
        linear += w * (CMat::Identity(F0.rows(), F0.cols()) - vvH);
        offset += w * (top.value - trace_inner(vvH, F0));
    };
    add_penalty(lift0.F_I, sub.linear_I);
    add_penalty(lift0.F_E, sub.linear_E);
    sub.linear_I = hermitian_part(sub.linear_I);
    sub.linear_E = hermitian_part(sub.linear_E);
    sub.constant_offset = offset;
    return sub;
}

double surrogate_objective(const LiftedPair& lift, const LiftedPair& lift0,
                           const QuadFormCache& qf, const SystemConfig& cfg, double rho) {
    double value = 0.0;
    for (int k = 0; k < cfg.K; ++k)
        value += dc_parts(lift, qf, k, cfg).full - sca_rate_bound(lift, lift0, qf, k, cfg);
    const PenaltyTerms p = penalty_terms(lift, lift0);
    return value - (p.I + p.E) / (2.0 * rho);
}

double penalized_objective(const LiftedPair& lift, const QuadFormCache& qf,
                           const SystemConfig& cfg, double rho) {
    return sum_rate_lifted(lift, qf, cfg) -
           (rank_one_residual(lift.F_I) + rank_one_residual(lift.F_E)) / (2.0 * rho);
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

namespace {

nlohmann::json matrix_json(const CMat& A) {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index r = 0; r < A.rows(); ++r) {
        nlohmann::json row = nlohmann::json::array();
        for (Eigen::Index c = 0; c < A.cols(); ++c) row.push_back({A(r, c).real(), A(r, c).imag()});
        rows.push_back(std::move(row));
    }
    return rows;
}

CMat matrix_from_json(const nlohmann::json& j, int dim) {
    if (!j.is_array() || static_cast<int>(j.size()) != dim)
        throw std::invalid_argument("subproblem json: matrix has the wrong number of rows");
    CMat A(dim, dim);
    for (int r = 0; r < dim; ++r) {
        const auto& row = j.at(r);
        if (!row.is_array() || static_cast<int>(row.size()) != dim)
            throw std::invalid_argument("subproblem json: matrix row has the wrong length");
        for (int c = 0; c < dim; ++c)
            A(r, c) = cd(row.at(c).at(0).get<double>(), row.at(c).at(1).get<double>());
    }
    return A;
}

}  // namespace

nlohmann::json to_json(const SubproblemData& sub) {
    nlohmann::json j;
    j["dim_I"] = sub.dim_I;
    j["dim_E"] = sub.dim_E;
    j["rho"] = sub.rho;
    j["log_base"] = sub.log_base == LogBase::bits ? "bits" : "nats";
    j["constant_offset"] = sub.constant_offset;
    j["linear_I"] = matrix_json(sub.linear_I);
    j["linear_E"] = matrix_json(sub.linear_E);
    j["log_terms"] = nlohmann::json::array();
    for (const LogTerm& t : sub.log_terms)
        j["log_terms"].push_back({{"constant", t.constant},
                                  {"coeff_I", matrix_json(t.coeff_I)},
                                  {"coeff_E", matrix_json(t.coeff_E)}});
    j["constraints"] = nlohmann::json::array();
    for (const TraceConstraint& c : sub.constraints)
        j["constraints"].push_back({{"A_I", matrix_json(c.A_I)},
                                    {"A_E", matrix_json(c.A_E)},
                                    {"bound", c.bound},
                                    {"sense", c.sense == Sense::less_equal ? "<=" : ">="}});
    return j;
}

SubproblemData subproblem_from_json(const nlohmann::json& j) {
    SubproblemData sub;
    sub.dim_I = j.at("dim_I").get<int>();
    sub.dim_E = j.at("dim_E").get<int>();
    sub.rho = j.at("rho").get<double>();
    sub.log_base = j.at("log_base").get<std::string>() == "nats" ? LogBase::nats : LogBase::bits;
    sub.constant_offset = j.at("constant_offset").get<double>();
    sub.linear_I = matrix_from_json(j.at("linear_I"), sub.dim_I);
    sub.linear_E = matrix_from_json(j.at("linear_E"), sub.dim_E);
    for (const auto& t : j.at("log_terms"))
        sub.log_terms.push_back({t.at("constant").get<double>(),
                                 matrix_from_json(t.at("coeff_I"), sub.dim_I),
                                 matrix_from_json(t.at("coeff_E"), sub.dim_E)});
    for (const auto& c : j.at("constraints")) {
        const std::string sense = c.at("sense").get<std::string>();
        if (sense != "<=" && sense != ">=")
            throw std::invalid_argument("subproblem json: unknown constraint sense " + sense);
        sub.constraints.push_back({matrix_from_json(c.at("A_I"), sub.dim_I),
                                   matrix_from_json(c.at("A_E"), sub.dim_E),
                                   c.at("bound").get<double>(),
                                   sense == "<=" ? Sense::less_equal : Sense::greater_equal});
    }
    sub.validate();
    return sub;
}

void write_subproblem(std::ostream& os, const SubproblemData& sub) {
    os << to_json(sub).dump(1) << '\n';
}

}  // namespace trisbf
