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

#include "trisbf/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Eigenvalues>

namespace trisbf {

namespace {

void check_beams(const BeamformerPair& bf, const SelectionOperators& ops) {
    if (bf.f_I.size() != ops.N() * ops.K() || bf.f_E.size() != ops.N() * ops.G())
        throw std::invalid_argument("beamformer lengths do not match N*K and N*G");
}

void check_lift(const LiftedPair& lift, const QuadFormCache& qf) {
    const Eigen::Index dI = qf.M_II.front().front().dim();
    const Eigen::Index dE = qf.M_IE.front().front().dim();
    if (lift.F_I.rows() != dI || lift.F_I.cols() != dI || lift.F_E.rows() != dE ||
        lift.F_E.cols() != dE)
        throw std::invalid_argument("lifted matrices do not match N*K and N*G");
}

// |hbar^H diag(mask) f|^2
double masked_power(const CVec& hbar, const RVec& mask, const CVec& f) {
    const cd v = hbar.dot(mask.cast<cd>().cwiseProduct(f));
    return std::norm(v);
}

// Re Tr(M F), rejecting values that are negative beyond round-off.
double psd_trace(const BlockOuter& M, const CMat& F) {
    const double t = M.trace_with(F);
    if (t >= 0.0) return t;
    const Eigen::Index n = M.block_size();
    const double scale =
        M.outer.norm() * F.block(M.block * n, M.block * n, n, n).norm();
    if (t < -1e-9 * scale)
        throw NumericalPsdError("trace of a PSD quadratic form is negative (" +
                                std::to_string(t) + "); lifted matrix is not PSD");
    return 0.0;
}

struct RateTraces {
    double signal = 0.0;
    double interference = 0.0;  // ID interference + EH interference, no noise
};

RateTraces rate_traces(const LiftedPair& lift, const QuadFormCache& qf, int k) {
    check_lift(lift, qf);
    RateTraces t;
    const auto& row = qf.M_II.at(k);
    for (std::size_t i = 0; i < row.size(); ++i) {
        const double v = psd_trace(row[i], lift.F_I);
        if (static_cast<int>(i) == k)
            t.signal = v;
        else
            t.interference += v;
    }
    for (const BlockOuter& m : qf.M_IE.at(k)) t.interference += psd_trace(m, lift.F_E);
    return t;
}

Eigen::SelfAdjointEigenSolver<CMat> eig(const CMat& F) {
    return Eigen::SelfAdjointEigenSolver<CMat>(hermitian_part(F));
}

}  // namespace

double per_antenna_power(const BeamformerPair& bf, const SelectionOperators& ops, int n) {
    check_beams(bf, ops);
    const double pI = (bf.f_I.adjoint() * ops.abar_I(n).cast<cd>().asDiagonal() * bf.f_I)(0).real();
    const double pE = (bf.f_E.adjoint() * ops.abar_E(n).cast<cd>().asDiagonal() * bf.f_E)(0).real();
    return pI + pE;
}

double sinr(const BeamformerPair& bf, const ChannelSet& ch, const SelectionOperators& ops, int k,
            const SystemConfig& cfg) {
    check_beams(bf, ops);
    const double signal = masked_power(ch.hbar_I1.at(k), ops.b_I(k), bf.f_I);
    double denom = cfg.sigma2.at(k);
    for (int i = 0; i < ops.K(); ++i)
        if (i != k) denom += masked_power(ch.hbar_I1[k], ops.b_I(i), bf.f_I);
    for (int g = 0; g < ops.G(); ++g) denom += masked_power(ch.hbar_I2.at(k), ops.b_E(g), bf.f_E);
    return signal / denom;
}

double rate(const BeamformerPair& bf, const ChannelSet& ch, const SelectionOperators& ops, int k,
            const SystemConfig& cfg) {
    return log_in(cfg.log_base, 1.0 + sinr(bf, ch, ops, k, cfg));
}

double sum_rate(const BeamformerPair& bf, const ChannelSet& ch, const SelectionOperators& ops,
                const SystemConfig& cfg) {
    double s = 0.0;
    for (int k = 0; k < cfg.K; ++k) s += rate(bf, ch, ops, k, cfg);
    return s;
}

double harvested_energy(const BeamformerPair& bf, const ChannelSet& ch,
                        const SelectionOperators& ops, int g, const SystemConfig& cfg) {
    check_beams(bf, ops);
    double p = 0.0;
    for (int i = 0; i < ops.G(); ++i) p += masked_power(ch.hbar_E.at(g), ops.b_E(i), bf.f_E);
    for (int k = 0; k < ops.K(); ++k) p += masked_power(ch.hbar_E2.at(g), ops.b_I(k), bf.f_I);
    return cfg.zeta * p;
}

double total_harvest(const BeamformerPair& bf, const ChannelSet& ch,
                     const SelectionOperators& ops, const SystemConfig& cfg) {
    double q = 0.0;
    for (int g = 0; g < cfg.G; ++g) q += harvested_energy(bf, ch, ops, g, cfg);
    return q;
}

double per_antenna_power_lifted(const LiftedPair& lift, const SelectionOperators& ops, int n) {
    return lift.F_I.diagonal().real().dot(ops.abar_I(n)) +
           lift.F_E.diagonal().real().dot(ops.abar_E(n));
}

double rate_lifted(const LiftedPair& lift, const QuadFormCache& qf, int k,
                   const SystemConfig& cfg) {
    const RateTraces t = rate_traces(lift, qf, k);
    return log_in(cfg.log_base, 1.0 + t.signal / (t.interference + cfg.sigma2.at(k)));
}

double sum_rate_lifted(const LiftedPair& lift, const QuadFormCache& qf, const SystemConfig& cfg) {
    double s = 0.0;
    for (int k = 0; k < cfg.K; ++k) s += rate_lifted(lift, qf, k, cfg);
    return s;
}

double harvest_lifted(const LiftedPair& lift, const QuadFormCache& qf, int g,
                      const SystemConfig& cfg) {
    check_lift(lift, qf);
    double p = 0.0;
    for (const BlockOuter& m : qf.M_EE.at(g)) p += psd_trace(m, lift.F_E);
    for (const BlockOuter& m : qf.M_EI.at(g)) p += psd_trace(m, lift.F_I);
    return cfg.zeta * p;
}

double total_harvest_lifted(const LiftedPair& lift, const QuadFormCache& qf,
                            const SystemConfig& cfg) {
    double q = 0.0;
    for (int g = 0; g < cfg.G; ++g) q += harvest_lifted(lift, qf, g, cfg);
    return q;
}

DcParts dc_parts(const LiftedPair& lift, const QuadFormCache& qf, int k, const SystemConfig& cfg) {
    const RateTraces t = rate_traces(lift, qf, k);
    const double noise = cfg.sigma2.at(k);
    return {log_in(cfg.log_base, t.signal + t.interference + noise),
            log_in(cfg.log_base, t.interference + noise)};
}

DcGradients dc_gradient(const LiftedPair& lift0, const QuadFormCache& qf, int k,
                        const SystemConfig& cfg) {
    const RateTraces t = rate_traces(lift0, qf, k);
    const double D = t.interference + cfg.sigma2.at(k);
    const double scale = log_factor(cfg.log_base) / D;

    DcGradients out;
    out.G_I = CMat::Zero(lift0.F_I.rows(), lift0.F_I.cols());
    out.G_E = CMat::Zero(lift0.F_E.rows(), lift0.F_E.cols());
    const auto& row = qf.M_II.at(k);
    for (std::size_t i = 0; i < row.size(); ++i)
        if (static_cast<int>(i) != k) row[i].add_to(out.G_I, scale);
    for (const BlockOuter& m : qf.M_IE.at(k)) m.add_to(out.G_E, scale);
    out.value0 = log_in(cfg.log_base, D);
    return out;
}

double sca_rate_bound(const LiftedPair& lift, const LiftedPair& lift0, const QuadFormCache& qf,
                      int k, const SystemConfig& cfg) {
    const DcGradients grad = dc_gradient(lift0, qf, k, cfg);
    return grad.value0 + trace_inner(grad.G_I, lift.F_I - lift0.F_I) +
           trace_inner(grad.G_E, lift.F_E - lift0.F_E);
}

void normalize_phase(CVec& v, double tol) {
    const double thresh = tol * v.norm();
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        const double mag = std::abs(v(i));
        if (mag > thresh) {
            v *= std::conj(v(i)) / mag;
            v(i) = mag;
            return;
        }
    }
}

TopEigen top_eigen(const CMat& F) {
    const Eigen::Index n = F.rows();
    if (n == 0) return {};
    const auto es = eig(F);
    const RVec& lam = es.eigenvalues();
    const double top = lam(n - 1);
    const double radius = std::max(std::abs(lam(0)), std::abs(top));
    const double gap_tol = 1e-10 * radius;

    Eigen::Index first = n - 1;
    while (first > 0 && top - lam(first - 1) <= gap_tol) --first;

    TopEigen out;
    out.value = top;
    if (first == n - 1) {
        out.vector = es.eigenvectors().col(n - 1);
        normalize_phase(out.vector);
        return out;
    }
    // Degenerate top eigenspace: project e_j for the first j that survives.
    const CMat Q = es.eigenvectors().rightCols(n - first);
    for (Eigen::Index j = 0; j < n; ++j) {
        CVec w = Q * Q.row(j).adjoint();
        const double norm = w.norm();
        if (norm > 1e-8) {
            out.vector = w / norm;
            normalize_phase(out.vector);
            return out;
        }
    }
    out.vector = es.eigenvectors().col(n - 1);
    normalize_phase(out.vector);
    return out;
}

double nuclear_norm(const CMat& F) {
    if (F.rows() == 0) return 0.0;
    return eig(F).eigenvalues().cwiseAbs().sum();
}

double spectral_norm(const CMat& F) {
    if (F.rows() == 0) return 0.0;
    return eig(F).eigenvalues().cwiseAbs().maxCoeff();
}

double rank_one_residual(const CMat& F) {
    if (F.rows() == 0) return 0.0;
    RVec mags = eig(F).eigenvalues().cwiseAbs();
    std::sort(mags.begin(), mags.end());
    return mags.head(mags.size() - 1).sum();
}

void require_psd(const CMat& F, const char* what, double tol) {
    if (F.rows() == 0) return;
    const RVec lam = eig(F).eigenvalues();
    const double radius = lam.cwiseAbs().maxCoeff();
    if (lam(0) < -tol * radius)
        throw NumericalPsdError(std::string(what) + " is not PSD (smallest eigenvalue " +
                                std::to_string(lam(0)) + ")");
}

double spectral_minorant(const CMat& F, const CMat& F0) {
    const TopEigen top = top_eigen(F0);
    const CVec d = (F - F0) * top.vector;
    return top.value + top.vector.dot(d).real();
}

namespace {

// Nuclear norm of a PSD block, taken as its trace once PSD-ness is confirmed.
double nuclear_of_psd(const CMat& F, const char* what) {
    const double nuc = nuclear_norm(F);
    const double tr = F.trace().real();
    if (std::abs(nuc - tr) > 1e-9 * std::max(nuc, 1e-300) && std::abs(nuc - tr) > 1e-300)
        throw NumericalPsdError(std::string(what) + ": nuclear norm differs from trace");
    return tr;
}

}  // namespace

PenaltyTerms penalty_terms(const LiftedPair& lift, const LiftedPair& lift0) {
    PenaltyTerms p;
    p.I = nuclear_of_psd(lift.F_I, "F_I") - spectral_minorant(lift.F_I, lift0.F_I);
    p.E = nuclear_of_psd(lift.F_E, "F_E") - spectral_minorant(lift.F_E, lift0.F_E);
    return p;
}

}  // namespace trisbf
