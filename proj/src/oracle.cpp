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

#include "trisbf/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <thread>
#include <vector>

namespace trisbf {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

/// Scalar model of the K = G = 1 case, used for the local refinement.
/// Parameters are [p_0.., theta_0.., phi_1.., psi_1..]: element n radiates
/// power p_n, split as sqrt(p_n) (cos theta_n, sin theta_n) between the
/// information and energy beams, whose entries carry phases phi_n and psi_n.
/// Box bounds on p and theta keep the element limit exact during the search.
struct TinyModel {
    int N;
    CVec h_I, h_E;
    double sigma2, zeta, P_t, Q_t;
    LogBase base;

    int params() const { return 2 * N + 2 * (N - 1); }

    BeamformerPair beams(const std::vector<double>& x) const {
        BeamformerPair bf{CVec(N), CVec(N)};
        for (int n = 0; n < N; ++n) {
            const double phi = n == 0 ? 0.0 : x[2 * N + n - 1];
            const double psi = n == 0 ? 0.0 : x[3 * N - 1 + n - 1];
            const double r = std::sqrt(x[n]);
            bf.f_I(n) = std::polar(r * std::cos(x[N + n]), phi);
            bf.f_E(n) = std::polar(r * std::sin(x[N + n]), psi);
        }
        return bf;
    }

    /// Rate if feasible, -inf otherwise.
    double value(const CVec& f_I, const CVec& f_E) const {
        for (int n = 0; n < N; ++n)
            if (std::norm(f_I(n)) + std::norm(f_E(n)) > P_t * (1.0 + 1e-12)) return kNegInf;
        const double eh = zeta * (std::norm(h_E.dot(f_I)) + std::norm(h_E.dot(f_E)));
        if (eh < Q_t) return kNegInf;
        return log_in(base, 1.0 + std::norm(h_I.dot(f_I)) / (sigma2 + std::norm(h_I.dot(f_E))));
    }

    double value(const std::vector<double>& x) const {
        for (int n = 0; n < N; ++n)
            if (x[n] < 0.0 || x[n] > P_t || x[N + n] < 0.0 || x[N + n] > 0.5 * std::numbers::pi)
                return kNegInf;
        const BeamformerPair bf = beams(x);
        return value(bf.f_I, bf.f_E);
    }
};

struct Candidate {
    double value = kNegInf;
    long long index = -1;
};

}  // namespace

OracleResult brute_force_best(const SystemConfig& cfg, const ChannelSet& ch, int resolution) {
    cfg.validate();
    if (cfg.N > 2 || cfg.K != 1 || cfg.G != 1)
        throw std::invalid_argument("brute_force_best: needs N <= 2, K = 1, G = 1");
    if (resolution < 2) throw std::invalid_argument("brute_force_best: resolution must be >= 2");

    const TinyModel model{cfg.N,    ch.h_I.at(0), ch.h_E.at(0), cfg.sigma2.at(0),
                          cfg.zeta, cfg.P_t,      cfg.Q_t,      cfg.log_base};
    const int N = cfg.N;
    const double mag_step = std::sqrt(cfg.P_t * N) / (resolution - 1);
    const double phase_step = 2.0 * std::numbers::pi / resolution;

    // Magnitude pairs (information, energy) that fit the element limit.
    std::vector<std::pair<int, int>> pairs;
    for (int i = 0; i < resolution; ++i)
        for (int j = 0; j < resolution; ++j) {
            const double a = i * mag_step, b = j * mag_step;
            if (a * a + b * b <= cfg.P_t * (1.0 + 1e-12)) pairs.emplace_back(i, j);
        }
    const long long P = static_cast<long long>(pairs.size());
    const long long phases = N == 2 ? static_cast<long long>(resolution) * resolution : 1;
    const long long outer = P;                         // antenna 0 pair
    const long long inner = (N == 2 ? P : 1) * phases;  // antenna 1 pair and phases

    auto point = [&](long long idx) {
        std::vector<double> x(model.params(), 0.0);
        const long long i0 = idx / inner;
        long long rest = idx % inner;
        auto set = [&](int n, const std::pair<int, int>& pr) {
            const double a = pr.first * mag_step, b = pr.second * mag_step;
            x[n] = std::min(a * a + b * b, cfg.P_t);
            x[N + n] = std::atan2(b, a);
        };
        set(0, pairs[i0]);
        if (N == 2) {
            set(1, pairs[rest / phases]);
            rest %= phases;
            x[4] = (rest / resolution) * phase_step;
            x[5] = (rest % resolution) * phase_step;
        }
        return x;
    };

    // Channel inner products h^H e^{i theta} per phase index, for the grid loop.
    std::vector<cd> unit(resolution);
    for (int j = 0; j < resolution; ++j) unit[j] = std::polar(1.0, j * phase_step);
    const cd hI0 = std::conj(model.h_I(0)), hE0 = std::conj(model.h_E(0));
    const cd hI1 = N == 2 ? std::conj(model.h_I(1)) : cd(0.0),
             hE1 = N == 2 ? std::conj(model.h_E(1)) : cd(0.0);

    const unsigned workers =
        std::max(1u, std::min<unsigned>(std::thread::hardware_concurrency(), 16u));
    std::vector<Candidate> best(workers);
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            Candidate local;
            for (long long i0 = w; i0 < outer; i0 += workers) {
                const double a0 = pairs[i0].first * mag_step, b0 = pairs[i0].second * mag_step;
                for (long long r = 0; r < inner; ++r) {
                    cd xI_I = hI0 * a0, xI_E = hI0 * b0, xE_I = hE0 * a0, xE_E = hE0 * b0;
                    if (N == 2) {
                        const auto& pr = pairs[r / phases];
                        const long long ph = r % phases;
                        const cd u = unit[ph / resolution], v = unit[ph % resolution];
                        const double a1 = pr.first * mag_step, b1 = pr.second * mag_step;
                        xI_I += hI1 * a1 * u;
                        xE_I += hE1 * a1 * u;
                        xI_E += hI1 * b1 * v;
                        xE_E += hE1 * b1 * v;
                    }
                    if (model.zeta * (std::norm(xE_I) + std::norm(xE_E)) < model.Q_t) continue;
                    const double val = log_in(
                        model.base, 1.0 + std::norm(xI_I) / (model.sigma2 + std::norm(xI_E)));
                    if (val > local.value) local = {val, i0 * inner + r};
                }
            }
            best[w] = local;
        });
    }
    for (std::thread& t : pool) t.join();

    Candidate winner;
    for (const Candidate& c : best)
        if (c.value > winner.value || (c.value == winner.value && c.index < winner.index &&
                                       c.index >= 0))
            winner = c;

    OracleResult out;
    out.points_evaluated = outer * inner;
    if (winner.index < 0 || winner.value == kNegInf) return out;

    // Coordinate descent with step halving from the best grid point.
    std::vector<double> x = point(winner.index);
    double fx = model.value(x);
    std::vector<double> step(model.params(), phase_step);
    for (int n = 0; n < N; ++n) step[n] = cfg.P_t / (resolution - 1);
    for (int round = 0; round < 60; ++round) {
        bool improved = true;
        while (improved) {
            improved = false;
            for (int i = 0; i < model.params(); ++i)
                for (double dir : {1.0, -1.0}) {
                    std::vector<double> y = x;
                    y[i] += dir * step[i];
                    if (i < N) y[i] = std::clamp(y[i], 0.0, cfg.P_t);
                    if (i >= N && i < 2 * N) y[i] = std::clamp(y[i], 0.0, 0.5 * std::numbers::pi);
                    const double fy = model.value(y);
                    if (fy > fx) {
                        x = std::move(y);
                        fx = fy;
                        improved = true;
                    }
                }
        }
        for (double& s : step) s *= 0.5;
    }

    out.feasible = true;
    out.beams = model.beams(x);
    out.sum_rate = fx;
    return out;
}

LiftCheckReport lift_equivalence_check(const BeamformerPair& bf, const ChannelSet& ch,
                                       const SelectionOperators& ops, const QuadFormCache& qf,
                                       const SystemConfig& cfg, double tol) {
    const LiftedPair F = lift(bf);
    auto rel = [](double a, double b) {
        const double scale = std::max(std::abs(a), std::abs(b));
        return scale > 0.0 ? std::abs(a - b) / scale : 0.0;
    };

    LiftCheckReport rep;
    for (int k = 0; k < cfg.K; ++k)
        rep.max_rate_deviation = std::max(
            rep.max_rate_deviation, rel(rate(bf, ch, ops, k, cfg), rate_lifted(F, qf, k, cfg)));
    for (int g = 0; g < cfg.G; ++g)
        rep.max_harvest_deviation =
            std::max(rep.max_harvest_deviation,
                     rel(harvested_energy(bf, ch, ops, g, cfg), harvest_lifted(F, qf, g, cfg)));
    for (int n = 0; n < cfg.N; ++n)
        rep.max_power_deviation =
            std::max(rep.max_power_deviation,
                     rel(per_antenna_power(bf, ops, n), per_antenna_power_lifted(F, ops, n)));

    if (rep.max_rate_deviation > tol) {
        rep.failed_metric = "rate";
    } else if (rep.max_harvest_deviation > tol) {
        rep.failed_metric = "harvest";
    } else if (rep.max_power_deviation > tol) {
        rep.failed_metric = "per-element power";
    }
    rep.passed = rep.failed_metric.empty();
    return rep;
}

}  // namespace trisbf
