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

// Shared scenario builders and random matrix helpers for the test programs.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>

#include "trisbf/channel_gen.hpp"
#include "trisbf/metrics.hpp"
#include "trisbf/subproblem.hpp"
#include "trisbf/system_model.hpp"

namespace trisbf::testing {

inline double rel_diff(double a, double b) {
    const double scale = std::max(std::abs(a), std::abs(b));
    return scale > 0.0 ? std::abs(a - b) / scale : 0.0;
}

inline cd gaussian(Rng& rng) {
    std::normal_distribution<double> n(0.0, std::sqrt(0.5));
    const double re = n(rng);
    return {re, n(rng)};
}

inline CVec random_vector(Eigen::Index n, Rng& rng, double scale = 1.0) {
    CVec v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = scale * gaussian(rng);
    return v;
}

inline CMat random_hermitian(Eigen::Index n, Rng& rng) {
    CMat A(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) A(i, j) = gaussian(rng);
    return hermitian_part(A);
}

/// Sum of `rank` random outer products, plus `ridge` times the identity.
inline CMat random_psd(Eigen::Index n, int rank, Rng& rng, double ridge = 0.0) {
    CMat F = ridge * CMat::Identity(n, n);
    for (int r = 0; r < rank; ++r) {
        const CVec v = random_vector(n, rng);
        F += v * v.adjoint();
    }
    return F;
}

/// A drawn scenario with everything the metric functions need.
struct Scenario {
    SystemConfig cfg;
    ChannelSet ch;
    SelectionOperators ops;
    QuadFormCache qf;

    explicit Scenario(const SystemConfig& c, const ChannelSet& channels)
        : cfg(c), ch(channels), ops(c), qf(build_quadform_cache(ops, ch)) {}
};

inline SystemConfig physical_config(int N, int K, int G) {
    SystemConfig cfg;
    cfg.N = N;
    cfg.K = K;
    cfg.G = G;
    cfg.P_t = dbm_to_watt(10.0);
    cfg.sigma2.assign(K, dbm_to_watt(-90.0));
    return cfg;
}

/// Channels from the default geometry and pathloss.
inline Scenario physical_scenario(int N, int K, int G, std::uint64_t seed) {
    const SystemConfig cfg = physical_config(N, K, G);
    ScenarioParams params;
    params.seed = seed;
    return Scenario(cfg, stack_channels(cfg, draw_scenario(params, cfg)));
}

/// Unit-scale channels and noise, for problems whose conditioning should not
/// depend on pathloss.
inline Scenario unit_scenario(int N, int K, int G, std::uint64_t seed) {
    SystemConfig cfg;
    cfg.N = N;
    cfg.K = K;
    cfg.G = G;
    cfg.P_t = 1.0;
    cfg.sigma2.assign(K, 1.0);
    Rng rng(seed);
    RawChannels raw;
    for (int k = 0; k < K; ++k) raw.id.push_back(random_vector(N, rng));
    for (int g = 0; g < G; ++g) raw.eh.push_back(random_vector(N, rng));
    return Scenario(cfg, stack_channels(cfg, raw));
}

inline BeamformerPair random_beams(const SystemConfig& cfg, Rng& rng) {
    const double s = std::sqrt(cfg.P_t / (cfg.K + cfg.G));
    return {random_vector(cfg.dim_I(), rng, s), random_vector(cfg.dim_E(), rng, s)};
}

/// Full-rank PSD pair at the power scale of the scenario.
inline LiftedPair random_lift(const SystemConfig& cfg, Rng& rng) {
    const double s = cfg.P_t / (cfg.K + cfg.G);
    return {s * random_psd(cfg.dim_I(), cfg.dim_I(), rng, 0.1),
            s * random_psd(cfg.dim_E(), cfg.dim_E(), rng, 0.1)};
}

/// One surrogate problem built around a random feasible expansion point of
/// a unit-scale scenario. Odd seeds expand around a full-rank point, even
/// seeds around a rank-one one; the harvest requirement and penalty factor
/// are drawn too.
struct SurrogateInstance {
    Scenario scenario;
    LiftedPair expansion;
    SubproblemData sub;
};

inline SurrogateInstance random_surrogate(int N, int K, int G, std::uint64_t seed) {
    Scenario s = unit_scenario(N, K, G, seed);
    Rng rng(seed + 7);
    LiftedPair F0 = seed % 2 == 0 ? lift(random_beams(s.cfg, rng)) : random_lift(s.cfg, rng);
    double worst = 0.0;
    for (int n = 0; n < N; ++n) worst = std::max(worst, per_antenna_power_lifted(F0, s.ops, n));
    F0 *= 0.9 * s.cfg.P_t / worst;
    s.cfg.Q_t = std::uniform_real_distribution<double>(0.2, 0.95)(rng) *
                total_harvest_lifted(F0, s.qf, s.cfg);
    const double rho = std::pow(10.0, std::uniform_real_distribution<double>(-1.0, 1.0)(rng));
    SubproblemData sub = build_subproblem(F0, s.qf, s.ops, s.cfg, rho);
    return {std::move(s), std::move(F0), std::move(sub)};
}

}  // namespace trisbf::testing
