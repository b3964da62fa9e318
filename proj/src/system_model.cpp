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

#include "trisbf/system_model.hpp"

#include <cmath>
#include <string>

namespace trisbf {

void SystemConfig::validate() const {
    if (N < 1 || K < 1 || G < 1)
        throw std::invalid_argument("SystemConfig: N, K and G must be at least 1");
    if (!(P_t > 0.0) || !std::isfinite(P_t))
        throw std::invalid_argument("SystemConfig: P_t must be positive");
    if (!(Q_t >= 0.0) || !std::isfinite(Q_t))
        throw std::invalid_argument("SystemConfig: Q_t must be nonnegative");
    if (!(zeta > 0.0 && zeta <= 1.0))
        throw std::invalid_argument("SystemConfig: zeta must lie in (0, 1]");
    if (sigma2.size() != static_cast<std::size_t>(K))
        throw std::invalid_argument("SystemConfig: sigma2 must have K entries");
    for (double s : sigma2)
        if (!(s > 0.0) || !std::isfinite(s))
            throw std::invalid_argument("SystemConfig: noise powers must be positive");
}

SelectionOperators::SelectionOperators(const SystemConfig& cfg)
    : N_(cfg.N), K_(cfg.K), G_(cfg.G) {
    cfg.validate();
    for (int n = 0; n < N_; ++n) {
        RVec an = RVec::Zero(N_);
        an(n) = 1.0;
        a_.push_back(an);
        abar_I_.push_back(an.replicate(K_, 1));
        abar_E_.push_back(an.replicate(G_, 1));
    }
    for (int k = 0; k < K_; ++k) {
        RVec b = RVec::Zero(N_ * K_);
        b.segment(k * N_, N_).setOnes();
        b_I_.push_back(b);
    }
    for (int g = 0; g < G_; ++g) {
        RVec b = RVec::Zero(N_ * G_);
        b.segment(g * N_, N_).setOnes();
        b_E_.push_back(b);
    }
}

CVec repeat_vector(const CVec& base, int copies) { return base.replicate(copies, 1); }

ChannelSet stack_channels(const SystemConfig& cfg, const RawChannels& raw) {
    cfg.validate();
    if (raw.id.size() != static_cast<std::size_t>(cfg.K) ||
        raw.eh.size() != static_cast<std::size_t>(cfg.G))
        throw std::invalid_argument("stack_channels: expected " + std::to_string(cfg.K) +
                                    " ID and " + std::to_string(cfg.G) + " EH channels");
    for (const auto* set : {&raw.id, &raw.eh})
        for (const CVec& h : *set)
            if (h.size() != cfg.N)
                throw std::invalid_argument("stack_channels: channel length must equal N = " +
                                            std::to_string(cfg.N));

    ChannelSet ch;
    ch.h_I = raw.id;
    ch.h_E = raw.eh;
    for (const CVec& h : raw.id) {
        ch.hbar_I1.push_back(repeat_vector(h, cfg.K));
        ch.hbar_I2.push_back(repeat_vector(h, cfg.G));
    }
    for (const CVec& h : raw.eh) {
        ch.hbar_E.push_back(repeat_vector(h, cfg.G));
        ch.hbar_E2.push_back(repeat_vector(h, cfg.K));
    }
    return ch;
}

namespace {

// B_j hbar hbar^H B_j with hbar a stack of identical copies is the base
// outer product sitting in diagonal block j.
std::vector<BlockOuter> blockwise(const CVec& base, int num_blocks) {
    const CMat outer = base * base.adjoint();
    std::vector<BlockOuter> out;
    out.reserve(num_blocks);
    for (int j = 0; j < num_blocks; ++j) out.push_back({j, num_blocks, outer});
    return out;
}

}  // namespace

QuadFormCache build_quadform_cache(const SelectionOperators& ops, const ChannelSet& ch) {
    if (ch.h_I.size() != static_cast<std::size_t>(ops.K()) ||
        ch.h_E.size() != static_cast<std::size_t>(ops.G()))
        throw std::invalid_argument("build_quadform_cache: channel counts do not match operators");
    QuadFormCache qf;
    for (const CVec& h : ch.h_I) {
        qf.M_II.push_back(blockwise(h, ops.K()));
        qf.M_IE.push_back(blockwise(h, ops.G()));
    }
    for (const CVec& h : ch.h_E) {
        qf.M_EE.push_back(blockwise(h, ops.G()));
        qf.M_EI.push_back(blockwise(h, ops.K()));
    }
    return qf;
}

}  // namespace trisbf
