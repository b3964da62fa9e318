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

#include <vector>

#include "trisbf/types.hpp"

namespace trisbf {

/// Scenario contract: N transmit elements serving K information-decoding
/// users and G energy-harvesting users. All indices in this library are
/// zero-based.
struct SystemConfig {
    int N = 8;
    int K = 2;
    int G = 2;
    double P_t = 0.01;            ///< per-element power limit [W]
    double Q_t = 0.0;             ///< minimum total harvested power [W]
    double zeta = 0.5;            ///< energy-harvesting efficiency
    std::vector<double> sigma2;   ///< noise power per ID user [W], length K
    LogBase log_base = LogBase::bits;

    /// Throws std::invalid_argument if any field is out of range.
    void validate() const;

    int dim_I() const { return N * K; }
    int dim_E() const { return N * G; }
};

/// Per-user channel vectors, each of length N.
struct RawChannels {
    std::vector<CVec> id;
    std::vector<CVec> eh;
};

struct ChannelSet {
    std::vector<CVec> h_I;      ///< K base vectors (length N)
    std::vector<CVec> h_E;      ///< G base vectors (length N)
    std::vector<CVec> hbar_I1;  ///< h_I[k] repeated K times (length NK)
    std::vector<CVec> hbar_I2;  ///< h_I[k] repeated G times (length NG)
    std::vector<CVec> hbar_E;   ///< h_E[g] repeated G times (length NG)
    std::vector<CVec> hbar_E2;  ///< h_E[g] repeated K times (length NK)
};

/// Element indicators and beam selection masks. Every operator here is
/// diagonal, so only the diagonals are stored; the dense accessors exist
/// for tests and for assembling constraint matrices.
class SelectionOperators {
public:
    explicit SelectionOperators(const SystemConfig& cfg);

    int N() const { return N_; }
    int K() const { return K_; }
    int G() const { return G_; }

    const RVec& a(int n) const { return a_.at(n); }
    const RVec& abar_I(int n) const { return abar_I_.at(n); }
    const RVec& abar_E(int n) const { return abar_E_.at(n); }
    const RVec& b_I(int k) const { return b_I_.at(k); }
    const RVec& b_E(int g) const { return b_E_.at(g); }

    RMat A(int n) const { return a(n).asDiagonal(); }
    RMat Abar_I(int n) const { return abar_I(n).asDiagonal(); }
    RMat Abar_E(int n) const { return abar_E(n).asDiagonal(); }
    RMat B_I(int k) const { return b_I(k).asDiagonal(); }
    RMat B_E(int g) const { return b_E(g).asDiagonal(); }

private:
    int N_, K_, G_;
    std::vector<RVec> a_, abar_I_, abar_E_, b_I_, b_E_;
};

/// A Hermitian matrix of size (blocks*N)x(blocks*N) that is zero except for
/// one N x N diagonal block.
struct BlockOuter {
    int block = 0;
    int num_blocks = 1;
    CMat outer;  ///< the nonzero diagonal block

    Eigen::Index block_size() const { return outer.rows(); }
    Eigen::Index dim() const { return num_blocks * outer.rows(); }

    /// Re Tr(M F) touching only the nonzero block of M.
    double trace_with(const CMat& F) const {
        const Eigen::Index n = block_size();
        return trace_inner(outer, F.block(block * n, block * n, n, n));
    }

    /// dest += scale * M
    void add_to(CMat& dest, double scale = 1.0) const {
        const Eigen::Index n = block_size();
        dest.block(block * n, block * n, n, n) += scale * outer;
    }

    CMat dense() const {
        CMat m = CMat::Zero(dim(), dim());
        add_to(m);
        return m;
    }
};

/// Quadratic-form coefficient matrices consumed by the lifted metrics:
///   M_II[k][i] = B_I[i] hbar_I1[k] hbar_I1[k]^H B_I[i]   (NK x NK)
///   M_IE[k][g] = B_E[g] hbar_I2[k] hbar_I2[k]^H B_E[g]   (NG x NG)
///   M_EE[g][i] = B_E[i] hbar_E[g]  hbar_E[g]^H  B_E[i]   (NG x NG)
///   M_EI[g][k] = B_I[k] hbar_E2[g] hbar_E2[g]^H B_I[k]   (NK x NK)
struct QuadFormCache {
    std::vector<std::vector<BlockOuter>> M_II;
    std::vector<std::vector<BlockOuter>> M_IE;
    std::vector<std::vector<BlockOuter>> M_EE;
    std::vector<std::vector<BlockOuter>> M_EI;
};

/// Repeats `base` `copies` times into one stacked vector.
CVec repeat_vector(const CVec& base, int copies);

ChannelSet stack_channels(const SystemConfig& cfg, const RawChannels& raw);

QuadFormCache build_quadform_cache(const SelectionOperators& ops, const ChannelSet& ch);

}  // namespace trisbf
