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

#include "catch_amalgamated.hpp"

#include "test_support.hpp"
#include "trisbf/system_model.hpp"

using namespace trisbf;
using namespace trisbf::testing;

namespace {

SystemConfig small_config(int N, int K, int G) {
    SystemConfig cfg;
    cfg.N = N;
    cfg.K = K;
    cfg.G = G;
    cfg.P_t = 1.0;
    cfg.sigma2.assign(K, 1.0);
    return cfg;
}

bool is_identity(const RMat& M) { return M.isApprox(RMat::Identity(M.rows(), M.cols()), 0.0); }

}  // namespace

TEST_CASE("config validation rejects out-of-range fields", "[system-model]") {
    SystemConfig ok = small_config(2, 2, 1);
    REQUIRE_NOTHROW(ok.validate());

    auto broken = [&](auto&& edit) {
        SystemConfig c = ok;
        edit(c);
        return c;
    };
    CHECK_THROWS_AS(broken([](SystemConfig& c) { c.N = 0; }).validate(), std::invalid_argument);
    CHECK_THROWS_AS(broken([](SystemConfig& c) { c.P_t = 0.0; }).validate(), std::invalid_argument);
    CHECK_THROWS_AS(broken([](SystemConfig& c) { c.Q_t = -1.0; }).validate(), std::invalid_argument);
    CHECK_THROWS_AS(broken([](SystemConfig& c) { c.zeta = 0.0; }).validate(), std::invalid_argument);
    CHECK_THROWS_AS(broken([](SystemConfig& c) { c.zeta = 1.5; }).validate(), std::invalid_argument);
    CHECK_THROWS_AS(broken([](SystemConfig& c) { c.sigma2 = {1.0}; }).validate(),
                    std::invalid_argument);
    CHECK_THROWS_AS(broken([](SystemConfig& c) { c.sigma2 = {1.0, 0.0}; }).validate(),
                    std::invalid_argument);
    CHECK_NOTHROW(broken([](SystemConfig& c) { c.zeta = 1.0; }).validate());
}

TEST_CASE("selection operators for N=2, K=2", "[system-model]") {
    const SelectionOperators ops(small_config(2, 2, 1));

    // Beam masks cover consecutive blocks of N entries.
    CHECK(ops.b_I(0) == (RVec(4) << 1, 1, 0, 0).finished());
    CHECK(ops.b_I(1) == (RVec(4) << 0, 0, 1, 1).finished());
    CHECK(ops.B_I(0) == RVec((RVec(4) << 1, 1, 0, 0).finished()).asDiagonal().toDenseMatrix());

    // Element indicators and their partition of the identity.
    CHECK(ops.a(0) == (RVec(2) << 1, 0).finished());
    CHECK(ops.a(1) == (RVec(2) << 0, 1).finished());
    CHECK(is_identity(ops.A(0) + ops.A(1)));

    // blkdiag(A_0, A_0) by hand.
    CHECK(ops.abar_I(0) == (RVec(4) << 1, 0, 1, 0).finished());
    CHECK(ops.abar_E(1) == (RVec(2) << 0, 1).finished());
}

TEST_CASE("selection operators partition the identity", "[system-model][property]") {
    for (int N : {1, 3, 5})
        for (int K : {1, 2, 4})
            for (int G : {1, 3}) {
                const SelectionOperators ops(small_config(N, K, G));
                RMat sum_B_I = RMat::Zero(N * K, N * K), sum_B_E = RMat::Zero(N * G, N * G);
                for (int k = 0; k < K; ++k) {
                    const RMat B = ops.B_I(k);
                    CHECK(B.isApprox(B * B, 0.0));
                    sum_B_I += B;
                }
                for (int g = 0; g < G; ++g) {
                    const RMat B = ops.B_E(g);
                    CHECK(B.isApprox(B * B, 0.0));
                    sum_B_E += B;
                }
                CHECK(is_identity(sum_B_I));
                CHECK(is_identity(sum_B_E));

                RMat sum_A_I = RMat::Zero(N * K, N * K), sum_A_E = RMat::Zero(N * G, N * G);
                for (int n = 0; n < N; ++n) {
                    sum_A_I += ops.Abar_I(n);
                    sum_A_E += ops.Abar_E(n);
                }
                CHECK(is_identity(sum_A_I));
                CHECK(is_identity(sum_A_E));
            }
}

TEST_CASE("stacked channels repeat the base vectors", "[system-model]") {
    SystemConfig cfg = small_config(2, 2, 2);
    RawChannels raw;
    raw.id = {(CVec(2) << cd(1, 0), cd(0, 2)).finished(), (CVec(2) << cd(0, 1), cd(1, 1)).finished()};
    raw.eh = {(CVec(2) << cd(3, 0), cd(0, 0)).finished(), (CVec(2) << cd(1, 0), cd(1, 0)).finished()};
    const ChannelSet ch = stack_channels(cfg, raw);

    CHECK(ch.hbar_I1[0] == (CVec(4) << cd(1, 0), cd(0, 2), cd(1, 0), cd(0, 2)).finished());
    CHECK(ch.hbar_E[0] == (CVec(4) << cd(3, 0), cd(0, 0), cd(3, 0), cd(0, 0)).finished());
    CHECK(ch.hbar_E2[1] == (CVec(4) << cd(1, 0), cd(1, 0), cd(1, 0), cd(1, 0)).finished());

    SystemConfig one_eh = small_config(2, 2, 1);
    raw.eh.pop_back();
    const ChannelSet ch1 = stack_channels(one_eh, raw);
    CHECK(ch1.hbar_I2[0] == raw.id[0]);
}

TEST_CASE("stacking rejects mismatched channel lists", "[system-model]") {
    const SystemConfig cfg = small_config(2, 2, 1);
    RawChannels raw;
    raw.id = {CVec::Ones(2)};
    raw.eh = {CVec::Ones(2)};
    CHECK_THROWS_AS(stack_channels(cfg, raw), std::invalid_argument);
    raw.id = {CVec::Ones(2), CVec::Ones(3)};
    CHECK_THROWS_AS(stack_channels(cfg, raw), std::invalid_argument);
}

TEST_CASE("quadratic-form cache places channel outer products in one block", "[system-model]") {
    SECTION("N=1, K=2 by hand") {
        SystemConfig cfg = small_config(1, 2, 1);
        RawChannels raw{{CVec::Constant(1, 2.0), CVec::Constant(1, 1.0)}, {CVec::Constant(1, 1.0)}};
        const SelectionOperators ops(cfg);
        const QuadFormCache qf = build_quadform_cache(ops, stack_channels(cfg, raw));
        CHECK(qf.M_II[0][0].dense() == CMat((RVec(2) << 4, 0).finished().asDiagonal()));
        CHECK(qf.M_II[0][1].dense() == CMat((RVec(2) << 0, 4).finished().asDiagonal()));
    }

    SECTION("definition against dense selection matrices") {
        const Scenario s = unit_scenario(3, 2, 2, 11);
        for (int k = 0; k < 2; ++k)
            for (int i = 0; i < 2; ++i) {
                const CMat B = s.ops.B_I(i).cast<cd>();
                const CMat want = B * s.ch.hbar_I1[k] * s.ch.hbar_I1[k].adjoint() * B;
                const CMat got = s.qf.M_II[k][i].dense();
                CHECK((got - want).norm() <= 1e-14 * want.norm());
                CHECK(got.isApprox(got.adjoint()));
                CHECK(Eigen::SelfAdjointEigenSolver<CMat>(got).eigenvalues().minCoeff() >=
                      -1e-12 * got.norm());
                const CMat block = got.block(i * 3, i * 3, 3, 3);
                CHECK((block - s.ch.h_I[k] * s.ch.h_I[k].adjoint()).norm() <= 1e-14 * block.norm());
                CHECK((got.norm() - block.norm()) <= 1e-14 * block.norm());
            }
        for (int g = 0; g < 2; ++g)
            for (int k = 0; k < 2; ++k) {
                const CMat B = s.ops.B_I(k).cast<cd>();
                const CMat want = B * s.ch.hbar_E2[g] * s.ch.hbar_E2[g].adjoint() * B;
                CHECK((s.qf.M_EI[g][k].dense() - want).norm() <= 1e-14 * want.norm());
            }
    }

    SECTION("zero channel gives zero matrices") {
        SystemConfig cfg = small_config(2, 1, 1);
        RawChannels raw{{CVec::Zero(2)}, {CVec::Zero(2)}};
        const QuadFormCache qf = build_quadform_cache(SelectionOperators(cfg), stack_channels(cfg, raw));
        CHECK(qf.M_II[0][0].dense().isZero(0.0));
        CHECK(qf.M_EE[0][0].dense().isZero(0.0));
    }
}

TEST_CASE("selection machinery reproduces per-beam quantities", "[system-model][property]") {
    Rng rng(3);
    for (int rep = 0; rep < 20; ++rep) {
        const Scenario s = unit_scenario(4, 3, 2, 100 + rep);
        const CVec f = random_vector(s.cfg.dim_I(), rng);
        for (int n = 0; n < 4; ++n) {
            double direct = 0.0;
            for (int k = 0; k < 3; ++k) direct += std::norm(f(k * 4 + n));
            const double via = (f.adjoint() * s.ops.Abar_I(n).cast<cd>() * f)(0).real();
            CHECK(std::abs(via - direct) <= 1e-13 * (1.0 + direct));
        }
        for (int k = 0; k < 3; ++k)
            for (int i = 0; i < 3; ++i) {
                const cd via = s.ch.hbar_I1[k].dot(s.ops.B_I(i).cast<cd>() * f);
                const cd direct = s.ch.h_I[k].dot(f.segment(i * 4, 4));
                CHECK(std::abs(via - direct) <= 1e-13 * (1.0 + std::abs(direct)));
            }
    }
}
