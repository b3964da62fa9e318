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

#include <numbers>

#include "test_support.hpp"
#include "trisbf/oracle.hpp"

using namespace trisbf;
using namespace trisbf::testing;
using Catch::Matchers::WithinRel;

namespace {

Scenario tiny(std::uint64_t seed, bool zero_eh = false) {
    Scenario s = physical_scenario(2, 1, 1, seed);
    if (zero_eh) {
        RawChannels raw{{s.ch.h_I[0]}, {CVec::Zero(2)}};
        s = Scenario(s.cfg, stack_channels(s.cfg, raw));
    }
    return s;
}

}  // namespace

TEST_CASE("single-user optimum is the equal-gain phase-matched beam", "[oracle]") {
    for (std::uint64_t seed = 0; seed < 4; ++seed) {
        const Scenario s = tiny(10 + seed, true);
        const OracleResult r = brute_force_best(s.cfg, s.ch, 25);
        REQUIRE(r.feasible);
        // Every element at full power with its phase matched to the channel.
        const double amplitude = s.ch.h_I[0].cwiseAbs().sum();
        const double closed = std::log2(1.0 + s.cfg.P_t * amplitude * amplitude / s.cfg.sigma2[0]);
        CHECK(rel_diff(r.sum_rate, closed) <= 0.01);
        CHECK(r.sum_rate <= closed * (1.0 + 1e-12));
    }
}

TEST_CASE("oracle beats hand-picked feasible points", "[oracle]") {
    const Scenario s = tiny(20, true);
    const OracleResult r = brute_force_best(s.cfg, s.ch, 15);
    REQUIRE(r.feasible);
    Rng rng(20);
    for (int rep = 0; rep < 50; ++rep) {
        BeamformerPair bf{random_vector(2, rng), CVec::Zero(2)};
        for (int n = 0; n < 2; ++n) bf.f_I(n) *= std::sqrt(s.cfg.P_t) / std::abs(bf.f_I(n)) *
                                                 std::uniform_real_distribution<double>(0, 1)(rng);
        CHECK(r.sum_rate >= sum_rate(bf, s.ch, s.ops, s.cfg));
    }
}

TEST_CASE("finer grids are never worse", "[oracle]") {
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
        Scenario s = tiny(30 + seed);
        s.cfg.Q_t = 0.1 * s.cfg.zeta * s.cfg.P_t * std::pow(s.ch.h_E[0].cwiseAbs().sum(), 2);
        const OracleResult coarse = brute_force_best(s.cfg, s.ch, 15);
        const OracleResult fine = brute_force_best(s.cfg, s.ch, 25);
        REQUIRE(coarse.feasible);
        REQUIRE(fine.feasible);
        CHECK(fine.sum_rate >= coarse.sum_rate - 1e-6);
        CHECK(fine.points_evaluated > coarse.points_evaluated);
    }
}

TEST_CASE("oracle beams honour the constraints", "[oracle]") {
    Scenario s = tiny(40);
    s.cfg.Q_t = 0.3 * s.cfg.zeta * s.cfg.P_t * std::pow(s.ch.h_E[0].cwiseAbs().sum(), 2);
    const OracleResult r = brute_force_best(s.cfg, s.ch, 20);
    REQUIRE(r.feasible);
    for (int n = 0; n < 2; ++n) CHECK(per_antenna_power(r.beams, s.ops, n) <= s.cfg.P_t * (1 + 1e-12));
    CHECK(total_harvest(r.beams, s.ch, s.ops, s.cfg) >= s.cfg.Q_t);
    CHECK_THAT(sum_rate(r.beams, s.ch, s.ops, s.cfg), WithinRel(r.sum_rate, 1e-12));
}

TEST_CASE("oracle reports infeasibility and rejects large scenarios", "[oracle]") {
    Scenario s = tiny(50);
    s.cfg.Q_t = 1e6;
    CHECK_FALSE(brute_force_best(s.cfg, s.ch, 10).feasible);

    const Scenario big = physical_scenario(3, 1, 1, 51);
    CHECK_THROWS_AS(brute_force_best(big.cfg, big.ch), std::invalid_argument);
    CHECK_THROWS_AS(brute_force_best(s.cfg, s.ch, 1), std::invalid_argument);
}

TEST_CASE("lift equivalence check", "[oracle]") {
    SECTION("random pairs pass") {
        Rng rng(60);
        for (int rep = 0; rep < 100; ++rep) {
            const Scenario s = physical_scenario(4, 2, 2, 600 + rep);
            const LiftCheckReport r =
                lift_equivalence_check(random_beams(s.cfg, rng), s.ch, s.ops, s.qf, s.cfg);
            CHECK(r.passed);
            CHECK(r.failed_metric.empty());
        }
    }

    SECTION("zero beams") {
        const Scenario s = physical_scenario(4, 2, 2, 61);
        const BeamformerPair zero{CVec::Zero(8), CVec::Zero(8)};
        const LiftCheckReport r = lift_equivalence_check(zero, s.ch, s.ops, s.qf, s.cfg);
        CHECK(r.passed);
        CHECK(r.max_rate_deviation == 0.0);
        CHECK(r.max_harvest_deviation == 0.0);
        CHECK(r.max_power_deviation == 0.0);
        CHECK(harvest_lifted(lift(zero), s.qf, 0, s.cfg) == 0.0);
    }

    SECTION("one nonzero entry by hand") {
        const Scenario s = physical_scenario(2, 1, 1, 62);
        BeamformerPair bf{CVec::Zero(2), CVec::Zero(2)};
        bf.f_I(1) = cd(0.03, -0.04);
        const LiftCheckReport r = lift_equivalence_check(bf, s.ch, s.ops, s.qf, s.cfg);
        CHECK(r.passed);
        const double signal = 0.0025 * std::norm(s.ch.h_I[0](1));
        CHECK_THAT(rate_lifted(lift(bf), s.qf, 0, s.cfg),
                   WithinRel(std::log2(1.0 + signal / s.cfg.sigma2[0]), 1e-12));
        CHECK_THAT(per_antenna_power_lifted(lift(bf), s.ops, 1), WithinRel(0.0025, 1e-12));
    }

    SECTION("a failed comparison names the metric") {
        const Scenario s = physical_scenario(2, 1, 1, 63);
        Rng rng(63);
        const LiftCheckReport r =
            lift_equivalence_check(random_beams(s.cfg, rng), s.ch, s.ops, s.qf, s.cfg, -1.0);
        CHECK_FALSE(r.passed);
        CHECK(r.failed_metric == "rate");
    }
}
