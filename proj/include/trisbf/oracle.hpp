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

#include <string>

#include "trisbf/metrics.hpp"

namespace trisbf {

struct OracleResult {
    bool feasible = false;
    BeamformerPair beams;
    double sum_rate = 0.0;
    long long points_evaluated = 0;
};

/// Exhaustive search for tiny scenarios (N <= 2, K = G = 1). Each entry's
/// magnitude is gridded over [0, sqrt(P_t N)] in `resolution` steps and its
/// phase over [0, 2 pi) in `resolution` steps; the first entry of each beam
/// is kept real and nonnegative since only relative phases matter. The best
/// feasible grid point is then polished by coordinate descent.
OracleResult brute_force_best(const SystemConfig& cfg, const ChannelSet& ch, int resolution = 25);

struct LiftCheckReport {
    bool passed = true;
    double max_rate_deviation = 0.0;     ///< relative
    double max_harvest_deviation = 0.0;  ///< relative
    double max_power_deviation = 0.0;    ///< relative
    std::string failed_metric;           ///< empty when passed
};

/// Compares rate, harvest and per-element power between the vector forms at
/// `bf` and the lifted forms at f f^H.
LiftCheckReport lift_equivalence_check(const BeamformerPair& bf, const ChannelSet& ch,
                                       const SelectionOperators& ops, const QuadFormCache& qf,
                                       const SystemConfig& cfg, double tol = 1e-10);

}  // namespace trisbf
