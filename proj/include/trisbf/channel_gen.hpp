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

#include <array>
#include <cstdint>
#include <random>
#include <vector>

#include "trisbf/system_model.hpp"

namespace trisbf {

using Rng = std::mt19937_64;
using Point3 = std::array<double, 3>;

struct DistanceRange {
    double min = 0.0;
    double max = 0.0;
};

/// Geometry and propagation knobs for drawing random scenarios.
struct ScenarioParams {
    Point3 tris_position{0.0, 0.0, 1.5};
    DistanceRange id_distance{20.0, 50.0};
    DistanceRange eh_distance{5.0, 10.0};
    double user_height = 1.5;
    double alpha_id = 3.2;
    double alpha_eh = 2.2;
    double pl0_db = -30.0;                ///< pathloss at 1 m
    double sector_half_angle_deg = 60.0;  ///< azimuth spread around +x
    std::uint64_t seed = 1;

    void validate() const;
};

struct UserPlacement {
    std::vector<Point3> id;
    std::vector<Point3> eh;
};

double dbm_to_watt(double p_dbm);
double watt_to_dbm(double p_watt);

/// Large-scale gain 10^(pl0_db/10) * d^-alpha.
double pathloss(double pl0_db, double distance, double alpha);

double distance(const Point3& a, const Point3& b);

/// Users are dropped uniformly in radial distance and azimuth within the
/// sector in front of the surface. ID users are drawn first, then EH users.
UserPlacement place_users(const ScenarioParams& params, const SystemConfig& cfg, Rng& rng);

/// Rayleigh fading scaled by the distance-dependent pathloss.
RawChannels draw_channels(const ScenarioParams& params, const UserPlacement& positions,
                          const SystemConfig& cfg, Rng& rng);

/// place_users followed by draw_channels on a generator seeded with params.seed.
RawChannels draw_scenario(const ScenarioParams& params, const SystemConfig& cfg);

}  // namespace trisbf
