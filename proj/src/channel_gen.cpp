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

#include "trisbf/channel_gen.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace trisbf {

void ScenarioParams::validate() const {
    for (const DistanceRange& r : {id_distance, eh_distance})
        if (!(r.min > 0.0 && r.min <= r.max))
            throw std::invalid_argument("ScenarioParams: distance ranges need 0 < min <= max");
    if (!(alpha_id > 0.0 && alpha_eh > 0.0))
        throw std::invalid_argument("ScenarioParams: pathloss exponents must be positive");
    if (!(sector_half_angle_deg >= 0.0 && sector_half_angle_deg <= 180.0))
        throw std::invalid_argument("ScenarioParams: sector half-angle must lie in [0, 180]");
    const double dz = std::abs(user_height - tris_position[2]);
    if (dz > id_distance.min || dz > eh_distance.min)
        throw std::invalid_argument(
            "ScenarioParams: height offset exceeds the smallest allowed distance");
}

double dbm_to_watt(double p_dbm) { return std::pow(10.0, (p_dbm - 30.0) / 10.0); }

double watt_to_dbm(double p_watt) { return 10.0 * std::log10(p_watt) + 30.0; }

double pathloss(double pl0_db, double d, double alpha) {
    return std::pow(10.0, pl0_db / 10.0) * std::pow(d, -alpha);
}

double distance(const Point3& a, const Point3& b) {
    return std::hypot(a[0] - b[0], a[1] - b[1], a[2] - b[2]);
}

namespace {

Point3 drop(const ScenarioParams& p, const DistanceRange& range, Rng& rng) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double d = range.min + (range.max - range.min) * unit(rng);
    const double half = p.sector_half_angle_deg * std::numbers::pi / 180.0;
    const double phi = -half + 2.0 * half * unit(rng);
    const double dz = p.user_height - p.tris_position[2];
    const double r = std::sqrt(std::max(0.0, d * d - dz * dz));
    return {p.tris_position[0] + r * std::cos(phi), p.tris_position[1] + r * std::sin(phi),
            p.user_height};
}

CVec rayleigh(int n, double gain, Rng& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    const double scale = std::sqrt(gain / 2.0);
    CVec h(n);
    for (int i = 0; i < n; ++i) {
        const double re = normal(rng);
        const double im = normal(rng);
        h(i) = scale * cd(re, im);
    }
    return h;
}

}  // namespace

UserPlacement place_users(const ScenarioParams& params, const SystemConfig& cfg, Rng& rng) {
    params.validate();
    UserPlacement out;
    for (int k = 0; k < cfg.K; ++k) out.id.push_back(drop(params, params.id_distance, rng));
    for (int g = 0; g < cfg.G; ++g) out.eh.push_back(drop(params, params.eh_distance, rng));
    return out;
}

RawChannels draw_channels(const ScenarioParams& params, const UserPlacement& positions,
                          const SystemConfig& cfg, Rng& rng) {
    if (positions.id.size() != static_cast<std::size_t>(cfg.K) ||
        positions.eh.size() != static_cast<std::size_t>(cfg.G))
        throw std::invalid_argument("draw_channels: placement does not match K and G");
    RawChannels raw;
    for (const Point3& p : positions.id) {
        const double d = distance(p, params.tris_position);
        raw.id.push_back(rayleigh(cfg.N, pathloss(params.pl0_db, d, params.alpha_id), rng));
    }
    for (const Point3& p : positions.eh) {
        const double d = distance(p, params.tris_position);
        raw.eh.push_back(rayleigh(cfg.N, pathloss(params.pl0_db, d, params.alpha_eh), rng));
    }
    return raw;
}

RawChannels draw_scenario(const ScenarioParams& params, const SystemConfig& cfg) {
    Rng rng(params.seed);
    const UserPlacement users = place_users(params, cfg, rng);
    return draw_channels(params, users, cfg, rng);
}

}  // namespace trisbf
