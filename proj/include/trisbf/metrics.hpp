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

#include <utility>

#include "trisbf/system_model.hpp"

namespace trisbf {

// ---------------------------------------------------------------------------
// Vector (beamformer) forms. Indices n, k, g are zero-based.
// ---------------------------------------------------------------------------

/// f_I^H Abar_I[n] f_I + f_E^H Abar_E[n] f_E
double per_antenna_power(const BeamformerPair& bf, const SelectionOperators& ops, int n);

double sinr(const BeamformerPair& bf, const ChannelSet& ch, const SelectionOperators& ops,
            int k, const SystemConfig& cfg);

/// log(1 + SINR) in the configured base.
double rate(const BeamformerPair& bf, const ChannelSet& ch, const SelectionOperators& ops,
            int k, const SystemConfig& cfg);

double sum_rate(const BeamformerPair& bf, const ChannelSet& ch, const SelectionOperators& ops,
                const SystemConfig& cfg);

/// Linear EH model: zeta times the power received from every ID and EH beam.
double harvested_energy(const BeamformerPair& bf, const ChannelSet& ch,
                        const SelectionOperators& ops, int g, const SystemConfig& cfg);

double total_harvest(const BeamformerPair& bf, const ChannelSet& ch,
                     const SelectionOperators& ops, const SystemConfig& cfg);

// ---------------------------------------------------------------------------
// Lifted (matrix) forms.
// ---------------------------------------------------------------------------

/// Per-element power Tr(F_I Abar_I[n]) + Tr(F_E Abar_E[n]).
double per_antenna_power_lifted(const LiftedPair& lift, const SelectionOperators& ops, int n);

double rate_lifted(const LiftedPair& lift, const QuadFormCache& qf, int k,
                   const SystemConfig& cfg);

double sum_rate_lifted(const LiftedPair& lift, const QuadFormCache& qf, const SystemConfig& cfg);

double harvest_lifted(const LiftedPair& lift, const QuadFormCache& qf, int g,
                      const SystemConfig& cfg);

double total_harvest_lifted(const LiftedPair& lift, const QuadFormCache& qf,
                            const SystemConfig& cfg);

/// Concave pieces of the rate: first is the log of signal + interference +
/// noise, second the log of interference + noise.
struct DcParts {
    double full = 0.0;
    double interference = 0.0;
};

DcParts dc_parts(const LiftedPair& lift, const QuadFormCache& qf, int k, const SystemConfig& cfg);

/// Gradient of the interference log term at an expansion point.
struct DcGradients {
    CMat G_I;
    CMat G_E;
    double value0 = 0.0;
};

DcGradients dc_gradient(const LiftedPair& lift0, const QuadFormCache& qf, int k,
                        const SystemConfig& cfg);

/// First-order over-estimate of the interference log term around lift0.
double sca_rate_bound(const LiftedPair& lift, const LiftedPair& lift0, const QuadFormCache& qf,
                      int k, const SystemConfig& cfg);

// ---------------------------------------------------------------------------
// Spectral quantities used by the rank-one penalty.
// ---------------------------------------------------------------------------

struct TopEigen {
    double value = 0.0;
    CVec vector;  ///< unit norm, first significant entry real positive
};

/// Largest eigenpair of a Hermitian matrix. When the top eigenvalue is
/// (near-)degenerate the vector is the normalized projection of the first
/// standard basis vector with a nonzero component in the top eigenspace,
/// so the choice does not depend on the eigensolver's basis.
TopEigen top_eigen(const CMat& F);

/// Rotates v so its first entry with magnitude above tol * ||v|| is real positive.
void normalize_phase(CVec& v, double tol = 1e-10);

double nuclear_norm(const CMat& F);
double spectral_norm(const CMat& F);

/// ||F||_* - ||F||_2 for one block, clamped at zero against round-off.
double rank_one_residual(const CMat& F);

/// Throws NumericalPsdError when the smallest eigenvalue is below
/// -tol * ||F||_2.
void require_psd(const CMat& F, const char* what, double tol = 1e-9);

/// Linearized spectral norm around F0: ||F0||_2 + Re Tr(v v^H (F - F0)).
double spectral_minorant(const CMat& F, const CMat& F0);

/// Penalty surrogate ||F||_* - spectral_minorant(F, F0) per block.
struct PenaltyTerms {
    double I = 0.0;
    double E = 0.0;
};

PenaltyTerms penalty_terms(const LiftedPair& lift, const LiftedPair& lift0);

}  // namespace trisbf
