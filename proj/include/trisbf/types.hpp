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

#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace trisbf {

using cd = std::complex<double>;
using CMat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;
using RMat = Eigen::MatrixXd;
using RVec = Eigen::VectorXd;

/// Logarithm base used for rates. Bits is the default everywhere.
enum class LogBase { bits, nats };

inline double log_in(LogBase base, double x) {
    return base == LogBase::bits ? std::log2(x) : std::log(x);
}

/// d/dx log_base(x) = log_factor / x
inline double log_factor(LogBase base) {
    return base == LogBase::bits ? 1.0 / std::log(2.0) : 1.0;
}

/// Raised when a lifted matrix that must be positive semidefinite is not,
/// beyond round-off.
class NumericalPsdError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Stacked beamformers: f_I holds K beams of length N back to back, f_E holds G.
struct BeamformerPair {
    CVec f_I;
    CVec f_E;
};

/// Lifted beamformers F_I = f_I f_I^H and F_E = f_E f_E^H (or any Hermitian
/// PSD relaxation of them). Also serves as the vector type of the convex
/// solver, with the real trace inner product summed over both blocks.
struct LiftedPair {
    CMat F_I;
    CMat F_E;

    LiftedPair& operator+=(const LiftedPair& o) {
        F_I += o.F_I;
        F_E += o.F_E;
        return *this;
    }
    LiftedPair& operator*=(double s) {
        F_I *= s;
        F_E *= s;
        return *this;
    }
    friend LiftedPair operator+(LiftedPair a, const LiftedPair& b) { return a += b; }
    friend LiftedPair operator-(LiftedPair a, const LiftedPair& b) {
        a.F_I -= b.F_I;
        a.F_E -= b.F_E;
        return a;
    }
    friend LiftedPair operator*(double s, LiftedPair a) { return a *= s; }

    static LiftedPair zeros(Eigen::Index dim_I, Eigen::Index dim_E) {
        return {CMat::Zero(dim_I, dim_I), CMat::Zero(dim_E, dim_E)};
    }
};

/// Re Tr(A B) for Hermitian A, B. The imaginary part is round-off only.
inline double trace_inner(const CMat& A, const CMat& B) {
    return A.cwiseProduct(B.conjugate()).sum().real();
}

inline double trace_inner(const LiftedPair& a, const LiftedPair& b) {
    return trace_inner(a.F_I, b.F_I) + trace_inner(a.F_E, b.F_E);
}

inline CMat hermitian_part(const CMat& A) { return 0.5 * (A + A.adjoint()); }

inline LiftedPair lift(const BeamformerPair& bf) {
    return {bf.f_I * bf.f_I.adjoint(), bf.f_E * bf.f_E.adjoint()};
}

}  // namespace trisbf
