// Copyright 2026 The gaugepic Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Local generalized measurements. Kraus operators act on a patch I0; the
// local wavefunction of the host patch collapses and every other patch is
// updated by transport with the (unchanged) connections.

#include "gaugepic/gauge_state.hpp"

#include <cstdint>
#include <random>
#include <variant>
#include <vector>

namespace gaugepic {

inline constexpr double kImpossibleOutcome = 1e-12;

struct KrausSet {
    Patch patch;
    std::vector<DenseOperator> ops;  // on the local space of `patch`
};

struct KrausValidation {
    bool ok = false;
    double defect_norm = 0.0;  // ||sum_k E_k^dag E_k - 1||_F
    DenseOperator residual;    // sum_k E_k^dag E_k - 1
};

struct MeasurementRecord {
    std::size_t outcome = 0;
    double probability = 0.0;
};

/// Projectors |0><0| and |1><1| on one site.
inline KrausSet z_basis_measurement(int site) {
    DenseOperator p0 = DenseOperator::Zero(2, 2);
    DenseOperator p1 = DenseOperator::Zero(2, 2);
    p0(0, 0) = 1.0;
    p1(1, 1) = 1.0;
    return {Patch{site}, {p0, p1}};
}

inline KrausValidation validate_kraus(const KrausSet& ks, double tol = kDefaultTolerance) {
    if (ks.ops.empty()) throw ContractError("validate_kraus: empty Kraus set");
    const auto local = static_cast<Eigen::Index>(ks.patch.local_dim());
    DenseOperator sum = DenseOperator::Zero(local, local);
    for (const auto& e : ks.ops) {
        if (e.rows() != local || e.cols() != local) {
            throw ContractError("validate_kraus: Kraus operator dimension does not match patch " +
                                ks.patch.to_string());
        }
        sum += e.adjoint() * e;
    }
    KrausValidation v;
    v.residual = sum - DenseOperator::Identity(local, local);
    v.defect_norm = v.residual.norm();
    v.ok = v.defect_norm <= tol;
    return v;
}

/// Draws u in [0, 1) from the top 53 bits of one generator output.
inline double uniform_unit(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Index k with P_0 + ... + P_{k-1} <= u < P_0 + ... + P_k.
inline std::size_t sample_outcome(const std::vector<double>& probabilities, std::mt19937_64& rng) {
    const double u = uniform_unit(rng);
    double cumulative = 0.0;
    for (std::size_t k = 0; k < probabilities.size(); ++k) {
        cumulative += probabilities[k];
        if (u < cumulative) return k;
    }
    // Roundoff in the cumulative sum: take the last possible outcome.
    for (std::size_t k = probabilities.size(); k-- > 0;) {
        if (probabilities[k] > kImpossibleOutcome) return k;
    }
    return probabilities.size() - 1;
}

struct MeasurementAccess {
    static StateVector& psi(GaugeState& s, std::size_t i) { return s.psi_[i]; }
    static StateVector& reference(GaugeState& s) { return s.reference_; }
};

namespace detail {

inline std::size_t measurement_host(const GaugeState& state, const KrausSet& ks) {
    const auto host = state.cover().host_of(ks.patch);
    if (!host) {
        throw ContractError("measurement: Kraus patch " + ks.patch.to_string() + " is not inside any cover patch");
    }
    return *host;
}

inline void require_consistent(const GaugeState& state, double threshold) {
    const double defect = consistency_defect(state);
    if (defect > threshold) {
        throw ContractError("measurement: state is inconsistent (defect " + std::to_string(defect) + ")");
    }
}

}  // namespace detail

/// P_k = <psi_I0| E_k^dag E_k |psi_I0> on the first cover patch containing
/// the Kraus patch.
inline std::vector<double> measurement_probabilities(const GaugeState& state, const KrausSet& ks,
                                                     double consistency_threshold = 1e-6) {
    const auto check = validate_kraus(ks);
    if (!check.ok) {
        throw ContractError("measurement_probabilities: Kraus operators are not complete (defect " +
                            std::to_string(check.defect_norm) + ")");
    }
    const std::size_t host = detail::measurement_host(state, ks);
    detail::require_consistent(state, consistency_threshold);
    std::vector<double> p;
    for (const auto& e : ks.ops) {
        const StateVector v = detail::apply_dressed(state, host, {ks.patch, e}, state.psi(host));
        p.push_back(v.squaredNorm());
    }
    return p;
}

/// Either a forced outcome index or a generator to sample one from.
using OutcomeChoice = std::variant<std::size_t, std::mt19937_64*>;

/// Collapses psi_I0 -> P_k^{-1/2} E_k psi_I0 and transports it to every
/// other patch, psi_J -> U_{J I0} psi_I0. Connections are left untouched.
inline std::pair<GaugeState, MeasurementRecord> apply_measurement(GaugeState state, const KrausSet& ks,
                                                                  OutcomeChoice choice,
                                                                  double consistency_threshold = 1e-6) {
    const auto probabilities = measurement_probabilities(state, ks, consistency_threshold);
    std::size_t k = 0;
    if (std::holds_alternative<std::size_t>(choice)) {
        k = std::get<std::size_t>(choice);
        if (k >= probabilities.size()) throw ContractError("apply_measurement: outcome index out of range");
    } else {
        auto* rng = std::get<std::mt19937_64*>(choice);
        if (!rng) throw ContractError("apply_measurement: null sampler");
        k = sample_outcome(probabilities, *rng);
    }
    const double pk = probabilities[k];
    if (!(pk > kImpossibleOutcome)) {
        throw ContractError("apply_measurement: outcome " + std::to_string(k) + " has probability " +
                            std::to_string(pk));
    }
    const std::size_t host = detail::measurement_host(state, ks);
    StateVector collapsed = detail::apply_dressed(state, host, {ks.patch, ks.ops[k]}, state.psi(host));
    collapsed.normalize();
    for (std::size_t j = 0; j < state.cover().size(); ++j) {
        if (j == host) continue;
        MeasurementAccess::psi(state, j) = state.connection(j, host) * collapsed;
    }
    if (state.has_frames()) MeasurementAccess::reference(state) = state.frame(host).adjoint() * collapsed;
    MeasurementAccess::psi(state, host) = std::move(collapsed);
    return {std::move(state), {k, pk}};
}

}  // namespace gaugepic
