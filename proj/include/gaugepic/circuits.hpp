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

// Layered circuits of commuting local unitaries, the brickwork builder, the
// export of a circuit as a time-dependent Hamiltonian schedule, and
// light-cone audits of gauge-picture variables.

#include "gaugepic/gauge_state.hpp"
#include "gaugepic/oracle.hpp"

#include <cstdint>
#include <numbers>
#include <random>
#include <set>
#include <string>
#include <vector>

namespace gaugepic {

using Gate = LocalOperator;
using Layer = std::vector<Gate>;

struct Circuit {
    int n_sites = 0;
    std::vector<Layer> layers;

    std::size_t depth() const { return layers.size(); }
};

/// Largest ||[u_a, u_b]||_F over gate pairs of one layer (0 for disjoint supports).
inline double layer_commutation_defect(const Layer& layer) {
    double worst = 0.0;
    for (std::size_t a = 0; a < layer.size(); ++a) {
        for (std::size_t b = a + 1; b < layer.size(); ++b) {
            if (!layer[a].support.overlaps(layer[b].support)) continue;
            const Patch joint = layer[a].support.united(layer[b].support);
            const int m = static_cast<int>(joint.size());
            const DenseOperator ea = embed_operator(layer[a].op, detail::relative_patch(layer[a].support, joint), m);
            const DenseOperator eb = embed_operator(layer[b].op, detail::relative_patch(layer[b].support, joint), m);
            worst = std::max(worst, (ea * eb - eb * ea).norm());
        }
    }
    return worst;
}

/// Haar-random unitary: QR of a complex Gaussian matrix with the phases of
/// R's diagonal divided out.
inline DenseOperator haar_unitary(std::size_t dim, std::mt19937_64& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    DenseOperator z(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
    for (Eigen::Index c = 0; c < z.cols(); ++c) {
        for (Eigen::Index r = 0; r < z.rows(); ++r) {
            const double re = normal(rng);
            const double im = normal(rng);
            z(r, c) = Complex(re, im) / std::numbers::sqrt2;
        }
    }
    Eigen::HouseholderQR<DenseOperator> qr(z);
    DenseOperator q = qr.householderQ();
    const DenseOperator r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (Eigen::Index k = 0; k < q.cols(); ++k) {
        const Complex d = r(k, k);
        q.col(k) *= std::abs(d) > 0 ? d / std::abs(d) : Complex(1.0);
    }
    return q;
}

/// Alternating layers of nearest-neighbor two-qubit gates: even layers act on
/// (0,1), (2,3), ..., odd layers on (1,2), (3,4), .... Gates are Haar-random,
/// drawn deterministically from the seed.
inline Circuit brickwork(int n, int depth, std::uint64_t seed) {
    if (n < 2) throw ContractError("brickwork: need at least 2 sites");
    if (depth < 1) throw ContractError("brickwork: depth must be at least 1");
    std::mt19937_64 rng(seed);
    Circuit c;
    c.n_sites = n;
    for (int layer = 0; layer < depth; ++layer) {
        Layer gates;
        for (int i = layer % 2; i + 1 < n; i += 2) gates.push_back({Patch{i, i + 1}, haar_unitary(4, rng)});
        c.layers.push_back(std::move(gates));
    }
    return c;
}

/// Applies each layer in order with apply_commuting_layer.
inline GaugeState run_circuit(GaugeState state, const Circuit& circuit, double tol = 1e-12) {
    for (const Layer& layer : circuit.layers) {
        const double defect = layer_commutation_defect(layer);
        if (defect > tol) {
            throw ContractError("run_circuit: layer gates do not commute (defect " + std::to_string(defect) + ")");
        }
        state = apply_commuting_layer(std::move(state), layer);
    }
    return state;
}

/// Product of the gates of one layer as a global operator applied to m (from the left).
inline void apply_layer_left(const Layer& layer, DenseOperator& m) {
    for (const Gate& g : layer) apply_left(g.op, g.support, m);
}

/// Reference bundle of a circuit: U is the full circuit, ~U_I the circuit
/// with every gate hosted by a patch overlapping I removed.
inline ReferenceBundle circuit_reference(const Circuit& circuit, const PatchCover& cover, const StateVector& psi0,
                                         std::size_t n_layers) {
    n_layers = std::min(n_layers, circuit.depth());
    DenseOperator u = identity(cover.dim());
    std::vector<DenseOperator> complement(cover.size(), identity(cover.dim()));
    for (std::size_t l = 0; l < n_layers; ++l) {
        const Layer& layer = circuit.layers[l];
        apply_layer_left(layer, u);
        for (std::size_t i = 0; i < cover.size(); ++i) {
            for (const Gate& g : layer) {
                const auto host = cover.host_of(g.support);
                if (!host) throw ContractError("circuit_reference: gate outside every cover patch");
                if (!cover.overlaps(i, *host)) apply_left(g.op, g.support, complement[i]);
            }
        }
    }
    return make_reference_bundle(cover, static_cast<double>(n_layers), std::move(u), std::move(complement), psi0);
}

inline ReferenceBundle circuit_reference(const Circuit& circuit, const PatchCover& cover, const StateVector& psi0) {
    return circuit_reference(circuit, cover, psi0, circuit.depth());
}

/// Hermitian G with exp(-i G) = u, from the Schur form of the unitary u.
inline DenseOperator unitary_generator(const DenseOperator& u) {
    Eigen::ComplexSchur<DenseOperator> schur(u);
    const DenseOperator& q = schur.matrixU();
    const DenseOperator& t = schur.matrixT();
    Eigen::VectorXcd angles(t.rows());
    for (Eigen::Index k = 0; k < t.rows(); ++k) angles(k) = -std::arg(t(k, k));
    DenseOperator g = q * angles.asDiagonal() * q.adjoint();
    return 0.5 * (g + g.adjoint());
}

/// Smooth pulse profile of layer l: 1 - cos(2 pi (t - l)) on [l, l + 1], zero
/// elsewhere. It integrates to 1 over the layer interval.
inline double layer_pulse(double t, int layer) {
    const double s = t - static_cast<double>(layer);
    if (s < 0.0 || s > 1.0) return 0.0;
    return 1.0 - std::cos(2.0 * std::numbers::pi * s);
}

/// The circuit as a time-dependent Hamiltonian: layer l acts during
/// [l, l + 1] with generator G_J = i log u_J modulated by layer_pulse, so the
/// evolution over that interval is exactly the layer.
inline LocalHamiltonian circuit_schedule(const Circuit& circuit, const PatchCover& cover) {
    LocalHamiltonian h(cover);
    for (std::size_t l = 0; l < circuit.depth(); ++l) {
        for (const Gate& g : circuit.layers[l]) {
            if (!cover.index_of(g.support)) {
                throw ContractError("circuit_schedule: gate support " + g.support.to_string() + " is not a cover patch");
            }
            const int layer = static_cast<int>(l);
            h.add_term({g.support, unitary_generator(g.op), [layer](double t) { return layer_pulse(t, layer); }});
        }
    }
    return h;
}

struct LightConePrediction {
    Patch patch;
    int depth = 0;
    std::set<int> allowed_sites;
};

/// Sites within chain distance `depth` of the patch.
inline LightConePrediction light_cone(const Patch& patch, int depth, int n_sites) {
    LightConePrediction p{patch, depth, {}};
    for (int s = 0; s < n_sites; ++s) {
        for (int q : patch.sites()) {
            if (std::abs(s - q) <= depth) {
                p.allowed_sites.insert(s);
                break;
            }
        }
    }
    return p;
}

struct SupportAudit {
    std::string variable;           // "U_I" or "U_IJ"
    Patch patch;                    // I
    std::optional<Patch> partner;   // J for connections
    std::set<int> support;
    std::set<int> allowed;
    std::set<int> violations;       // support sites outside the cone
    int margin = 0;                 // allowed sites not in the support
    double worst_outside_defect = 0.0;  // largest identity-factor defect outside the cone
};

struct LightConeAudit {
    Patch patch;
    int depth = 0;
    double tolerance = 0.0;
    std::vector<SupportAudit> entries;

    bool passed() const {
        for (const auto& e : entries) if (!e.violations.empty()) return false;
        return true;
    }
};

namespace detail {

inline SupportAudit audit_operator(const DenseOperator& m, std::string variable, const Patch& patch,
                                   std::optional<Patch> partner, const std::set<int>& allowed, double tol) {
    SupportAudit a{std::move(variable), patch, std::move(partner), {}, allowed, {}, 0, 0.0};
    const int n = static_cast<int>(std::countr_zero(static_cast<std::size_t>(m.rows())));
    for (int s = 0; s < n; ++s) {
        const double defect = identity_factor_defect(m, s);
        if (defect > tol) a.support.insert(s);
        if (!allowed.count(s)) {
            a.worst_outside_defect = std::max(a.worst_outside_defect, defect);
            if (defect > tol) a.violations.insert(s);
        }
    }
    a.margin = static_cast<int>(allowed.size()) - static_cast<int>(a.support.size() - a.violations.size());
    return a;
}

}  // namespace detail

/// Checks that U_I and U_IJ (J overlapping I) act as the identity outside
/// the depth-`depth` light cone of I (of I and J for connections). The state
/// must have been produced by a depth-`depth` circuit from t = 0 in
/// generator mode.
inline LightConeAudit audit_lightcone(const GaugeState& state, const Patch& patch, int depth, double tol = 1e-12) {
    const std::size_t i = state.cover().require_index(patch);
    const int n = state.cover().n_sites();
    LightConeAudit audit{patch, depth, tol, {}};
    const auto cone = light_cone(patch, depth, n).allowed_sites;
    audit.entries.push_back(detail::audit_operator(state.frame(i), "U_I", patch, std::nullopt, cone, tol));
    for (std::size_t j : state.cover().neighbors(i)) {
        if (j == i) continue;
        const Patch& other = state.cover().patch(j);
        std::set<int> joint = cone;
        const auto other_cone = light_cone(other, depth, n).allowed_sites;
        joint.insert(other_cone.begin(), other_cone.end());
        audit.entries.push_back(detail::audit_operator(state.connection(i, j), "U_IJ", patch, other, joint, tol));
    }
    return audit;
}

}  // namespace gaugepic
