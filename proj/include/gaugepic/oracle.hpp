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

// Exact reference dynamics for cross-checking the gauge picture: the global
// propagator U(t), the complement propagators ~U_I(t) generated by
// H - H_<I>, and the derived frames U_I = ~U_I^dag U and local wavefunctions
// psi_I = ~U_I^dag psi^S.
//
// Time-independent Hamiltonians use closed forms; time-dependent ones are
// integrated with fixed-step RK4 at OracleOptions::dt.

#include "gaugepic/hamiltonian.hpp"

#include <cmath>
#include <vector>

namespace gaugepic {

struct OracleOptions {
    double dt = 1e-4;  // step for time-dependent Hamiltonians
};

struct ReferenceBundle {
    PatchCover cover;
    double time = 0.0;
    DenseOperator propagator;                 // U
    std::vector<DenseOperator> complement;    // ~U_I per cover patch
    std::vector<DenseOperator> frames;        // U_I = ~U_I^dag U
    StateVector psi_s;                        // psi^S = U psi0
    std::vector<StateVector> psi;             // psi_I = ~U_I^dag psi^S

    /// U_IJ = ~U_I^dag ~U_J.
    DenseOperator connection(std::size_t i, std::size_t j) const { return complement.at(i).adjoint() * complement.at(j); }
};

struct InteractionReference {
    DenseOperator h0;
    DenseOperator h1;
    DenseOperator u0;
    StateVector psi_i;  // U0^dag psi^S
};

namespace detail {

// Solves d/dt V = -i G(t) V from V(0) = 1 with RK4.
template <class Generator>
DenseOperator integrate_propagator(Generator&& g, std::size_t dim, double t, double dt) {
    DenseOperator v = identity(dim);
    if (t <= 0.0) return v;
    const auto n = static_cast<long long>(std::ceil(t / dt - 1e-9));
    const double h = t / static_cast<double>(n);
    const std::complex<double> minus_i(0.0, -1.0);
    for (long long k = 0; k < n; ++k) {
        const double s = static_cast<double>(k) * h;
        const DenseOperator g0 = g(s);
        const DenseOperator gm = g(s + 0.5 * h);
        const DenseOperator g1 = g(s + h);
        const DenseOperator k1 = minus_i * (g0 * v);
        const DenseOperator k2 = minus_i * (gm * (v + 0.5 * h * k1));
        const DenseOperator k3 = minus_i * (gm * (v + 0.5 * h * k2));
        const DenseOperator k4 = minus_i * (g1 * (v + h * k3));
        v += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    return v;
}

}  // namespace detail

/// Global propagator U(t) with U(0) = 1.
inline DenseOperator propagator(const LocalHamiltonian& h, double t, const OracleOptions& opts = {}) {
    if (!h.time_dependent()) return mat_exp_hermitian(h.dense(0.0), t);
    return detail::integrate_propagator([&](double s) { return h.dense(s); }, h.cover().dim(), t, opts.dt);
}

/// ~U_I(t), generated by H - H_<I> (the terms that do not touch patch I).
inline DenseOperator complement_propagator(const LocalHamiltonian& h, const Patch& patch, double t,
                                           const OracleOptions& opts = {}) {
    if (!h.time_dependent()) return mat_exp_hermitian(h.dense(0.0) - h.neighborhood(patch, 0.0), t);
    return detail::integrate_propagator([&](double s) { return DenseOperator(h.dense(s) - h.neighborhood(patch, s)); },
                                        h.cover().dim(), t, opts.dt);
}

/// psi^S(t) = U(t) psi0.
inline StateVector schrodinger_evolve(const LocalHamiltonian& h, const StateVector& psi0, double t,
                                      const OracleOptions& opts = {}) {
    if (static_cast<std::size_t>(psi0.size()) != h.cover().dim()) {
        throw ContractError("schrodinger_evolve: state dimension does not match the Hamiltonian");
    }
    if (std::abs(psi0.norm() - 1.0) > kDefaultTolerance) {
        throw ContractError("schrodinger_evolve: initial state is not normalized");
    }
    return propagator(h, t, opts) * psi0;
}

/// Assembles a bundle from U and the complement propagators.
inline ReferenceBundle make_reference_bundle(PatchCover cover, double t, DenseOperator u,
                                             std::vector<DenseOperator> complement, const StateVector& psi0) {
    ReferenceBundle b;
    b.time = t;
    b.propagator = std::move(u);
    b.complement = std::move(complement);
    b.psi_s = b.propagator * psi0;
    for (const auto& ut : b.complement) {
        b.frames.push_back(ut.adjoint() * b.propagator);
        b.psi.push_back(ut.adjoint() * b.psi_s);
    }
    b.cover = std::move(cover);
    return b;
}

/// Closed-form (or finely integrated) gauge-picture variables at time t.
inline ReferenceBundle reference_gauge_state(const LocalHamiltonian& h, const PatchCover& cover,
                                             const StateVector& psi0, double t, const OracleOptions& opts = {}) {
    if (cover.patches() != h.cover().patches()) {
        throw ContractError("reference_gauge_state: cover does not match the Hamiltonian");
    }
    std::vector<DenseOperator> complement;
    for (const Patch& p : cover.patches()) complement.push_back(complement_propagator(h, p, t, opts));
    return make_reference_bundle(cover, t, propagator(h, t, opts), std::move(complement), psi0);
}

/// <psi0| U^dag (A_1 A_2 ... A_m) U |psi0>.
inline Complex heisenberg_expectation(const LocalHamiltonian& h, const StateVector& psi0,
                                      const std::vector<LocalOperator>& ops, double t,
                                      const OracleOptions& opts = {}) {
    if (std::abs(psi0.norm() - 1.0) > kDefaultTolerance) {
        throw ContractError("heisenberg_expectation: initial state is not normalized");
    }
    const DenseOperator u = propagator(h, t, opts);
    DenseOperator product = identity(h.cover().dim());
    for (auto it = ops.rbegin(); it != ops.rend(); ++it) apply_left(it->op, it->support, product);
    const DenseOperator heisenberg = u.adjoint() * product * u;
    return psi0.dot(heisenberg * psi0);
}

/// Interaction picture with H1 = H_<J> and H0 = H - H1.
inline InteractionReference interaction_reference(const LocalHamiltonian& h, const Patch& patch,
                                                  const StateVector& psi0, double t, const OracleOptions& opts = {}) {
    InteractionReference r;
    r.h1 = h.neighborhood(patch, 0.0);
    r.h0 = h.dense(0.0) - r.h1;
    if (!h.time_dependent()) {
        r.u0 = mat_exp_hermitian(r.h0, t);
    } else {
        r.u0 = detail::integrate_propagator(
            [&](double s) { return DenseOperator(h.dense(s) - h.neighborhood(patch, s)); }, h.cover().dim(), t,
            opts.dt);
    }
    const DenseOperator complement = complement_propagator(h, patch, t, opts);
    if (frobenius_distance(complement, r.u0) > 1e-10) {
        throw std::logic_error("interaction_reference: complement propagator and U0 disagree");
    }
    r.psi_i = r.u0.adjoint() * schrodinger_evolve(h, psi0, t, opts);
    return r;
}

}  // namespace gaugepic
