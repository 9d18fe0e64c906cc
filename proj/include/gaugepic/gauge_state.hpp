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

// Gauge-picture dynamics: one full-dimension local wavefunction psi_I per
// cover patch, frame unitaries U_I, and connections U_IJ = U_I U_J^dagger,
// evolving under equations of motion that involve only terms near each patch.
//
// Two integration modes are supported:
//   generator: integrate d/dt U_I = -i U_I sum_J U_J^dag H_J^G U_J, and set
//              psi_I = U_I psi^H. The cocycle U_IJ U_JK = U_IK holds by
//              construction.
//   direct:    integrate d/dt psi_I = -i H^G_<I> psi_I and
//              d/dt U_IJ = -i H^G_<I> U_IJ + i U_IJ H^G_<J> for the stored
//              pairs, with H^G_<I> = sum_J U_IJ H_J^G U_JI.
//
// Operators in the gauge picture are A_I^G = D_I A_I^S D_I^dag, where D_I is
// the accumulated gauge transformation of patch I (identity unless
// gauge_transform was applied).

#include "gaugepic/hamiltonian.hpp"

#include <cmath>
#include <deque>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace gaugepic {

enum class EvolutionMode { generator, direct };

inline const char* to_string(EvolutionMode m) { return m == EvolutionMode::generator ? "generator" : "direct"; }

/// Raised when integration produces non-finite values or loses normalization.
class DivergenceError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

struct IntegratorConfig {
    double dt = 1e-3;
    // Only RK4 is implemented.
    int reunitarize_every = 100;  // polar re-unitarization period in steps, 0 = never
    bool renormalize = false;
    double divergence_norm_defect = 1e-3;
};

struct DefectReport {
    double consistency = 0.0;  // max ||U_IJ psi_J - psi_I||
    double cocycle = 0.0;      // max ||U_IJ U_JK - U_IK||_F
    double unitarity = 0.0;    // max ||M^dag M - 1||_F over frames or stored links
    double norm = 0.0;         // max | ||psi_I|| - 1 |
};

/// Unitary Lambda_I per patch; patches not listed transform trivially.
struct GaugeTransform {
    std::map<Patch, DenseOperator> lambdas;
};

class GaugeState;
GaugeState init(const StateVector& psi0, PatchCover cover, EvolutionMode mode = EvolutionMode::generator);

class GaugeState {
  public:
    using PairKey = std::pair<std::size_t, std::size_t>;  // first < second

    const PatchCover& cover() const { return cover_; }
    EvolutionMode mode() const { return mode_; }
    double time() const { return time_; }
    std::size_t steps() const { return steps_; }
    std::size_t dim() const { return cover_.dim(); }

    const StateVector& psi(std::size_t i) const { return psi_.at(i); }
    const StateVector& psi(const Patch& p) const { return psi_.at(cover_.require_index(p)); }

    bool has_frames() const { return mode_ == EvolutionMode::generator; }

    /// Frame unitary U_I. Generator mode only.
    const DenseOperator& frame(std::size_t i) const {
        require_frames("frame");
        return frames_.at(i);
    }
    const DenseOperator& frame(const Patch& p) const { return frame(cover_.require_index(p)); }

    /// The time-independent wavefunction psi^H with psi_I = U_I psi^H. Generator mode only.
    const StateVector& heisenberg_state() const {
        require_frames("heisenberg_state");
        return reference_;
    }

    /// Stored connections U_IJ (I < J). Direct mode only.
    const std::map<PairKey, DenseOperator>& links() const { return links_; }

    bool dressed(std::size_t i) const { return dressing_.at(i).has_value(); }
    /// Accumulated gauge transformation D_I (identity when undressed).
    DenseOperator dressing(std::size_t i) const {
        return dressing_.at(i) ? *dressing_[i] : identity(dim());
    }

    /// U_IJ. Generator mode: U_I U_J^dag. Direct mode: the stored link, or
    /// the composition of stored links along a shortest path.
    DenseOperator connection(std::size_t i, std::size_t j) const {
        check_index(i);
        check_index(j);
        if (i == j) return identity(dim());
        if (mode_ == EvolutionMode::generator) return frames_[i] * frames_[j].adjoint();
        if (auto direct = stored_link(i, j)) return *direct;
        const auto path = link_path(i, j);
        if (path.empty()) {
            throw ContractError("connection: no chain of stored connections joins " + cover_.patch(i).to_string() +
                                " and " + cover_.patch(j).to_string());
        }
        DenseOperator out = *stored_link(path[0], path[1]);
        for (std::size_t k = 1; k + 1 < path.size(); ++k) out = out * *stored_link(path[k], path[k + 1]);
        return out;
    }

    DenseOperator connection(const Patch& a, const Patch& b) const {
        return connection(cover_.require_index(a), cover_.require_index(b));
    }

    /// Pairs over which consistency is checked: overlapping pairs in generator
    /// mode, every stored link in direct mode.
    std::vector<PairKey> checked_pairs() const {
        if (mode_ == EvolutionMode::generator) return cover_.overlapping_pairs();
        std::vector<PairKey> out;
        for (const auto& [key, _] : links_) out.push_back(key);
        return out;
    }

  private:
    friend GaugeState init(const StateVector&, PatchCover, EvolutionMode);
    friend GaugeState init(const StateVector&, const LocalHamiltonian&, EvolutionMode);
    friend GaugeState step(GaugeState, const LocalHamiltonian&, const IntegratorConfig&);
    friend GaugeState gauge_transform(GaugeState, const GaugeTransform&);
    friend GaugeState apply_commuting_layer(GaugeState, const std::vector<LocalOperator>&, double);
    friend struct MeasurementAccess;
    friend struct GaugeKernels;

    void require_frames(const char* who) const {
        if (mode_ != EvolutionMode::generator) {
            throw ContractError(std::string(who) + ": frames are only tracked in generator mode");
        }
    }

    void check_index(std::size_t i) const {
        if (i >= cover_.size()) throw ContractError("patch index " + std::to_string(i) + " out of range");
    }

    // U_ij for a stored link, taking the adjoint when i > j.
    std::optional<DenseOperator> stored_link(std::size_t i, std::size_t j) const {
        if (i < j) {
            auto it = links_.find({i, j});
            if (it != links_.end()) return it->second;
        } else {
            auto it = links_.find({j, i});
            if (it != links_.end()) return DenseOperator(it->second.adjoint());
        }
        return std::nullopt;
    }

    // Breadth-first search over the link graph; empty when unreachable.
    std::vector<std::size_t> link_path(std::size_t from, std::size_t to) const {
        std::vector<std::vector<std::size_t>> adj(cover_.size());
        for (const auto& [key, _] : links_) {
            adj[key.first].push_back(key.second);
            adj[key.second].push_back(key.first);
        }
        std::vector<std::ptrdiff_t> parent(cover_.size(), -1);
        std::deque<std::size_t> queue{from};
        parent[from] = static_cast<std::ptrdiff_t>(from);
        while (!queue.empty()) {
            const std::size_t v = queue.front();
            queue.pop_front();
            if (v == to) break;
            for (std::size_t w : adj[v]) {
                if (parent[w] < 0) {
                    parent[w] = static_cast<std::ptrdiff_t>(v);
                    queue.push_back(w);
                }
            }
        }
        if (parent[to] < 0) return {};
        std::vector<std::size_t> path{to};
        while (path.back() != from) path.push_back(static_cast<std::size_t>(parent[path.back()]));
        return {path.rbegin(), path.rend()};
    }

    PatchCover cover_;
    EvolutionMode mode_ = EvolutionMode::generator;
    double time_ = 0.0;
    std::size_t steps_ = 0;
    std::vector<StateVector> psi_;
    StateVector reference_;                        // generator mode
    std::vector<DenseOperator> frames_;            // generator mode
    std::map<PairKey, DenseOperator> links_;       // direct mode
    std::vector<std::optional<DenseOperator>> dressing_;
};

/// psi_I(0) = psi0 for every patch, all frames and connections identity.
inline GaugeState init(const StateVector& psi0, PatchCover cover, EvolutionMode mode) {
    if (static_cast<std::size_t>(psi0.size()) != cover.dim()) {
        throw ContractError("init: state has dimension " + std::to_string(psi0.size()) + ", cover needs " +
                            std::to_string(cover.dim()));
    }
    if (!psi0.allFinite() || std::abs(psi0.norm() - 1.0) > kDefaultTolerance) {
        throw ContractError("init: initial state is not normalized (norm " + std::to_string(psi0.norm()) + ")");
    }
    GaugeState s;
    s.mode_ = mode;
    s.psi_.assign(cover.size(), psi0);
    s.dressing_.assign(cover.size(), std::nullopt);
    if (mode == EvolutionMode::generator) {
        s.reference_ = psi0;
        s.frames_.assign(cover.size(), identity(cover.dim()));
    } else {
        for (const auto& key : cover.overlapping_pairs()) s.links_.emplace(key, identity(cover.dim()));
    }
    s.cover_ = std::move(cover);
    return s;
}

/// As init(psi0, cover, mode), additionally storing (in direct mode) every
/// connection the Hamiltonian's multi-patch terms reference.
inline GaugeState init(const StateVector& psi0, const LocalHamiltonian& hamiltonian,
                       EvolutionMode mode = EvolutionMode::generator) {
    GaugeState s = init(psi0, hamiltonian.cover(), mode);
    if (mode == EvolutionMode::direct) {
        for (std::size_t i = 0; i < s.cover_.size(); ++i) {
            for (std::size_t k : hamiltonian.touching(i).generalized) {
                for (std::size_t j : hamiltonian.generalized_patches(k)) {
                    if (j != i) s.links_.try_emplace({std::min(i, j), std::max(i, j)}, identity(s.dim()));
                }
            }
        }
    }
    return s;
}

inline DenseOperator connection(const GaugeState& state, const Patch& a, const Patch& b) {
    return state.connection(a, b);
}

/// Building blocks shared by the equations of motion, the effective
/// Hamiltonian, and layer application.
struct GaugeKernels {
    // Effective frames F_J = D_J^dag U_J (generator mode).
    static std::vector<DenseOperator> effective_frames(const GaugeState& s, const std::vector<DenseOperator>& frames) {
        std::vector<DenseOperator> out;
        out.reserve(frames.size());
        for (std::size_t j = 0; j < frames.size(); ++j) {
            out.push_back(s.dressing_[j] ? DenseOperator(s.dressing_[j]->adjoint() * frames[j]) : frames[j]);
        }
        return out;
    }

    // F^dag (tau F), with tau applied on its patch.
    static DenseOperator pulled_back(const DenseOperator& f, const LocalOperator& tau) {
        DenseOperator tf = f;
        apply_left(tau.op, tau.support, tf);
        return f.adjoint() * tf;
    }

    // S_I = sum over terms touching I of c(t) prod_f F_f^dag tau_f F_f, for
    // every patch I, so that d/dt U_I = -i U_I S_I.
    static std::vector<DenseOperator> pulled_back_neighborhoods(const LocalHamiltonian& h,
                                                                const std::vector<DenseOperator>& f, double t) {
        const auto dim = static_cast<Eigen::Index>(h.cover().dim());
        std::vector<DenseOperator> local(h.terms().size());
        for (std::size_t k = 0; k < h.terms().size(); ++k) {
            const auto& term = h.terms()[k];
            const double c = term.coefficient(t);
            local[k] = c == 0.0 ? DenseOperator::Zero(dim, dim)
                                : DenseOperator(c * pulled_back(f[h.term_patch(k)], {term.patch, term.op}));
        }
        std::vector<DenseOperator> general(h.generalized_terms().size());
        for (std::size_t k = 0; k < h.generalized_terms().size(); ++k) {
            const auto& term = h.generalized_terms()[k];
            const double c = term.coefficient(t);
            if (c == 0.0) {
                general[k] = DenseOperator::Zero(dim, dim);
                continue;
            }
            const auto& patches = h.generalized_patches(k);
            DenseOperator prod = pulled_back(f[patches[0]], term.factors[0]);
            for (std::size_t m = 1; m < term.factors.size(); ++m) {
                prod = prod * pulled_back(f[patches[m]], term.factors[m]);
            }
            general[k] = c * prod;
        }
        std::vector<DenseOperator> out(h.cover().size(), DenseOperator::Zero(dim, dim));
        for (std::size_t i = 0; i < out.size(); ++i) {
            const auto& touch = h.touching(i);
            for (std::size_t k : touch.local) out[i] += local[k];
            for (std::size_t k : touch.generalized) out[i] += general[k];
        }
        return out;
    }

    // Connection U_ij from a direct-mode link list.
    static DenseOperator link_of(const std::map<GaugeState::PairKey, DenseOperator>& links, std::size_t i,
                                 std::size_t j, std::size_t dim) {
        if (i == j) return identity(dim);
        if (i < j) {
            auto it = links.find({i, j});
            if (it == links.end()) throw ContractError("missing stored connection");
            return it->second;
        }
        auto it = links.find({j, i});
        if (it == links.end()) throw ContractError("missing stored connection");
        return it->second.adjoint();
    }

    // T tau T^dag with T = U_ij D_j, i.e. U_ij tau_j^G U_ji.
    static DenseOperator transported(const GaugeState& s, const std::map<GaugeState::PairKey, DenseOperator>& links,
                                     std::size_t i, std::size_t j, const LocalOperator& tau) {
        const std::size_t dim = s.dim();
        if (i == j && !s.dressing_[j]) return embed_operator(tau.op, tau.support, s.cover_.n_sites());
        DenseOperator transport = link_of(links, i, j, dim);
        if (s.dressing_[j]) transport = transport * *s.dressing_[j];
        DenseOperator right = transport.adjoint();
        apply_left(tau.op, tau.support, right);
        return transport * right;
    }

    // H^G_<I> for every patch from direct-mode links.
    static std::vector<DenseOperator> direct_neighborhoods(const GaugeState& s, const LocalHamiltonian& h,
                                                           const std::map<GaugeState::PairKey, DenseOperator>& links,
                                                           double t) {
        const auto dim = static_cast<Eigen::Index>(s.dim());
        std::vector<DenseOperator> out(s.cover_.size(), DenseOperator::Zero(dim, dim));
        for (std::size_t i = 0; i < out.size(); ++i) {
            const auto& touch = h.touching(i);
            for (std::size_t k : touch.local) {
                const auto& term = h.terms()[k];
                const double c = term.coefficient(t);
                if (c == 0.0) continue;
                out[i] += c * transported(s, links, i, h.term_patch(k), {term.patch, term.op});
            }
            for (std::size_t k : touch.generalized) {
                const auto& term = h.generalized_terms()[k];
                const double c = term.coefficient(t);
                if (c == 0.0) continue;
                const auto& patches = h.generalized_patches(k);
                DenseOperator prod = transported(s, links, i, patches[0], term.factors[0]);
                for (std::size_t m = 1; m < term.factors.size(); ++m) {
                    prod = prod * transported(s, links, i, patches[m], term.factors[m]);
                }
                out[i] += c * prod;
            }
        }
        return out;
    }
};

/// H^G_<I> = sum_{J overlapping I} U_IJ H_J^G U_JI (plus multi-patch terms
/// with each factor transported to I), at the state's current time.
inline DenseOperator effective_hamiltonian(const GaugeState& state, const LocalHamiltonian& hamiltonian,
                                           const Patch& patch) {
    if (hamiltonian.cover().patches() != state.cover().patches() ||
        hamiltonian.n_sites() != state.cover().n_sites()) {
        throw ContractError("effective_hamiltonian: Hamiltonian and state use different covers");
    }
    const std::size_t i = state.cover().require_index(patch);
    if (state.mode() == EvolutionMode::generator) {
        const auto f = GaugeKernels::effective_frames(state, [&] {
            std::vector<DenseOperator> frames;
            for (std::size_t j = 0; j < state.cover().size(); ++j) frames.push_back(state.frame(j));
            return frames;
        }());
        const auto s = GaugeKernels::pulled_back_neighborhoods(hamiltonian, f, state.time());
        const DenseOperator& u = state.frame(i);
        return u * s[i] * u.adjoint();
    }
    return GaugeKernels::direct_neighborhoods(state, hamiltonian, state.links(), state.time())[i];
}

namespace detail {

// Flat container of the integrated variables, with the vector-space
// operations RK4 needs.
struct FlowVars {
    std::vector<StateVector> vecs;
    std::vector<DenseOperator> mats;

    FlowVars& add_scaled(double a, const FlowVars& x) {
        for (std::size_t k = 0; k < vecs.size(); ++k) vecs[k] += a * x.vecs[k];
        for (std::size_t k = 0; k < mats.size(); ++k) mats[k] += a * x.mats[k];
        return *this;
    }

    FlowVars plus_scaled(double a, const FlowVars& x) const {
        FlowVars out = *this;
        out.add_scaled(a, x);
        return out;
    }
};

template <class Derivative>
FlowVars rk4(const FlowVars& y, double t, double h, Derivative&& f) {
    const FlowVars k1 = f(t, y);
    const FlowVars k2 = f(t + 0.5 * h, y.plus_scaled(0.5 * h, k1));
    const FlowVars k3 = f(t + 0.5 * h, y.plus_scaled(0.5 * h, k2));
    const FlowVars k4 = f(t + h, y.plus_scaled(h, k3));
    FlowVars out = y;
    out.add_scaled(h / 6.0, k1).add_scaled(h / 3.0, k2).add_scaled(h / 3.0, k3).add_scaled(h / 6.0, k4);
    return out;
}

inline std::vector<GaugeState::PairKey> link_keys(const std::map<GaugeState::PairKey, DenseOperator>& links) {
    std::vector<GaugeState::PairKey> keys;
    for (const auto& [key, _] : links) keys.push_back(key);
    return keys;
}

}  // namespace detail

/// One RK4 step of size cfg.dt; see the file comment for the two modes.
inline GaugeState step(GaugeState state, const LocalHamiltonian& hamiltonian, const IntegratorConfig& cfg) {
    if (!(cfg.dt > 0.0) || !std::isfinite(cfg.dt)) {
        throw ContractError("step: dt must be positive and finite");
    }
    if (hamiltonian.cover().patches() != state.cover_.patches() ||
        hamiltonian.n_sites() != state.cover_.n_sites()) {
        throw ContractError("step: Hamiltonian and state use different covers");
    }
    const std::complex<double> minus_i(0.0, -1.0);
    const std::size_t n_patches = state.cover_.size();
    const double t0 = state.time_;

    if (state.mode_ == EvolutionMode::generator) {
        detail::FlowVars y{{}, state.frames_};
        auto deriv = [&](double t, const detail::FlowVars& v) {
            const auto f = GaugeKernels::effective_frames(state, v.mats);
            const auto s = GaugeKernels::pulled_back_neighborhoods(hamiltonian, f, t);
            detail::FlowVars d;
            d.mats.resize(n_patches);
            for (std::size_t i = 0; i < n_patches; ++i) d.mats[i] = minus_i * (v.mats[i] * s[i]);
            return d;
        };
        y = detail::rk4(y, t0, cfg.dt, deriv);
        state.frames_ = std::move(y.mats);
    } else {
        // Every connection referenced by the equations must be stored.
        for (std::size_t i = 0; i < n_patches; ++i) {
            const auto& touch = hamiltonian.touching(i);
            auto require = [&](std::size_t j) {
                if (j == i) return;
                const GaugeState::PairKey key{std::min(i, j), std::max(i, j)};
                if (!state.links_.count(key)) {
                    throw ContractError("step: direct mode needs the connection between " +
                                        state.cover_.patch(i).to_string() + " and " +
                                        state.cover_.patch(j).to_string() +
                                        "; initialize the state from the Hamiltonian");
                }
            };
            for (std::size_t k : touch.local) require(hamiltonian.term_patch(k));
            for (std::size_t k : touch.generalized) {
                for (std::size_t j : hamiltonian.generalized_patches(k)) require(j);
            }
        }
        const auto keys = detail::link_keys(state.links_);
        detail::FlowVars y;
        y.vecs = state.psi_;
        for (const auto& key : keys) y.mats.push_back(state.links_.at(key));
        auto deriv = [&](double t, const detail::FlowVars& v) {
            std::map<GaugeState::PairKey, DenseOperator> links;
            for (std::size_t k = 0; k < keys.size(); ++k) links.emplace(keys[k], v.mats[k]);
            const auto hg = GaugeKernels::direct_neighborhoods(state, hamiltonian, links, t);
            detail::FlowVars d;
            d.vecs.resize(n_patches);
            for (std::size_t i = 0; i < n_patches; ++i) d.vecs[i] = minus_i * (hg[i] * v.vecs[i]);
            d.mats.resize(keys.size());
            for (std::size_t k = 0; k < keys.size(); ++k) {
                const auto [i, j] = keys[k];
                d.mats[k] = minus_i * (hg[i] * v.mats[k] - v.mats[k] * hg[j]);
            }
            return d;
        };
        y = detail::rk4(y, t0, cfg.dt, deriv);
        state.psi_ = std::move(y.vecs);
        for (std::size_t k = 0; k < keys.size(); ++k) state.links_[keys[k]] = std::move(y.mats[k]);
    }

    ++state.steps_;
    state.time_ = t0 + cfg.dt;

    if (cfg.reunitarize_every > 0 && state.steps_ % static_cast<std::size_t>(cfg.reunitarize_every) == 0) {
        for (auto& u : state.frames_) u = polar_unitary(u);
        for (auto& [_, u] : state.links_) u = polar_unitary(u);
    }
    if (state.mode_ == EvolutionMode::generator) {
        for (std::size_t i = 0; i < n_patches; ++i) state.psi_[i] = state.frames_[i] * state.reference_;
    }
    if (cfg.renormalize) {
        for (auto& v : state.psi_) v.normalize();
    }

    for (std::size_t i = 0; i < n_patches; ++i) {
        const double norm = state.psi_[i].norm();
        if (!state.psi_[i].allFinite() || !std::isfinite(norm) || std::abs(norm - 1.0) > cfg.divergence_norm_defect) {
            throw DivergenceError("step: local wavefunction on patch " + state.cover_.patch(i).to_string() +
                                  " diverged at t = " + std::to_string(state.time_) + " (norm " +
                                  std::to_string(norm) + ")");
        }
    }
    for (const auto& u : state.frames_) {
        if (!u.allFinite()) throw DivergenceError("step: frame unitary became non-finite");
    }
    for (const auto& [key, u] : state.links_) {
        if (!u.allFinite()) throw DivergenceError("step: connection became non-finite");
    }
    return state;
}

/// Integrates from the state's time to t_final with steps no larger than cfg.dt.
inline GaugeState evolve_to(GaugeState state, const LocalHamiltonian& hamiltonian, const IntegratorConfig& cfg,
                            double t_final) {
    const double span = t_final - state.time();
    if (span < -1e-12) throw ContractError("evolve_to: target time lies in the past");
    if (span <= 1e-12) return state;
    const auto n = static_cast<long long>(std::ceil(span / cfg.dt - 1e-9));
    IntegratorConfig sub = cfg;
    sub.dt = span / static_cast<double>(n);
    for (long long k = 0; k < n; ++k) state = step(std::move(state), hamiltonian, sub);
    return state;
}

namespace detail {

inline void require_within(const Patch& support, const Patch& patch, const char* who) {
    if (!support.is_subset_of(patch)) {
        throw ContractError(std::string(who) + ": operator support " + support.to_string() +
                            " is not contained in patch " + patch.to_string());
    }
}

// D A D^dag v for a local operator A, without embedding A.
inline StateVector apply_dressed(const GaugeState& s, std::size_t i, const LocalOperator& a, const StateVector& v) {
    if (!s.dressed(i)) {
        StateVector out = v;
        apply_left(a.op, a.support, out);
        return out;
    }
    const DenseOperator d = s.dressing(i);
    StateVector w = d.adjoint() * v;
    apply_left(a.op, a.support, w);
    return d * w;
}

}  // namespace detail

/// <psi_I| A_I^G |psi_I> for A supported inside patch I.
inline Complex local_expectation(const GaugeState& state, const Patch& patch, const LocalOperator& a) {
    detail::require_within(a.support, patch, "local_expectation");
    const std::size_t i = state.cover().require_index(patch);
    const StateVector& psi = state.psi(i);
    return psi.dot(detail::apply_dressed(state, i, a, psi));
}

/// Overload for a global operator; its support is checked against the patch.
inline Complex local_expectation(const GaugeState& state, const Patch& patch, const DenseOperator& a,
                                 double tol = kDefaultTolerance) {
    const std::size_t i = state.cover().require_index(patch);
    if (static_cast<std::size_t>(a.rows()) != state.dim() || a.rows() != a.cols()) {
        throw ContractError("local_expectation: operator dimension does not match the state");
    }
    for (int site : operator_support(a, tol)) {
        if (!patch.contains(site)) {
            throw ContractError("local_expectation: operator acts on site " + std::to_string(site) +
                                " outside patch " + patch.to_string());
        }
    }
    const StateVector& psi = state.psi(i);
    if (!state.dressed(i)) return psi.dot(a * psi);
    const DenseOperator d = state.dressing(i);
    return psi.dot(d * (a * (d.adjoint() * psi)));
}

/// <psi_{I1}| A_1 U_{I1 I2} A_2 ... U_{I(m-1) Im} A_m |psi_{Im}>.
inline Complex correlator(const GaugeState& state, const std::vector<std::pair<Patch, LocalOperator>>& chain) {
    if (chain.empty()) throw ContractError("correlator: empty operator chain");
    std::vector<std::size_t> idx;
    for (const auto& [patch, op] : chain) {
        detail::require_within(op.support, patch, "correlator");
        idx.push_back(state.cover().require_index(patch));
    }
    StateVector v = state.psi(idx.back());
    for (std::size_t k = chain.size(); k-- > 0;) {
        v = detail::apply_dressed(state, idx[k], chain[k].second, v);
        if (k > 0) v = state.connection(idx[k - 1], idx[k]) * v;
    }
    return state.psi(idx.front()).dot(v);
}

/// psi_I -> L_I psi_I, U_I -> L_I U_I, U_IJ -> L_I U_IJ L_J^dag, and local
/// operators A_I^G -> L_I A_I^G L_I^dag.
inline GaugeState gauge_transform(GaugeState state, const GaugeTransform& g) {
    std::vector<std::optional<DenseOperator>> lambda(state.cover_.size());
    for (const auto& [patch, op] : g.lambdas) {
        const std::size_t i = state.cover_.require_index(patch);
        if (static_cast<std::size_t>(op.rows()) != state.dim() || !is_unitary(op)) {
            throw ContractError("gauge_transform: Lambda on " + patch.to_string() +
                                " is not a unitary of the global dimension");
        }
        lambda[i] = op;
    }
    for (std::size_t i = 0; i < lambda.size(); ++i) {
        if (!lambda[i]) continue;
        const DenseOperator& l = *lambda[i];
        state.psi_[i] = l * state.psi_[i];
        if (state.mode_ == EvolutionMode::generator) state.frames_[i] = l * state.frames_[i];
        state.dressing_[i] = state.dressing_[i] ? DenseOperator(l * *state.dressing_[i]) : l;
    }
    for (auto& [key, u] : state.links_) {
        if (lambda[key.first]) u = *lambda[key.first] * u;
        if (lambda[key.second]) u = u * lambda[key.second]->adjoint();
    }
    return state;
}

namespace detail {

// Position of each site of `sub` inside `host`, as a patch on host's local space.
inline Patch relative_patch(const Patch& sub, const Patch& host) {
    std::vector<int> rel;
    for (int s : sub.sites()) {
        const auto it = std::lower_bound(host.sites().begin(), host.sites().end(), s);
        rel.push_back(static_cast<int>(it - host.sites().begin()));
    }
    return Patch(std::move(rel));
}

}  // namespace detail

/// Applies a layer of mutually commuting local unitaries u_J:
/// psi_I -> u_<I> psi_I, U_I -> u_<I> U_I, U_IJ -> u_<I> U_IJ u_<J>^dag,
/// with u_<I> = prod_{J overlapping I} U_IJ u_J^G U_JI. Each gate is assigned
/// to the first cover patch containing its support.
inline GaugeState apply_commuting_layer(GaugeState state, const std::vector<LocalOperator>& gates,
                                        double tol = kDefaultTolerance) {
    const int n = state.cover_.n_sites();
    std::vector<std::vector<std::size_t>> hosted(state.cover_.size());
    for (std::size_t g = 0; g < gates.size(); ++g) {
        const auto& gate = gates[g];
        detail::check_local_operator(gate.op, gate.support, n, "apply_commuting_layer");
        if (!is_unitary(gate.op, tol)) {
            throw ContractError("apply_commuting_layer: gate on " + gate.support.to_string() + " is not unitary");
        }
        const auto host = state.cover_.host_of(gate.support);
        if (!host) {
            throw ContractError("apply_commuting_layer: gate support " + gate.support.to_string() +
                                " is not inside any cover patch");
        }
        hosted[*host].push_back(g);
    }
    for (std::size_t a = 0; a < gates.size(); ++a) {
        for (std::size_t b = a + 1; b < gates.size(); ++b) {
            if (!gates[a].support.overlaps(gates[b].support)) continue;
            const Patch joint = gates[a].support.united(gates[b].support);
            const int m = static_cast<int>(joint.size());
            const DenseOperator ea = embed_operator(gates[a].op, detail::relative_patch(gates[a].support, joint), m);
            const DenseOperator eb = embed_operator(gates[b].op, detail::relative_patch(gates[b].support, joint), m);
            const double defect = (ea * eb - eb * ea).norm();
            if (defect > tol) {
                throw ContractError("apply_commuting_layer: gates on " + gates[a].support.to_string() + " and " +
                                    gates[b].support.to_string() + " do not commute (defect " +
                                    std::to_string(defect) + ")");
            }
        }
    }

    const std::size_t n_patches = state.cover_.size();
    if (state.mode_ == EvolutionMode::generator) {
        // U_I -> U_I prod_J F_J^dag u_J F_J with F_J = D_J^dag U_J.
        const auto f = GaugeKernels::effective_frames(state, state.frames_);
        std::vector<std::optional<DenseOperator>> pulled(n_patches);
        for (std::size_t j = 0; j < n_patches; ++j) {
            if (hosted[j].empty()) continue;
            DenseOperator uf = f[j];
            for (std::size_t g : hosted[j]) apply_left(gates[g].op, gates[g].support, uf);
            pulled[j] = f[j].adjoint() * uf;
        }
        for (std::size_t i = 0; i < n_patches; ++i) {
            for (std::size_t j : state.cover_.neighbors(i)) {
                if (pulled[j]) state.frames_[i] = state.frames_[i] * *pulled[j];
            }
            state.psi_[i] = state.frames_[i] * state.reference_;
        }
        return state;
    }

    std::vector<std::optional<DenseOperator>> dressed_layer(n_patches);
    for (std::size_t i = 0; i < n_patches; ++i) {
        for (std::size_t j : state.cover_.neighbors(i)) {
            if (hosted[j].empty()) continue;
            DenseOperator transport = state.connection(i, j);
            if (state.dressing_[j]) transport = transport * *state.dressing_[j];
            DenseOperator right = transport.adjoint();
            for (std::size_t g : hosted[j]) apply_left(gates[g].op, gates[g].support, right);
            const DenseOperator factor = transport * right;
            dressed_layer[i] = dressed_layer[i] ? DenseOperator(*dressed_layer[i] * factor) : factor;
        }
    }
    for (std::size_t i = 0; i < n_patches; ++i) {
        if (dressed_layer[i]) state.psi_[i] = *dressed_layer[i] * state.psi_[i];
    }
    for (auto& [key, u] : state.links_) {
        if (dressed_layer[key.first]) u = *dressed_layer[key.first] * u;
        if (dressed_layer[key.second]) u = u * dressed_layer[key.second]->adjoint();
    }
    return state;
}

/// max ||U_IJ psi_J - psi_I|| over the checked pairs.
inline double consistency_defect(const GaugeState& state) {
    double worst = 0.0;
    for (const auto& [i, j] : state.checked_pairs()) {
        worst = std::max(worst, (state.connection(i, j) * state.psi(j) - state.psi(i)).norm());
    }
    return worst;
}

/// Consistency, cocycle, unitarity and norm defects of a state.
inline DefectReport diagnostics(const GaugeState& state) {
    DefectReport r;
    const auto& cover = state.cover();
    r.consistency = consistency_defect(state);
    auto available = [&](std::size_t a, std::size_t b) {
        if (state.mode() == EvolutionMode::generator || a == b) return true;
        return state.links().count({std::min(a, b), std::max(a, b)}) > 0;
    };
    for (std::size_t i = 0; i < cover.size(); ++i) {
        for (std::size_t j : cover.neighbors(i)) {
            if (j == i) continue;
            for (std::size_t k : cover.neighbors(j)) {
                if (k <= i || k == j || !available(i, k) || !available(i, j) || !available(j, k)) continue;
                const DenseOperator lhs = state.connection(i, j) * state.connection(j, k);
                r.cocycle = std::max(r.cocycle, (lhs - state.connection(i, k)).norm());
            }
        }
    }
    if (state.mode() == EvolutionMode::generator) {
        for (std::size_t i = 0; i < cover.size(); ++i) r.unitarity = std::max(r.unitarity, unitarity_defect(state.frame(i)));
    } else {
        for (const auto& [_, u] : state.links()) r.unitarity = std::max(r.unitarity, unitarity_defect(u));
    }
    for (std::size_t i = 0; i < cover.size(); ++i) r.norm = std::max(r.norm, std::abs(state.psi(i).norm() - 1.0));
    return r;
}

}  // namespace gaugepic
