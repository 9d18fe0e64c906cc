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

// Local Hamiltonians H = sum_J H_J over the patches of a cover, plus
// multi-patch product terms h * tau_J ... tau_K.

#include "gaugepic/lattice.hpp"

#include <functional>
#include <utility>
#include <vector>

namespace gaugepic {

/// Scalar multiplier of a term as a function of time. An empty profile means
/// the constant 1.
using TimeProfile = std::function<double(double)>;

/// Hermitian operator supported on a single cover patch.
struct LocalTerm {
    Patch patch;
    DenseOperator op;  // on the local space of `patch`
    TimeProfile profile;

    double coefficient(double t) const { return profile ? profile(t) : 1.0; }
};

/// h(t) * tau_1 tau_2 ... tau_m with each tau supported on one cover patch.
/// Factors are multiplied in the listed order.
struct GeneralizedTerm {
    std::vector<LocalOperator> factors;
    double h = 1.0;
    TimeProfile profile;

    double coefficient(double t) const { return h * (profile ? profile(t) : 1.0); }

    Patch union_support() const {
        Patch u = factors.at(0).support;
        for (const auto& f : factors) u = u.united(f.support);
        return u;
    }
};

/// How single-site field terms are apportioned between overlapping patches.
enum class FieldAssignment {
    leftmost,  // whole field on the leftmost patch containing the site
    split,     // shared equally between all patches containing the site
};

class LocalHamiltonian {
  public:
    LocalHamiltonian() = default;
    explicit LocalHamiltonian(PatchCover cover) : cover_(std::move(cover)) {}

    const PatchCover& cover() const { return cover_; }
    int n_sites() const { return cover_.n_sites(); }
    const std::vector<LocalTerm>& terms() const { return terms_; }
    const std::vector<GeneralizedTerm>& generalized_terms() const { return gen_terms_; }

    /// Cover index of local term k.
    std::size_t term_patch(std::size_t k) const { return term_patch_.at(k); }
    /// Cover indices of the factor patches of generalized term k.
    const std::vector<std::size_t>& generalized_patches(std::size_t k) const { return gen_patches_.at(k); }

    void add_term(LocalTerm term) {
        const std::size_t idx = cover_.require_index(term.patch);
        detail::check_local_operator(term.op, term.patch, n_sites(), "LocalHamiltonian::add_term");
        if (!is_hermitian(term.op)) {
            throw ContractError("LocalHamiltonian::add_term: term on " + term.patch.to_string() +
                                " is not Hermitian");
        }
        terms_.push_back(std::move(term));
        term_patch_.push_back(idx);
        touch_cache_.clear();
    }

    void add_generalized_term(GeneralizedTerm term) {
        if (term.factors.empty()) {
            throw ContractError("LocalHamiltonian::add_generalized_term: no factors");
        }
        std::vector<std::size_t> idx;
        for (const auto& f : term.factors) {
            idx.push_back(cover_.require_index(f.support));
            detail::check_local_operator(f.op, f.support, n_sites(), "LocalHamiltonian::add_generalized_term");
        }
        gen_terms_.push_back(std::move(term));
        gen_patches_.push_back(std::move(idx));
        touch_cache_.clear();
    }

    bool time_dependent() const {
        for (const auto& t : terms_) if (t.profile) return true;
        for (const auto& t : gen_terms_) if (t.profile) return true;
        return false;
    }

    bool empty() const { return terms_.empty() && gen_terms_.empty(); }

    /// Global operator of local term k at time t.
    DenseOperator term_operator(std::size_t k, double t) const {
        return terms_.at(k).coefficient(t) * embed_operator(terms_[k].op, terms_[k].patch, n_sites());
    }

    /// Global operator of generalized term k at time t (product of embedded factors).
    DenseOperator generalized_operator(std::size_t k, double t) const {
        const auto& term = gen_terms_.at(k);
        DenseOperator prod = identity(cover_.dim());
        for (auto f = term.factors.rbegin(); f != term.factors.rend(); ++f) {
            apply_left(f->op, f->support, prod);
        }
        return term.coefficient(t) * prod;
    }

    /// The full Hamiltonian H(t).
    DenseOperator dense(double t = 0.0) const {
        DenseOperator h = DenseOperator::Zero(static_cast<Eigen::Index>(cover_.dim()),
                                              static_cast<Eigen::Index>(cover_.dim()));
        for (std::size_t k = 0; k < terms_.size(); ++k) h += term_operator(k, t);
        for (std::size_t k = 0; k < gen_terms_.size(); ++k) h += generalized_operator(k, t);
        return h;
    }

    /// Local terms whose patch overlaps cover patch i, and generalized terms
    /// whose union of factor patches overlaps it.
    struct Touching {
        std::vector<std::size_t> local;
        std::vector<std::size_t> generalized;
    };

    const Touching& touching(std::size_t i) const {
        if (touch_cache_.size() != cover_.size()) rebuild_touch_cache();
        return touch_cache_.at(i);
    }

    /// H_<I>(t): sum of all terms touching patch I, as a global operator.
    DenseOperator neighborhood(const Patch& patch, double t = 0.0) const {
        const std::size_t i = cover_.require_index(patch);
        DenseOperator h = DenseOperator::Zero(static_cast<Eigen::Index>(cover_.dim()),
                                              static_cast<Eigen::Index>(cover_.dim()));
        const Touching& touch = touching(i);
        for (std::size_t k : touch.local) h += term_operator(k, t);
        for (std::size_t k : touch.generalized) h += generalized_operator(k, t);
        return h;
    }

  private:
    void rebuild_touch_cache() const {
        touch_cache_.assign(cover_.size(), {});
        for (std::size_t i = 0; i < cover_.size(); ++i) {
            const Patch& p = cover_.patch(i);
            for (std::size_t k = 0; k < terms_.size(); ++k) {
                if (terms_[k].patch.overlaps(p)) touch_cache_[i].local.push_back(k);
            }
            for (std::size_t k = 0; k < gen_terms_.size(); ++k) {
                if (gen_terms_[k].union_support().overlaps(p)) touch_cache_[i].generalized.push_back(k);
            }
        }
    }

    PatchCover cover_;
    std::vector<LocalTerm> terms_;
    std::vector<std::size_t> term_patch_;
    std::vector<GeneralizedTerm> gen_terms_;
    std::vector<std::vector<std::size_t>> gen_patches_;
    mutable std::vector<Touching> touch_cache_;
};

/// Transverse-field Ising chain H = -J sum Z_i Z_{i+1} - g sum X_i on the
/// nearest-neighbor pair cover.
inline LocalHamiltonian tfim_chain(int n, double coupling, double field,
                                   FieldAssignment assignment = FieldAssignment::leftmost) {
    if (n < 2) throw ContractError("tfim_chain: need at least 2 sites");
    LocalHamiltonian h(nn_pair_cover(n));
    const DenseOperator id = identity(2);
    const DenseOperator zz = kron(pauli_z(), pauli_z());
    const DenseOperator x_low = kron(id, pauli_x());   // X on site i of (i, i+1)
    const DenseOperator x_high = kron(pauli_x(), id);  // X on site i+1
    for (int i = 0; i + 1 < n; ++i) {
        double w_low = 1.0;
        double w_high = 0.0;
        if (assignment == FieldAssignment::leftmost) {
            w_high = (i == n - 2) ? 1.0 : 0.0;
        } else {
            // Interior sites sit in two patches.
            w_low = (i == 0) ? 1.0 : 0.5;
            w_high = (i + 1 == n - 1) ? 1.0 : 0.5;
        }
        DenseOperator op = -coupling * zz - field * (w_low * x_low + w_high * x_high);
        h.add_term({Patch{i, i + 1}, std::move(op), {}});
    }
    return h;
}

/// H = sum_i Jx X_i X_{i+1} + Jy Y_i Y_{i+1} + Jz Z_i Z_{i+1} on the pair cover.
inline LocalHamiltonian heisenberg_chain(int n, double jx, double jy, double jz) {
    if (n < 2) throw ContractError("heisenberg_chain: need at least 2 sites");
    LocalHamiltonian h(nn_pair_cover(n));
    const DenseOperator op = jx * kron(pauli_x(), pauli_x()) + jy * kron(pauli_y(), pauli_y()) +
                             jz * kron(pauli_z(), pauli_z());
    for (int i = 0; i + 1 < n; ++i) h.add_term({Patch{i, i + 1}, op, {}});
    return h;
}

/// The transverse-field Ising chain on single-site patches: fields are local
/// terms, couplings are two-patch generalized terms -J Z_i Z_{i+1}.
inline LocalHamiltonian tfim_single_site(int n, double coupling, double field) {
    if (n < 2) throw ContractError("tfim_single_site: need at least 2 sites");
    LocalHamiltonian h(single_site_cover(n));
    for (int i = 0; i < n; ++i) h.add_term({Patch{i}, -field * pauli_x(), {}});
    for (int i = 0; i + 1 < n; ++i) {
        h.add_generalized_term({{{Patch{i}, pauli_z()}, {Patch{i + 1}, pauli_z()}}, -coupling, {}});
    }
    return h;
}

}  // namespace gaugepic
