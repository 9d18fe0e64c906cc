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

// Spatial patches on a chain of qubits, patch covers, and the embedding of
// patch-local operators into the full 2^n dimensional Hilbert space.

#include "gaugepic/numkernel.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <compare>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace gaugepic {

/// A nonempty set of site indices, stored sorted. Value semantics: two
/// patches are equal iff they contain the same sites.
class Patch {
  public:
    Patch() = default;
    Patch(std::initializer_list<int> sites) : Patch(std::vector<int>(sites)) {}
    explicit Patch(std::vector<int> sites) : sites_(std::move(sites)) {
        std::sort(sites_.begin(), sites_.end());
        sites_.erase(std::unique(sites_.begin(), sites_.end()), sites_.end());
        if (sites_.empty()) {
            throw ContractError("Patch: a patch must contain at least one site");
        }
        if (sites_.front() < 0) {
            throw ContractError("Patch: site indices must be nonnegative");
        }
    }

    const std::vector<int>& sites() const { return sites_; }
    std::size_t size() const { return sites_.size(); }
    int front() const { return sites_.front(); }
    int back() const { return sites_.back(); }
    std::size_t local_dim() const { return std::size_t{1} << sites_.size(); }

    bool contains(int site) const { return std::binary_search(sites_.begin(), sites_.end(), site); }

    bool overlaps(const Patch& other) const {
        auto a = sites_.begin();
        auto b = other.sites_.begin();
        while (a != sites_.end() && b != other.sites_.end()) {
            if (*a == *b) return true;
            if (*a < *b) ++a; else ++b;
        }
        return false;
    }

    bool is_subset_of(const Patch& other) const {
        return std::includes(other.sites_.begin(), other.sites_.end(), sites_.begin(), sites_.end());
    }

    Patch united(const Patch& other) const {
        std::vector<int> u;
        std::set_union(sites_.begin(), sites_.end(), other.sites_.begin(), other.sites_.end(),
                       std::back_inserter(u));
        return Patch(std::move(u));
    }

    /// Bit mask of the sites (site s is bit s).
    std::uint64_t mask() const {
        std::uint64_t m = 0;
        for (int s : sites_) m |= std::uint64_t{1} << s;
        return m;
    }

    std::string to_string() const {
        std::string out = "(";
        for (std::size_t k = 0; k < sites_.size(); ++k) {
            if (k) out += ",";
            out += std::to_string(sites_[k]);
        }
        return out + ")";
    }

    auto operator<=>(const Patch&) const = default;

  private:
    std::vector<int> sites_;
};

/// An ordered list of patches whose union is every site of an n-site chain,
/// together with its overlap graph. Every patch overlaps itself.
class PatchCover {
  public:
    PatchCover() = default;
    PatchCover(int n_sites, std::vector<Patch> patches) : n_sites_(n_sites), patches_(std::move(patches)) {
        if (n_sites_ < 1 || n_sites_ > 30) {
            throw ContractError("PatchCover: site count must be in [1, 30]");
        }
        if (patches_.empty()) {
            throw ContractError("PatchCover: cover has no patches");
        }
        std::vector<bool> covered(static_cast<std::size_t>(n_sites_), false);
        for (const Patch& p : patches_) {
            if (p.back() >= n_sites_) {
                throw ContractError("PatchCover: patch " + p.to_string() + " has a site outside [0, " +
                                    std::to_string(n_sites_) + ")");
            }
            for (int s : p.sites()) covered[static_cast<std::size_t>(s)] = true;
        }
        for (int s = 0; s < n_sites_; ++s) {
            if (!covered[static_cast<std::size_t>(s)]) {
                throw ContractError("PatchCover: site " + std::to_string(s) + " is not covered");
            }
        }
        for (std::size_t i = 0; i < patches_.size(); ++i) {
            for (std::size_t j = i + 1; j < patches_.size(); ++j) {
                if (patches_[i] == patches_[j]) {
                    throw ContractError("PatchCover: duplicate patch " + patches_[i].to_string());
                }
            }
        }
        neighbors_.resize(patches_.size());
        for (std::size_t i = 0; i < patches_.size(); ++i) {
            for (std::size_t j = 0; j < patches_.size(); ++j) {
                if (patches_[i].overlaps(patches_[j])) neighbors_[i].push_back(j);
            }
        }
    }

    int n_sites() const { return n_sites_; }
    std::size_t dim() const { return std::size_t{1} << n_sites_; }
    std::size_t size() const { return patches_.size(); }
    const std::vector<Patch>& patches() const { return patches_; }
    const Patch& patch(std::size_t i) const { return patches_.at(i); }

    /// Indices of patches overlapping patch i (including i itself), ascending.
    const std::vector<std::size_t>& neighbors(std::size_t i) const { return neighbors_.at(i); }

    bool overlaps(std::size_t i, std::size_t j) const { return patches_.at(i).overlaps(patches_.at(j)); }

    std::optional<std::size_t> index_of(const Patch& p) const {
        for (std::size_t i = 0; i < patches_.size(); ++i) {
            if (patches_[i] == p) return i;
        }
        return std::nullopt;
    }

    std::size_t require_index(const Patch& p) const {
        if (auto idx = index_of(p)) return *idx;
        throw ContractError("patch " + p.to_string() + " is not in the cover");
    }

    /// First patch of the cover that contains every site of p.
    std::optional<std::size_t> host_of(const Patch& p) const {
        for (std::size_t i = 0; i < patches_.size(); ++i) {
            if (p.is_subset_of(patches_[i])) return i;
        }
        return std::nullopt;
    }

    /// Unordered pairs (i < j) of distinct overlapping patches.
    std::vector<std::pair<std::size_t, std::size_t>> overlapping_pairs() const {
        std::vector<std::pair<std::size_t, std::size_t>> out;
        for (std::size_t i = 0; i < patches_.size(); ++i) {
            for (std::size_t j : neighbors_[i]) {
                if (j > i) out.emplace_back(i, j);
            }
        }
        return out;
    }

    /// Order-insensitive comparison of the patch sets.
    friend bool operator==(const PatchCover& a, const PatchCover& b) {
        if (a.n_sites_ != b.n_sites_) return false;
        std::set<Patch> pa(a.patches_.begin(), a.patches_.end());
        std::set<Patch> pb(b.patches_.begin(), b.patches_.end());
        return pa == pb;
    }

  private:
    int n_sites_ = 0;
    std::vector<Patch> patches_;
    std::vector<std::vector<std::size_t>> neighbors_;
};

/// Patches (i, i+1) for i = 0 .. n-2.
inline PatchCover nn_pair_cover(int n) {
    if (n < 2) {
        throw ContractError("nn_pair_cover: need at least 2 sites");
    }
    std::vector<Patch> patches;
    for (int i = 0; i + 1 < n; ++i) patches.push_back(Patch{i, i + 1});
    return PatchCover(n, std::move(patches));
}

inline PatchCover single_site_cover(int n) {
    std::vector<Patch> patches;
    for (int i = 0; i < n; ++i) patches.push_back(Patch{i});
    return PatchCover(n, std::move(patches));
}

/// One patch holding every site.
inline PatchCover whole_chain_cover(int n) {
    std::vector<int> all(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) all[static_cast<std::size_t>(i)] = i;
    return PatchCover(n, {Patch(std::move(all))});
}

namespace detail {

// offsets[l] = global index bits for local index l of the patch.
inline std::vector<std::size_t> deposit_table(const Patch& p) {
    const std::size_t local = p.local_dim();
    std::vector<std::size_t> offsets(local, 0);
    for (std::size_t l = 0; l < local; ++l) {
        std::size_t g = 0;
        for (std::size_t k = 0; k < p.size(); ++k) {
            if ((l >> k) & 1U) g |= std::size_t{1} << p.sites()[k];
        }
        offsets[l] = g;
    }
    return offsets;
}

inline std::size_t extract_local(std::size_t global, const Patch& p) {
    std::size_t l = 0;
    for (std::size_t k = 0; k < p.size(); ++k) {
        l |= ((global >> p.sites()[k]) & 1U) << k;
    }
    return l;
}

inline void check_local_operator(const DenseOperator& a, const Patch& p, int n, const char* who) {
    if (p.back() >= n) {
        throw ContractError(std::string(who) + ": patch " + p.to_string() + " exceeds " + std::to_string(n) +
                            " sites");
    }
    const auto local = static_cast<Eigen::Index>(p.local_dim());
    if (a.rows() != local || a.cols() != local) {
        throw ContractError(std::string(who) + ": operator is " + std::to_string(a.rows()) + "x" +
                            std::to_string(a.cols()) + " but patch " + p.to_string() + " needs " +
                            std::to_string(local) + "x" + std::to_string(local));
    }
}

}  // namespace detail

/// A (x) identity, with A acting on the sites of p (local bit k <-> site p.sites()[k]).
inline DenseOperator embed_operator(const DenseOperator& a, const Patch& p, int n) {
    detail::check_local_operator(a, p, n, "embed_operator");
    const std::size_t dim = std::size_t{1} << n;
    const std::uint64_t mask = p.mask();
    const auto offsets = detail::deposit_table(p);
    DenseOperator out = DenseOperator::Zero(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
    for (std::size_t r = 0; r < dim; ++r) {
        const std::size_t rest = r & ~mask;
        const std::size_t lr = detail::extract_local(r, p);
        for (std::size_t lc = 0; lc < offsets.size(); ++lc) {
            out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(rest | offsets[lc])) =
                a(static_cast<Eigen::Index>(lr), static_cast<Eigen::Index>(lc));
        }
    }
    return out;
}

/// m <- embed(a, p) * m without forming the embedded operator. Works for
/// matrices and vectors (any number of columns).
template <class Derived>
void apply_left(const DenseOperator& a, const Patch& p, Eigen::MatrixBase<Derived>& m) {
    const auto dim = static_cast<std::size_t>(m.rows());
    const int n = static_cast<int>(std::countr_zero(dim));
    detail::check_local_operator(a, p, n, "apply_left");
    const std::uint64_t mask = p.mask();
    const auto offsets = detail::deposit_table(p);
    const auto local = static_cast<Eigen::Index>(offsets.size());
    Eigen::MatrixXcd block(local, m.cols());
    for (std::size_t base = 0; base < dim; ++base) {
        if (base & mask) continue;
        for (Eigen::Index l = 0; l < local; ++l) {
            block.row(l) = m.row(static_cast<Eigen::Index>(base | offsets[static_cast<std::size_t>(l)]));
        }
        const Eigen::MatrixXcd out = a * block;
        for (Eigen::Index l = 0; l < local; ++l) {
            m.row(static_cast<Eigen::Index>(base | offsets[static_cast<std::size_t>(l)])) = out.row(l);
        }
    }
}

/// m <- m * embed(a, p).
inline void apply_right(const DenseOperator& a, const Patch& p, DenseOperator& m) {
    const auto dim = static_cast<std::size_t>(m.cols());
    const int n = static_cast<int>(std::countr_zero(dim));
    detail::check_local_operator(a, p, n, "apply_right");
    const std::uint64_t mask = p.mask();
    const auto offsets = detail::deposit_table(p);
    const auto local = static_cast<Eigen::Index>(offsets.size());
    Eigen::MatrixXcd block(m.rows(), local);
    for (std::size_t base = 0; base < dim; ++base) {
        if (base & mask) continue;
        for (Eigen::Index l = 0; l < local; ++l) {
            block.col(l) = m.col(static_cast<Eigen::Index>(base | offsets[static_cast<std::size_t>(l)]));
        }
        const Eigen::MatrixXcd out = block * a;
        for (Eigen::Index l = 0; l < local; ++l) {
            m.col(static_cast<Eigen::Index>(base | offsets[static_cast<std::size_t>(l)])) = out.col(l);
        }
    }
}

/// Distance of m from the form identity_s (x) M', measured as
/// ||M - identity_s (x) M'||_F / sqrt(dim), where M' = Tr_s(M) / 2 is the
/// best such reconstruction. The normalization makes the identity have norm 1.
inline double identity_factor_defect(const DenseOperator& m, int site) {
    const auto dim = static_cast<std::size_t>(m.rows());
    const std::size_t bit = std::size_t{1} << site;
    double sq = 0.0;
    for (std::size_t r = 0; r < dim; ++r) {
        if (r & bit) continue;
        for (std::size_t c = 0; c < dim; ++c) {
            if (c & bit) continue;
            const auto r0 = static_cast<Eigen::Index>(r), r1 = static_cast<Eigen::Index>(r | bit);
            const auto c0 = static_cast<Eigen::Index>(c), c1 = static_cast<Eigen::Index>(c | bit);
            const Complex reduced = 0.5 * (m(r0, c0) + m(r1, c1));
            sq += std::norm(m(r0, c0) - reduced) + std::norm(m(r1, c1) - reduced) + std::norm(m(r0, c1)) +
                  std::norm(m(r1, c0));
        }
    }
    return std::sqrt(sq / static_cast<double>(dim));
}

/// Sites on which m does not act as the identity (within tol, see
/// identity_factor_defect).
inline std::set<int> operator_support(const DenseOperator& m, double tol = kDefaultTolerance) {
    if (m.rows() != m.cols() || m.rows() == 0 || std::popcount(static_cast<std::size_t>(m.rows())) != 1) {
        throw ContractError("operator_support: operator dimension must be a power of two");
    }
    const int n = static_cast<int>(std::countr_zero(static_cast<std::size_t>(m.rows())));
    std::set<int> support;
    for (int s = 0; s < n; ++s) {
        if (identity_factor_defect(m, s) > tol) support.insert(s);
    }
    return support;
}

/// An operator given on the local space of its support patch.
struct LocalOperator {
    Patch support;
    DenseOperator op;

    DenseOperator embedded(int n) const { return embed_operator(op, support, n); }
};

/// Parses a Pauli string such as "Z2 Z3", "X0" or "ZZ@2" (letters applied to
/// consecutive sites starting at 2). Letters are I, X, Y, Z.
inline LocalOperator pauli_string(const std::string& text) {
    std::vector<std::pair<int, char>> factors;
    auto pauli_of = [](char c) {
        switch (c) {
            case 'I': return identity(2);
            case 'X': return pauli_x();
            case 'Y': return pauli_y();
            case 'Z': return pauli_z();
            default: throw ContractError(std::string("pauli_string: unknown Pauli letter '") + c + "'");
        }
    };
    const auto at = text.find('@');
    if (at != std::string::npos) {
        const std::string letters = text.substr(0, at);
        const int start = std::stoi(text.substr(at + 1));
        for (std::size_t k = 0; k < letters.size(); ++k) factors.emplace_back(start + static_cast<int>(k), letters[k]);
    } else {
        std::size_t i = 0;
        while (i < text.size()) {
            if (std::isspace(static_cast<unsigned char>(text[i]))) { ++i; continue; }
            const char letter = text[i++];
            std::size_t j = i;
            while (j < text.size() && std::isdigit(static_cast<unsigned char>(text[j]))) ++j;
            if (j == i) throw ContractError("pauli_string: missing site index in '" + text + "'");
            factors.emplace_back(std::stoi(text.substr(i, j - i)), letter);
            i = j;
        }
    }
    if (factors.empty()) throw ContractError("pauli_string: empty string");
    std::vector<int> sites;
    for (const auto& f : factors) sites.push_back(f.first);
    Patch support(sites);
    if (support.size() != factors.size()) throw ContractError("pauli_string: repeated site in '" + text + "'");
    DenseOperator op = identity(1);
    // Highest site is the leftmost Kronecker factor.
    for (auto it = support.sites().rbegin(); it != support.sites().rend(); ++it) {
        const auto f = std::find_if(factors.begin(), factors.end(), [&](const auto& x) { return x.first == *it; });
        op = kron(op, pauli_of(f->second));
    }
    return {std::move(support), std::move(op)};
}

}  // namespace gaugepic
