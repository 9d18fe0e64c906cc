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

#include "gaugepic/circuits.hpp"
#include "gaugepic/gauge_state.hpp"
#include "gaugepic/oracle.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

namespace gaugepic {
namespace {

using testing::plus_state;
using testing::random_state;
using testing::random_unitary;
using testing::site_operator;

LocalOperator z_on(int s) { return {Patch{s}, pauli_z()}; }
LocalOperator x_on(int s) { return {Patch{s}, pauli_x()}; }

// TFIM n = 6, J = g = 1 from |+>, integrated once to t = 1 in generator mode.
class EvolvedTfim : public ::testing::Test {
  protected:
    static constexpr int kSites = 6;
    static constexpr double kTime = 1.0;

    static void SetUpTestSuite() {
        hamiltonian_ = std::make_unique<LocalHamiltonian>(tfim_chain(kSites, 1.0, 1.0));
        state_ = std::make_unique<GaugeState>(
            evolve_to(init(plus_state(kSites), *hamiltonian_), *hamiltonian_, IntegratorConfig{}, kTime));
        reference_ = std::make_unique<ReferenceBundle>(
            reference_gauge_state(*hamiltonian_, hamiltonian_->cover(), plus_state(kSites), kTime));
    }
    static void TearDownTestSuite() {
        hamiltonian_.reset();
        state_.reset();
        reference_.reset();
    }

    static std::unique_ptr<LocalHamiltonian> hamiltonian_;
    static std::unique_ptr<GaugeState> state_;
    static std::unique_ptr<ReferenceBundle> reference_;
};

std::unique_ptr<LocalHamiltonian> EvolvedTfim::hamiltonian_;
std::unique_ptr<GaugeState> EvolvedTfim::state_;
std::unique_ptr<ReferenceBundle> EvolvedTfim::reference_;

// A sample of single- and two-patch correlators used to test gauge invariance.
std::vector<Complex> correlator_sample(const GaugeState& s) {
    std::vector<Complex> out;
    const auto& patches = s.cover().patches();
    for (const Patch& p : patches) {
        out.push_back(local_expectation(s, p, z_on(p.sites()[0])));
        out.push_back(local_expectation(s, p, LocalOperator{p, kron(pauli_x(), pauli_y())}));
    }
    for (std::size_t a = 0; a < patches.size(); ++a) {
        for (std::size_t b = 0; b < patches.size(); ++b) {
            out.push_back(correlator(s, {{patches[a], x_on(patches[a].sites()[0])},
                                         {patches[b], z_on(patches[b].sites()[1])}}));
        }
    }
    return out;
}

double max_difference(const std::vector<Complex>& a, const std::vector<Complex>& b) {
    double worst = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) worst = std::max(worst, std::abs(a[k] - b[k]));
    return worst;
}

GaugeTransform random_transform(const PatchCover& cover, std::mt19937_64& rng) {
    GaugeTransform g;
    for (const Patch& p : cover.patches()) g.lambdas.emplace(p, random_unitary(cover.dim(), rng));
    return g;
}

// ---------------------------------------------------------------- init

TEST(Init, ConnectionsStartAtIdentity) {
    std::mt19937_64 rng(3);
    const StateVector psi0 = random_state(32, rng);
    for (EvolutionMode mode : {EvolutionMode::generator, EvolutionMode::direct}) {
        const GaugeState s = init(psi0, nn_pair_cover(5), mode);
        EXPECT_EQ(s.time(), 0.0);
        for (std::size_t i = 0; i < s.cover().size(); ++i) {
            EXPECT_EQ((s.psi(i) - psi0).norm(), 0.0);
            for (std::size_t j : s.cover().neighbors(i)) {
                EXPECT_EQ(frobenius_distance(s.connection(i, j), identity(32)), 0.0);
            }
        }
        const DefectReport d = diagnostics(s);
        EXPECT_EQ(d.consistency, 0.0);
        EXPECT_EQ(d.cocycle, 0.0);
        EXPECT_LT(d.norm, 1e-15);
    }
}

TEST(Init, RejectsBadStates) {
    StateVector v = plus_state(3);
    EXPECT_THROW(init(2.0 * v, nn_pair_cover(3)), ContractError);
    EXPECT_THROW(init(plus_state(4), nn_pair_cover(3)), ContractError);
}

// ---------------------------------------------------------- connection

TEST_F(EvolvedTfim, ConnectionBasicIdentities) {
    const auto& cover = state_->cover();
    for (std::size_t i = 0; i < cover.size(); ++i) {
        EXPECT_EQ(frobenius_distance(state_->connection(i, i), identity(state_->dim())), 0.0);
        for (std::size_t j : cover.neighbors(i)) {
            EXPECT_LT(frobenius_distance(state_->connection(i, j).adjoint(), state_->connection(j, i)), 1e-14);
        }
    }
    EXPECT_THROW(state_->connection(Patch{0, 1}, Patch{0, 2}), ContractError);
    EXPECT_THROW(state_->connection(0, 17), ContractError);
}

TEST_F(EvolvedTfim, TrivialHolonomy) {
    const std::size_t m = state_->cover().size();
    double worst = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < m; ++j) {
            for (std::size_t k = 0; k < m; ++k) {
                const DenseOperator loop = state_->connection(i, j) * state_->connection(j, k) * state_->connection(k, i);
                worst = std::max(worst, frobenius_distance(loop, identity(state_->dim())));
            }
        }
    }
    EXPECT_LT(worst, 1e-12);
}

TEST(Connection, MatchesClosedFormForFourSites) {
    const LocalHamiltonian h = tfim_chain(4, 1.0, 1.0);
    for (EvolutionMode mode : {EvolutionMode::generator, EvolutionMode::direct}) {
        const GaugeState s = evolve_to(init(plus_state(4), h, mode), h, IntegratorConfig{}, 0.5);
        const ReferenceBundle ref = reference_gauge_state(h, h.cover(), plus_state(4), 0.5);
        for (const auto& [i, j] : h.cover().overlapping_pairs()) {
            EXPECT_LT(frobenius_distance(s.connection(i, j), ref.connection(i, j)), 1e-6) << to_string(mode);
        }
        // Non-overlapping pair, composed along stored links in direct mode.
        EXPECT_LT(frobenius_distance(s.connection(0, 2), ref.connection(0, 2)), 1e-6) << to_string(mode);
    }
}

// ----------------------------------------------------- effective_hamiltonian

TEST(EffectiveHamiltonian, StartsAsSchrodingerNeighborhood) {
    const LocalHamiltonian h = heisenberg_chain(4, 0.5, 1.0, -0.3);
    const GaugeState s = init(plus_state(4), h);
    for (const Patch& p : h.cover().patches()) {
        EXPECT_LT(frobenius_distance(effective_hamiltonian(s, h, p), h.neighborhood(p)), 1e-14);
    }
}

TEST(EffectiveHamiltonian, SinglePatchCoverIsFullHamiltonian) {
    LocalHamiltonian h(whole_chain_cover(3));
    h.add_term({Patch{0, 1, 2}, testing::dense_tfim(3, 1.0, 0.7), {}});
    for (EvolutionMode mode : {EvolutionMode::generator, EvolutionMode::direct}) {
        const GaugeState s = evolve_to(init(plus_state(3), h, mode), h, IntegratorConfig{}, 0.3);
        EXPECT_LT(frobenius_distance(effective_hamiltonian(s, h, Patch{0, 1, 2}), h.dense()), 1e-12);
    }
}

TEST(EffectiveHamiltonian, MatchesClosedFormAndIsNonlinear) {
    const LocalHamiltonian h = tfim_chain(4, 1.0, 1.0);
    const ReferenceBundle ref = reference_gauge_state(h, h.cover(), plus_state(4), 0.5);
    for (EvolutionMode mode : {EvolutionMode::generator, EvolutionMode::direct}) {
        const GaugeState s = evolve_to(init(plus_state(4), h, mode), h, IntegratorConfig{}, 0.5);
        for (std::size_t i = 0; i < h.cover().size(); ++i) {
            const Patch& p = h.cover().patch(i);
            const DenseOperator hg = effective_hamiltonian(s, h, p);
            // Heisenberg-picture H_<I> conjugated by U_I: ~U_I^dag H_<I>^S ~U_I.
            const DenseOperator expected = ref.complement[i].adjoint() * h.neighborhood(p) * ref.complement[i];
            EXPECT_LT(frobenius_distance(hg, expected), 1e-6) << p.to_string();
            EXPECT_LT(hermiticity_defect(hg), 1e-12);
            // Patches whose neighborhood is all of H see no dressing.
            if (frobenius_distance(h.neighborhood(p), h.dense()) > 0.0) {
                EXPECT_GT(frobenius_distance(hg, h.neighborhood(p)), 1e-3) << p.to_string();
            }
        }
    }
}

TEST(EffectiveHamiltonian, RejectsForeignCover) {
    const GaugeState s = init(plus_state(4), nn_pair_cover(4));
    EXPECT_THROW(effective_hamiltonian(s, tfim_single_site(4, 1.0, 1.0), Patch{0}), ContractError);
    EXPECT_THROW(effective_hamiltonian(s, tfim_chain(4, 1.0, 1.0), Patch{0, 2}), ContractError);
}

// ----------------------------------------------------------------- step

TEST(Step, ZeroHamiltonianLeavesStateUnchanged) {
    std::mt19937_64 rng(8);
    const StateVector psi0 = random_state(16, rng);
    const LocalHamiltonian h(nn_pair_cover(4));
    for (EvolutionMode mode : {EvolutionMode::generator, EvolutionMode::direct}) {
        const GaugeState s = evolve_to(init(psi0, h, mode), h, IntegratorConfig{}, 0.05);
        EXPECT_NEAR(s.time(), 0.05, 1e-15);
        for (std::size_t i = 0; i < s.cover().size(); ++i) EXPECT_EQ((s.psi(i) - psi0).norm(), 0.0);
    }
}

TEST(Step, CommutingModelMatchesClosedForm) {
    const int n = 5;
    const double t = 0.8;
    LocalHamiltonian h(nn_pair_cover(n));
    const DenseOperator zz = kron(pauli_z(), pauli_z());
    const std::vector<double> couplings{0.9, -0.4, 1.3, 0.6};
    for (int i = 0; i + 1 < n; ++i) h.add_term({Patch{i, i + 1}, couplings[i] * zz, {}});
    std::mt19937_64 rng(21);
    const StateVector psi0 = random_state(32, rng);
    for (EvolutionMode mode : {EvolutionMode::generator, EvolutionMode::direct}) {
        const GaugeState s = evolve_to(init(psi0, h, mode), h, IntegratorConfig{}, t);
        for (int p = 0; p + 1 < n; ++p) {
            // All terms commute, so psi_I = exp(-i H_<I> t) psi0 with H_<I> built site by site.
            DenseOperator local = DenseOperator::Zero(32, 32);
            for (int b = std::max(0, p - 1); b <= std::min(n - 2, p + 1); ++b) {
                local += couplings[b] * site_operator(pauli_z(), b, n) * site_operator(pauli_z(), b + 1, n);
            }
            const StateVector expected = mat_exp_hermitian(local, t) * psi0;
            EXPECT_LT((s.psi(Patch{p, p + 1}) - expected).norm(), 1e-8) << to_string(mode) << " patch " << p;
        }
    }
}

TEST_F(EvolvedTfim, BondEnergiesMatchSchrodinger) {
    const StateVector psi_s = reference_->psi_s;
    for (int i = 0; i + 1 < kSites; ++i) {
        const DenseOperator zz = site_operator(pauli_z(), i, kSites) * site_operator(pauli_z(), i + 1, kSites);
        const Complex expected = psi_s.dot(zz * psi_s);
        const Complex got = local_expectation(*state_, Patch{i, i + 1}, pauli_string("Z" + std::to_string(i) + " Z" +
                                                                                     std::to_string(i + 1)));
        EXPECT_LT(std::abs(got - expected), 1e-6) << "bond " << i;
    }
    EXPECT_EQ(state_->steps(), 1000u);
    EXPECT_NEAR(state_->time(), kTime, 1e-12);
}

TEST_F(EvolvedTfim, FramesAndStatesMatchClosedForm) {
    for (std::size_t i = 0; i < state_->cover().size(); ++i) {
        EXPECT_LT(frobenius_distance(state_->frame(i), reference_->frames[i]), 1e-7);
        EXPECT_LT((state_->psi(i) - reference_->psi[i]).norm(), 1e-7);
    }
}

TEST(Step, GeneratorAndDirectModesAgree) {
    const LocalHamiltonian h = heisenberg_chain(5, 0.7, 1.0, -0.5);
    std::mt19937_64 rng(5);
    const StateVector psi0 = random_state(32, rng);
    const GaugeState g = evolve_to(init(psi0, h, EvolutionMode::generator), h, IntegratorConfig{}, 0.6);
    const GaugeState d = evolve_to(init(psi0, h, EvolutionMode::direct), h, IntegratorConfig{}, 0.6);
    for (std::size_t i = 0; i < h.cover().size(); ++i) EXPECT_LT((g.psi(i) - d.psi(i)).norm(), 1e-8);
}

TEST(Step, DirectModeConservesNorm) {
    const LocalHamiltonian h = tfim_chain(5, 1.0, 1.0);
    IntegratorConfig cfg;
    cfg.reunitarize_every = 0;
    const GaugeState s = evolve_to(init(plus_state(5), h, EvolutionMode::direct), h, cfg, 1.0);
    EXPECT_LT(diagnostics(s).norm, 1e-9);
}

TEST(Step, RenormalizeAndReunitarize) {
    const LocalHamiltonian h = tfim_chain(4, 1.0, 0.5);
    IntegratorConfig cfg;
    cfg.dt = 0.05;
    cfg.reunitarize_every = 1;
    cfg.renormalize = true;
    for (EvolutionMode mode : {EvolutionMode::generator, EvolutionMode::direct}) {
        const GaugeState s = evolve_to(init(plus_state(4), h, mode), h, cfg, 1.0);
        const DefectReport d = diagnostics(s);
        EXPECT_LT(d.unitarity, 1e-13) << to_string(mode);
        EXPECT_LT(d.norm, 1e-14) << to_string(mode);
    }
}

TEST(Step, EvolveToSplitsIntervalEvenly) {
    const LocalHamiltonian h = tfim_chain(3, 1.0, 1.0);
    IntegratorConfig cfg;
    cfg.dt = 0.03;
    const GaugeState s = evolve_to(init(plus_state(3), h), h, cfg, 0.1);
    EXPECT_EQ(s.steps(), 4u);
    EXPECT_NEAR(s.time(), 0.1, 1e-15);
    EXPECT_THROW(evolve_to(s, h, cfg, 0.05), ContractError);
    EXPECT_EQ(evolve_to(s, h, cfg, 0.1).steps(), 4u);
}

TEST(Step, RejectsBadInput) {
    const LocalHamiltonian h = tfim_chain(3, 1.0, 1.0);
    const GaugeState s = init(plus_state(3), h);
    IntegratorConfig cfg;
    cfg.dt = 0.0;
    EXPECT_THROW(step(s, h, cfg), ContractError);
    cfg.dt = std::nan("");
    EXPECT_THROW(step(s, h, cfg), ContractError);
    EXPECT_THROW(step(init(plus_state(3), single_site_cover(3)), h, IntegratorConfig{}), ContractError);
}

TEST(Step, DetectsDivergence) {
    const LocalHamiltonian h = tfim_chain(4, 1.0, 1.0);
    IntegratorConfig cfg;
    cfg.dt = 5.0;
    cfg.reunitarize_every = 0;
    EXPECT_THROW(step(init(plus_state(4), h, EvolutionMode::direct), h, cfg), DivergenceError);
    EXPECT_THROW(step(init(plus_state(4), h, EvolutionMode::generator), h, cfg), DivergenceError);
}

TEST(Step, DirectModeNeedsLinksOfMultiPatchTerms) {
    const LocalHamiltonian h = tfim_single_site(4, 1.0, 1.0);
    // Built from the cover alone: no links between single-site patches exist.
    const GaugeState bare = init(plus_state(4), h.cover(), EvolutionMode::direct);
    EXPECT_TRUE(bare.links().empty());
    EXPECT_THROW(step(bare, h, IntegratorConfig{}), ContractError);
    const GaugeState linked = init(plus_state(4), h, EvolutionMode::direct);
    EXPECT_EQ(linked.links().size(), 3u);
    EXPECT_NO_THROW(step(linked, h, IntegratorConfig{}));
}

TEST(Step, MultiPatchTermsMatchSchrodinger) {
    const int n = 4;
    const double t = 0.7;
    const LocalHamiltonian h = tfim_single_site(n, 1.0, 0.8);
    const StateVector psi_s = schrodinger_evolve(h, plus_state(n), t);
    for (EvolutionMode mode : {EvolutionMode::generator, EvolutionMode::direct}) {
        const GaugeState s = evolve_to(init(plus_state(n), h, mode), h, IntegratorConfig{}, t);
        for (int site = 0; site < n; ++site) {
            const DenseOperator x = site_operator(pauli_x(), site, n);
            EXPECT_LT(std::abs(local_expectation(s, Patch{site}, x_on(site)) - psi_s.dot(x * psi_s)), 1e-6)
                << to_string(mode) << " site " << site;
        }
        EXPECT_LT(diagnostics(s).consistency, 1e-8) << to_string(mode);
    }
}

TEST(Step, TimeDependentCoefficients) {
    LocalHamiltonian h(nn_pair_cover(4));
    const DenseOperator zz = kron(pauli_z(), pauli_z());
    const DenseOperator xx = kron(pauli_x(), identity(2)) + kron(identity(2), pauli_x());
    for (int i = 0; i < 3; ++i) {
        h.add_term({Patch{i, i + 1}, zz, [](double t) { return 1.0 + 0.5 * std::sin(3.0 * t); }});
        h.add_term({Patch{i, i + 1}, -0.5 * xx, [](double t) { return std::cos(t); }});
    }
    const StateVector psi_s = schrodinger_evolve(h, plus_state(4), 0.8);
    const GaugeState s = evolve_to(init(plus_state(4), h), h, IntegratorConfig{}, 0.8);
    const DenseOperator z1 = site_operator(pauli_z(), 1, 4);
    EXPECT_LT(std::abs(local_expectation(s, Patch{1, 2}, z_on(1)) - psi_s.dot(z1 * psi_s)), 1e-6);
}

// ----------------------------------------------------- local_expectation

TEST(LocalExpectation, TrivialCases) {
    std::mt19937_64 rng(13);
    const StateVector psi0 = random_state(16, rng);
    const GaugeState s = init(psi0, nn_pair_cover(4));
    EXPECT_NEAR(std::abs(local_expectation(s, Patch{1, 2}, LocalOperator{Patch{1, 2}, identity(4)}) - 1.0), 0.0,
                1e-14);
    const DenseOperator xz = site_operator(pauli_x(), 1, 4) * site_operator(pauli_z(), 2, 4);
    EXPECT_LT(std::abs(local_expectation(s, Patch{1, 2}, pauli_string("X1 Z2")) - psi0.dot(xz * psi0)), 1e-14);
    EXPECT_LT(std::abs(local_expectation(s, Patch{1, 2}, xz) - psi0.dot(xz * psi0)), 1e-14);
}

TEST_F(EvolvedTfim, RandomPatchOperatorsMatchSchrodinger) {
    std::mt19937_64 rng(99);
    const StateVector& psi_s = reference_->psi_s;
    for (const Patch& p : state_->cover().patches()) {
        for (int trial = 0; trial < 3; ++trial) {
            const LocalOperator a{p, testing::random_hermitian(4, rng)};
            const DenseOperator global = a.embedded(kSites);
            EXPECT_LT(std::abs(local_expectation(*state_, p, a) - psi_s.dot(global * psi_s)), 1e-6) << p.to_string();
        }
    }
}

TEST_F(EvolvedTfim, SupportLeakIsRejected) {
    EXPECT_THROW(local_expectation(*state_, Patch{1, 2}, z_on(3)), ContractError);
    EXPECT_THROW(local_expectation(*state_, Patch{1, 2}, site_operator(pauli_z(), 3, kSites)), ContractError);
    EXPECT_THROW(local_expectation(*state_, Patch{1, 2}, identity(8)), ContractError);
}

// ------------------------------------------------------------ correlator

TEST_F(EvolvedTfim, IdentityChainIsOne) {
    const auto& p = state_->cover().patches();
    const LocalOperator id{Patch{0}, identity(2)};
    const Complex c = correlator(*state_, {{p[0], id}, {p[2], LocalOperator{Patch{2}, identity(2)}},
                                          {p[4], LocalOperator{Patch{5}, identity(2)}}});
    EXPECT_LT(std::abs(c - 1.0), 1e-7);
}

TEST(Correlator, InitialProductExpectation) {
    std::mt19937_64 rng(2);
    const StateVector psi0 = random_state(32, rng);
    const GaugeState s = init(psi0, nn_pair_cover(5));
    const DenseOperator product = site_operator(pauli_x(), 0, 5) * site_operator(pauli_y(), 4, 5);
    const Complex c = correlator(s, {{Patch{0, 1}, x_on(0)}, {Patch{3, 4}, LocalOperator{Patch{4}, pauli_y()}}});
    EXPECT_LT(std::abs(c - psi0.dot(product * psi0)), 1e-14);
}

TEST_F(EvolvedTfim, TwoPatchCorrelatorMatchesHeisenberg) {
    const Complex expected = heisenberg_expectation(*hamiltonian_, plus_state(kSites), {z_on(2), z_on(5)}, kTime);
    const Complex got = correlator(*state_, {{Patch{2, 3}, z_on(2)}, {Patch{4, 5}, z_on(5)}});
    EXPECT_LT(std::abs(got - expected), 1e-6);
    // Non-Hermitian product across three patches.
    const Complex e3 = heisenberg_expectation(*hamiltonian_, plus_state(kSites), {x_on(0), z_on(3), x_on(5)}, kTime);
    const Complex g3 = correlator(*state_, {{Patch{0, 1}, x_on(0)}, {Patch{2, 3}, z_on(3)}, {Patch{4, 5}, x_on(5)}});
    EXPECT_LT(std::abs(g3 - e3), 1e-6);
}

TEST_F(EvolvedTfim, CorrelatorRejectsBadChains) {
    EXPECT_THROW(correlator(*state_, {}), ContractError);
    EXPECT_THROW(correlator(*state_, {{Patch{2, 3}, z_on(4)}}), ContractError);
}

// -------------------------------------------------------- gauge_transform

TEST_F(EvolvedTfim, IdentityTransformIsTrivial) {
    GaugeTransform g;
    for (const Patch& p : state_->cover().patches()) g.lambdas.emplace(p, identity(state_->dim()));
    const GaugeState t = gauge_transform(*state_, g);
    for (std::size_t i = 0; i < t.cover().size(); ++i) {
        EXPECT_EQ((t.psi(i) - state_->psi(i)).norm(), 0.0);
        EXPECT_EQ(frobenius_distance(t.frame(i), state_->frame(i)), 0.0);
    }
    EXPECT_EQ(max_difference(correlator_sample(t), correlator_sample(*state_)), 0.0);
}

TEST_F(EvolvedTfim, RandomTransformsPreserveCorrelators) {
    const auto before = correlator_sample(*state_);
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        std::mt19937_64 rng(1000 + seed);
        const GaugeState t = gauge_transform(*state_, random_transform(state_->cover(), rng));
        EXPECT_LT(max_difference(correlator_sample(t), before), 1e-10) << "seed " << seed;
        EXPECT_LT(diagnostics(t).consistency, diagnostics(*state_).consistency + 1e-12);
    }
}

TEST(GaugeTransform, DirectModeCorrelatorsInvariant) {
    const LocalHamiltonian h = tfim_chain(4, 1.0, 0.7);
    const GaugeState s = evolve_to(init(plus_state(4), h, EvolutionMode::direct), h, IntegratorConfig{}, 0.4);
    std::mt19937_64 rng(77);
    const GaugeState t = gauge_transform(s, random_transform(s.cover(), rng));
    EXPECT_LT(max_difference(correlator_sample(t), correlator_sample(s)), 1e-10);
}

TEST_F(EvolvedTfim, ComplementTransformReturnsToSchrodinger) {
    GaugeTransform g;
    for (std::size_t i = 0; i < state_->cover().size(); ++i) {
        g.lambdas.emplace(state_->cover().patch(i), reference_->complement[i]);
    }
    const GaugeState t = gauge_transform(*state_, g);
    for (std::size_t i = 0; i < t.cover().size(); ++i) {
        EXPECT_LT((t.psi(i) - reference_->psi_s).norm(), 1e-7);
        for (std::size_t j : t.cover().neighbors(i)) {
            EXPECT_LT(frobenius_distance(t.connection(i, j), identity(t.dim())), 1e-7);
        }
    }
}

TEST(GaugeTransform, EvolutionContinuesAfterTransform) {
    const LocalHamiltonian h = tfim_chain(4, 1.0, 1.0);
    std::mt19937_64 rng(31);
    for (EvolutionMode mode : {EvolutionMode::generator, EvolutionMode::direct}) {
        GaugeState s = evolve_to(init(plus_state(4), h, mode), h, IntegratorConfig{}, 0.3);
        s = gauge_transform(std::move(s), random_transform(s.cover(), rng));
        s = evolve_to(std::move(s), h, IntegratorConfig{}, 0.8);
        const StateVector psi_s = schrodinger_evolve(h, plus_state(4), 0.8);
        for (const Patch& p : h.cover().patches()) {
            const LocalOperator a = pauli_string("X" + std::to_string(p.sites()[0]) + " Z" + std::to_string(p.sites()[1]));
            const DenseOperator global = a.embedded(4);
            EXPECT_LT(std::abs(local_expectation(s, p, a) - psi_s.dot(global * psi_s)), 1e-6)
                << to_string(mode) << " " << p.to_string();
        }
        EXPECT_LT(diagnostics(s).consistency, 1e-8);
    }
}

TEST(GaugeTransform, RejectsNonUnitary) {
    const GaugeState s = init(plus_state(3), nn_pair_cover(3));
    GaugeTransform g;
    g.lambdas.emplace(Patch{0, 1}, 2.0 * identity(8));
    EXPECT_THROW(gauge_transform(s, g), ContractError);
    GaugeTransform wrong_dim;
    wrong_dim.lambdas.emplace(Patch{0, 1}, identity(4));
    EXPECT_THROW(gauge_transform(s, wrong_dim), ContractError);
}

// ---------------------------------------------------- apply_commuting_layer

TEST_F(EvolvedTfim, IdentityLayerIsTrivial) {
    const GaugeState t = apply_commuting_layer(*state_, {{Patch{0, 1}, identity(4)}, {Patch{2, 3}, identity(4)}});
    for (std::size_t i = 0; i < t.cover().size(); ++i) EXPECT_LT((t.psi(i) - state_->psi(i)).norm(), 1e-14);
}

TEST(CommutingLayer, SingleGateAtStart) {
    std::mt19937_64 rng(4);
    const StateVector psi0 = random_state(32, rng);
    const DenseOperator u = random_unitary(4, rng);
    for (EvolutionMode mode : {EvolutionMode::generator, EvolutionMode::direct}) {
        const GaugeState s = apply_commuting_layer(init(psi0, nn_pair_cover(5), mode), {{Patch{1, 2}, u}});
        const StateVector moved = embed_operator(u, Patch{1, 2}, 5) * psi0;
        for (std::size_t i = 0; i < s.cover().size(); ++i) {
            const bool touched = s.cover().patch(i).overlaps(Patch{1, 2});
            EXPECT_LT((s.psi(i) - (touched ? moved : psi0)).norm(), 1e-14) << i;
        }
    }
}

TEST_F(EvolvedTfim, BrickworkLayerMatchesGlobalApplication) {
    const Circuit c = brickwork(kSites, 2, 5);
    StateVector psi_s = reference_->psi_s;
    DenseOperator global = identity(state_->dim());
    for (const Layer& layer : c.layers) apply_layer_left(layer, global);
    psi_s = global * psi_s;
    const GaugeState t = run_circuit(*state_, c);
    std::mt19937_64 rng(12);
    for (const Patch& p : t.cover().patches()) {
        const LocalOperator a{p, testing::random_hermitian(4, rng)};
        const DenseOperator ga = a.embedded(kSites);
        EXPECT_LT(std::abs(local_expectation(t, p, a) - psi_s.dot(ga * psi_s)), 1e-6) << p.to_string();
    }
    EXPECT_LT(diagnostics(t).consistency, 1e-8);
}

TEST(CommutingLayer, DirectModeMatchesGlobalApplication) {
    const LocalHamiltonian h = tfim_chain(5, 1.0, 1.0);
    const GaugeState s = evolve_to(init(plus_state(5), h, EvolutionMode::direct), h, IntegratorConfig{}, 0.5);
    const Circuit c = brickwork(5, 3, 9);
    const GaugeState t = run_circuit(s, c);
    DenseOperator global = identity(32);
    for (const Layer& layer : c.layers) apply_layer_left(layer, global);
    const StateVector psi_s = global * schrodinger_evolve(h, plus_state(5), 0.5);
    for (const Patch& p : t.cover().patches()) {
        const LocalOperator a = pauli_string("Y" + std::to_string(p.sites()[0]) + " X" + std::to_string(p.sites()[1]));
        const DenseOperator ga = a.embedded(5);
        EXPECT_LT(std::abs(local_expectation(t, p, a) - psi_s.dot(ga * psi_s)), 1e-6) << p.to_string();
    }
}

TEST(CommutingLayer, RejectsBadLayers) {
    const GaugeState s = init(plus_state(4), nn_pair_cover(4));
    std::mt19937_64 rng(6);
    const DenseOperator u = random_unitary(4, rng);
    const DenseOperator v = random_unitary(4, rng);
    EXPECT_THROW(apply_commuting_layer(s, {{Patch{0, 1}, u}, {Patch{1, 2}, v}}), ContractError);
    EXPECT_THROW(apply_commuting_layer(s, {{Patch{0, 1}, 2.0 * u}}), ContractError);
    EXPECT_THROW(apply_commuting_layer(s, {{Patch{0, 2}, u}}), ContractError);
    // Overlapping but commuting gates are accepted.
    EXPECT_NO_THROW(apply_commuting_layer(s, {{Patch{0, 1}, kron(pauli_z(), pauli_z())},
                                              {Patch{1, 2}, kron(pauli_z(), identity(2))}}));
}

// ------------------------------------------------------------ diagnostics

TEST_F(EvolvedTfim, GeneratorModeIdentitiesHoldToRoundoff) {
    const DefectReport d = diagnostics(*state_);
    EXPECT_LT(d.cocycle, 1e-12);
    EXPECT_LT(d.unitarity, 1e-12);
    EXPECT_LT(d.consistency, 1e-12);
    EXPECT_LT(d.norm, 1e-12);
}

TEST(Diagnostics, DirectModeConsistencyConvergesAtFourthOrder) {
    const LocalHamiltonian h = tfim_chain(4, 1.0, 1.0);
    auto defect = [&](double dt) {
        IntegratorConfig cfg;
        cfg.dt = dt;
        cfg.reunitarize_every = 0;
        return diagnostics(evolve_to(init(plus_state(4), h, EvolutionMode::direct), h, cfg, 1.0)).consistency;
    };
    const double coarse = defect(0.02);
    const double fine = defect(0.01);
    EXPECT_GT(coarse / fine, 12.0);
    EXPECT_LT(coarse / fine, 20.0);
}

}  // namespace
}  // namespace gaugepic
