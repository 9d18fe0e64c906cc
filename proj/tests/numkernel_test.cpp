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

#include "gaugepic/numkernel.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

namespace gaugepic {
namespace {

using testing::random_hermitian;
using testing::random_matrix;
using testing::random_unitary;

// exp(-i H t) by scaling and squaring a 30-term Taylor series.
DenseOperator taylor_exp(const DenseOperator& h, double t) {
    const DenseOperator a = Complex(0.0, -t) * h;
    int squarings = 0;
    double norm = a.norm();
    while (norm > 0.5) {
        norm *= 0.5;
        ++squarings;
    }
    const DenseOperator scaled = a / std::pow(2.0, squarings);
    DenseOperator term = DenseOperator::Identity(h.rows(), h.cols());
    DenseOperator sum = term;
    for (int k = 1; k <= 30; ++k) {
        term = term * scaled / static_cast<double>(k);
        sum += term;
    }
    for (int k = 0; k < squarings; ++k) sum = sum * sum;
    return sum;
}

TEST(MatExpHermitian, ZeroHamiltonianIsIdentity) {
    const DenseOperator zero = DenseOperator::Zero(4, 4);
    for (double t : {0.0, 0.3, -2.5}) {
        EXPECT_LT(frobenius_distance(mat_exp_hermitian(zero, t), identity(4)), 1e-15);
    }
}

TEST(MatExpHermitian, PauliZIsDiagonalPhase) {
    const double t = 0.83;
    DenseOperator expected = DenseOperator::Zero(2, 2);
    expected(0, 0) = std::polar(1.0, -t);
    expected(1, 1) = std::polar(1.0, t);
    EXPECT_LT(frobenius_distance(mat_exp_hermitian(pauli_z(), t), expected), 1e-15);
}

TEST(MatExpHermitian, MatchesTaylorOracle) {
    std::mt19937_64 rng(101);
    const DenseOperator h = random_hermitian(8, rng);
    const DenseOperator u = mat_exp_hermitian(h, 0.7);
    EXPECT_LT(frobenius_distance(u, taylor_exp(h, 0.7)), 1e-11);
    EXPECT_LT(unitarity_defect(u), 1e-12);
}

TEST(MatExpHermitian, RejectsNonHermitian) {
    DenseOperator m = pauli_x();
    m(0, 1) = 2.0;
    EXPECT_THROW(mat_exp_hermitian(m, 1.0), ContractError);
    EXPECT_THROW(mat_exp_hermitian(DenseOperator::Zero(2, 3), 1.0), ContractError);
}

TEST(MatExpHermitian, InverseAndGroupProperties) {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> time(-2.0, 2.0);
    for (int trial = 0; trial < 30; ++trial) {
        const std::size_t dim = std::size_t{1} << (1 + trial % 3);
        const DenseOperator h = random_hermitian(dim, rng);
        const double s = time(rng);
        const double t = time(rng);
        EXPECT_LT(frobenius_distance(mat_exp_hermitian(h, t) * mat_exp_hermitian(h, -t), identity(dim)), 1e-11);
        EXPECT_LT(frobenius_distance(mat_exp_hermitian(h, s + t), mat_exp_hermitian(h, s) * mat_exp_hermitian(h, t)),
                  1e-11);
    }
}

TEST(PolarUnitary, UnitaryInputIsFixed) {
    std::mt19937_64 rng(3);
    const DenseOperator u = random_unitary(8, rng);
    const DenseOperator p = polar_unitary(u);
    EXPECT_LT(frobenius_distance(p, u), 1e-13);
    EXPECT_LT(frobenius_distance(polar_unitary(p), p), 1e-13);
}

TEST(PolarUnitary, ScaledIdentity) {
    EXPECT_LT(frobenius_distance(polar_unitary(2.0 * identity(4)), identity(4)), 1e-14);
}

TEST(PolarUnitary, MatchesSvdOracleNearUnitary) {
    std::mt19937_64 rng(11);
    for (std::size_t dim : {2u, 4u, 16u}) {
        const DenseOperator m = random_unitary(dim, rng) + 1e-3 * random_matrix(dim, rng);
        Eigen::JacobiSVD<DenseOperator> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
        const DenseOperator oracle = svd.matrixU() * svd.matrixV().adjoint();
        EXPECT_LT(frobenius_distance(polar_unitary(m), oracle), 1e-12) << "dim " << dim;
    }
}

TEST(PolarUnitary, FarFromUnitaryStillConverges) {
    std::mt19937_64 rng(12);
    const DenseOperator m = random_matrix(8, rng);
    Eigen::JacobiSVD<DenseOperator> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
    EXPECT_LT(frobenius_distance(polar_unitary(m), svd.matrixU() * svd.matrixV().adjoint()), 1e-11);
}

TEST(PolarUnitary, RejectsSingular) {
    DenseOperator m = identity(3);
    m(2, 2) = 0.0;
    EXPECT_THROW(polar_unitary(m), ContractError);
    EXPECT_THROW(polar_unitary(DenseOperator::Zero(2, 2)), ContractError);
}

TEST(FrobeniusDistance, TrivialCases) {
    EXPECT_EQ(frobenius_distance(pauli_x(), pauli_x()), 0.0);
    EXPECT_NEAR(frobenius_distance(identity(2), DenseOperator::Zero(2, 2)), std::sqrt(2.0), 1e-15);
}

TEST(FrobeniusDistance, MatchesElementwiseSum) {
    std::mt19937_64 rng(5);
    const DenseOperator a = random_matrix(6, rng);
    const DenseOperator b = random_matrix(6, rng);
    double sq = 0.0;
    for (Eigen::Index r = 0; r < 6; ++r) {
        for (Eigen::Index c = 0; c < 6; ++c) sq += std::norm(a(r, c) - b(r, c));
    }
    EXPECT_NEAR(frobenius_distance(a, b), std::sqrt(sq), 1e-14);
}

TEST(FrobeniusDistance, DimensionMismatchThrows) {
    EXPECT_THROW(frobenius_distance(identity(2), identity(4)), ContractError);
}

TEST(Kron, SiteZeroIsLowBit) {
    // Z on the low factor: diag(1, -1, 1, -1).
    const DenseOperator z0 = kron(identity(2), pauli_z());
    EXPECT_EQ(z0(1, 1), Complex(-1.0));
    EXPECT_EQ(z0(2, 2), Complex(1.0));
}

}  // namespace
}  // namespace gaugepic
