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

// Dense complex linear algebra used throughout gaugepic.
//
// Basis convention (used everywhere): the computational basis state
// |b_{n-1} ... b_1 b_0> is the integer b = sum_s b_s 2^s, i.e. site s is bit s
// of the index. In Kronecker-product form site 0 is the rightmost factor.

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>

namespace gaugepic {

using Complex = std::complex<double>;
using StateVector = Eigen::VectorXcd;
using DenseOperator = Eigen::MatrixXcd;

inline constexpr double kDefaultTolerance = 1e-10;

/// Raised when an operation's documented precondition does not hold.
class ContractError : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

inline DenseOperator identity(std::size_t dim) {
    return DenseOperator::Identity(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
}

inline DenseOperator pauli_x() {
    DenseOperator m(2, 2);
    m << 0, 1, 1, 0;
    return m;
}

inline DenseOperator pauli_y() {
    DenseOperator m(2, 2);
    m << 0, Complex(0, -1), Complex(0, 1), 0;
    return m;
}

inline DenseOperator pauli_z() {
    DenseOperator m(2, 2);
    m << 1, 0, 0, -1;
    return m;
}

/// Kronecker product a (x) b; b occupies the low index bits.
inline DenseOperator kron(const DenseOperator& a, const DenseOperator& b) {
    DenseOperator out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        for (Eigen::Index j = 0; j < a.cols(); ++j) {
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
        }
    }
    return out;
}

inline bool all_finite(const DenseOperator& m) { return m.allFinite(); }

/// ||M - M^dagger||_F
inline double hermiticity_defect(const DenseOperator& m) {
    return (m - m.adjoint()).norm();
}

/// ||M^dagger M - 1||_F
inline double unitarity_defect(const DenseOperator& m) {
    if (m.rows() != m.cols()) {
        throw ContractError("unitarity_defect: matrix is not square");
    }
    return (m.adjoint() * m - DenseOperator::Identity(m.rows(), m.cols())).norm();
}

/// Hermiticity test relative to the matrix scale: ||M - M^dag||_F <= tol * max(1, ||M||_F).
inline bool is_hermitian(const DenseOperator& m, double tol = kDefaultTolerance) {
    return m.rows() == m.cols() && hermiticity_defect(m) <= tol * std::max(1.0, m.norm());
}

inline bool is_unitary(const DenseOperator& m, double tol = kDefaultTolerance) {
    return m.rows() == m.cols() && unitarity_defect(m) <= tol;
}

/// ||A - B||_F. Throws ContractError on a shape mismatch.
inline double frobenius_distance(const DenseOperator& a, const DenseOperator& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        throw ContractError("frobenius_distance: dimension mismatch (" + std::to_string(a.rows()) + "x" +
                            std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                            std::to_string(b.cols()) + ")");
    }
    return (a - b).norm();
}

/// exp(-i H t) for Hermitian H, computed from the eigendecomposition of H.
///
/// The input is symmetrized before diagonalization so the result is unitary
/// to roundoff. Hermiticity is checked relative to the scale of H.
inline DenseOperator mat_exp_hermitian(const DenseOperator& h, double t, double tol = 1e-12) {
    if (h.rows() != h.cols()) {
        throw ContractError("mat_exp_hermitian: matrix is not square");
    }
    if (!std::isfinite(t)) {
        throw ContractError("mat_exp_hermitian: time is not finite");
    }
    if (!is_hermitian(h, tol)) {
        throw ContractError("mat_exp_hermitian: operator is not Hermitian (defect " +
                            std::to_string(hermiticity_defect(h)) + ")");
    }
    if (t == 0.0) return DenseOperator::Identity(h.rows(), h.cols());
    const DenseOperator sym = 0.5 * (h + h.adjoint());
    Eigen::SelfAdjointEigenSolver<DenseOperator> eig(sym);
    if (eig.info() != Eigen::Success) {
        throw std::runtime_error("mat_exp_hermitian: eigendecomposition failed");
    }
    const Eigen::VectorXd& evals = eig.eigenvalues();
    Eigen::VectorXcd phases(evals.size());
    for (Eigen::Index k = 0; k < evals.size(); ++k) {
        phases(k) = std::polar(1.0, -evals(k) * t);
    }
    const DenseOperator& v = eig.eigenvectors();
    return v * phases.asDiagonal() * v.adjoint();
}

/// Unitary factor of the polar decomposition M = Q P, i.e. the nearest
/// unitary to M in Frobenius norm.
///
/// Scaled Newton iteration X <- (g X + (g X)^{-dagger}) / 2 with the
/// Frobenius-norm scaling g; converges quadratically for nonsingular M.
inline DenseOperator polar_unitary(const DenseOperator& m) {
    if (m.rows() != m.cols() || m.rows() == 0) {
        throw ContractError("polar_unitary: matrix must be square and nonempty");
    }
    if (!m.allFinite()) {
        throw ContractError("polar_unitary: matrix has non-finite entries");
    }
    const double dim_scale = std::sqrt(static_cast<double>(m.rows()));
    DenseOperator x = m;
    double change = 1.0;
    for (int iter = 0; iter < 100; ++iter) {
        Eigen::PartialPivLU<DenseOperator> lu(x);
        if (!(lu.rcond() > 1e-14)) {
            throw ContractError("polar_unitary: matrix is singular or numerically singular");
        }
        const DenseOperator x_inv = lu.inverse();
        // Scaling only pays off far from convergence.
        const double gamma = change > 1e-2 * dim_scale ? std::sqrt(x_inv.norm() / x.norm()) : 1.0;
        DenseOperator next = 0.5 * (gamma * x + x_inv.adjoint() / gamma);
        change = (next - x).norm();
        x = std::move(next);
        if (change <= 1e-8 * dim_scale) {
            // Quadratic convergence: one more step reaches roundoff.
            Eigen::PartialPivLU<DenseOperator> last(x);
            x = 0.5 * (x + last.inverse().adjoint());
            break;
        }
    }
    return x;
}

}  // namespace gaugepic
