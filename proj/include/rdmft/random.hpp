#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include <Eigen/Dense>

#include "rdmft/ensemble.hpp"
#include "rdmft/fock.hpp"
#include "rdmft/hamiltonian.hpp"

namespace rdmft {

/// Deterministic random source: mt19937_64 bit stream with hand-rolled
/// uniform/normal transforms, so identical seeds give identical values on any
/// platform (std::*_distribution is implementation-defined).
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    double uniform() {  // [0, 1)
        return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
    }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    int uniform_int(int lo, int hi) {  // inclusive bounds
        return lo + static_cast<int>(uniform() * (hi - lo + 1));
    }
    double normal() {
        // Box-Muller; the unused half of the pair is discarded
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        constexpr double two_pi = 6.283185307179586476925286766559;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(two_pi * u2);
    }
    cplx complex_normal() {
        const double re = normal();
        return {re, normal()};
    }

private:
    std::mt19937_64 gen_;
};

inline Eigen::MatrixXcd random_matrix(Rng& rng, int n, double scale = 1.0) {
    Eigen::MatrixXcd m(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) m(i, j) = scale * rng.complex_normal();
    return m;
}

inline Eigen::MatrixXcd random_hermitian(Rng& rng, int n, double scale = 1.0) {
    const Eigen::MatrixXcd m = random_matrix(rng, n, scale);
    return cplx(0.5, 0) * (m + m.adjoint());
}

inline Eigen::MatrixXcd random_symmetric(Rng& rng, int n, double scale = 1.0) {
    const Eigen::MatrixXcd m = random_matrix(rng, n, scale);
    return cplx(0.5, 0) * (m + m.transpose());
}

inline Eigen::MatrixXcd random_antisymmetric(Rng& rng, int n, double scale = 1.0) {
    const Eigen::MatrixXcd m = random_matrix(rng, n, scale);
    return cplx(0.5, 0) * (m - m.transpose());
}

/// Random weights on the probability simplex.
inline Eigen::VectorXd random_weights(Rng& rng, int m) {
    Eigen::VectorXd w(m);
    for (int i = 0; i < m; ++i) w(i) = -std::log(1.0 - rng.uniform());
    return w / w.sum();
}

/// Orthonormal columns from a QR factorization of a random complex matrix.
inline Eigen::MatrixXcd random_orthonormal(Rng& rng, int rows, int cols) {
    Eigen::MatrixXcd a(rows, cols);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) a(i, j) = rng.complex_normal();
    Eigen::HouseholderQR<Eigen::MatrixXcd> qr(a);
    Eigen::MatrixXcd q = qr.householderQ() * Eigen::MatrixXcd::Identity(rows, cols);
    return q;
}

/// Hermiticity-symmetrized random two-body tensor w_ijkl = conj(w_lkji); the
/// bosonic variant adds a multiple of the identity to make the reshaped matrix
/// positive definite.
inline std::vector<cplx> random_two_body(Rng& rng, int nb, double scale,
                                         bool force_positive = false) {
    const int n2 = nb * nb;
    Eigen::MatrixXcd w = random_hermitian(rng, n2, scale);  // in the (i,j),(l,k) reshape
    if (force_positive) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(w);
        const double lift = std::max(0.0, -es.eigenvalues().minCoeff()) + scale;
        w += lift * Eigen::MatrixXcd::Identity(n2, n2);
    }
    std::vector<cplx> out(static_cast<std::size_t>(n2) * n2);
    for (int i = 0; i < nb; ++i)
        for (int j = 0; j < nb; ++j)
            for (int k = 0; k < nb; ++k)
                for (int l = 0; l < nb; ++l)
                    out[((static_cast<std::size_t>(i) * nb + j) * nb + k) * nb + l] =
                        w(i * nb + j, l * nb + k);
    return out;
}

/// Random fermionic spec with an optional two-body interaction.
inline HamiltonianSpec random_fermionic_spec(Rng& rng, int nb, double interaction_scale = 0.0) {
    HamiltonianSpec spec(Statistics::fermion, random_hermitian(rng, nb, 1.0));
    if (interaction_scale > 0.0) spec.set_w(random_two_body(rng, nb, interaction_scale));
    return spec;
}

/// Random bosonic spec: positive-definite h1 (so v = 0 is feasible), optional
/// positive-definite interaction.
inline HamiltonianSpec random_bosonic_spec(Rng& rng, int nb, double gap = 1.0,
                                           double interaction_scale = 0.0) {
    Eigen::MatrixXcd h1 = random_hermitian(rng, nb, 0.5);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h1);
    h1 += (gap - std::min(0.0, es.eigenvalues().minCoeff()) + 0.1) *
          Eigen::MatrixXcd::Identity(nb, nb);
    HamiltonianSpec spec(Statistics::boson, std::move(h1));
    if (interaction_scale > 0.0)
        spec.set_w(random_two_body(rng, nb, interaction_scale, true));
    return spec;
}

/// Random interior 1RDM: random natural orbitals with occupations bounded away
/// from 0 (and 1 for fermions).
inline OneRDM random_interior_rdm(Rng& rng, int nb, Statistics stats, double margin = 0.05) {
    const Eigen::MatrixXcd u = random_orthonormal(rng, nb, nb);
    Eigen::VectorXd n(nb);
    for (int i = 0; i < nb; ++i)
        n(i) = (stats == Statistics::fermion) ? rng.uniform(margin, 1.0 - margin)
                                              : rng.uniform(margin, 2.0);
    return {Eigen::MatrixXcd(u * n.asDiagonal() * u.adjoint()), stats};
}

/// Random density-matrix operator with m orthonormal states on a d-dim space.
inline DensityMatrixOperator random_density_matrix(Rng& rng, int dim, int m) {
    DensityMatrixOperator rho;
    rho.weights = random_weights(rng, m);
    rho.states = random_orthonormal(rng, dim, m);
    return rho;
}

}  // namespace rdmft
