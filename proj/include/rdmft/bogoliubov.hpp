#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "rdmft/fock.hpp"

namespace rdmft {

/// General quadratic Hamiltonian
///   H = sum_ij omega_ij a+_i a_j
///     + sum_i (h*_i a+_i + h_i a_i)
///     + sum_ij (D+_ij a+_i a+_j + D_ij a_i a_j)
/// with omega Hermitian and D symmetric (bosons) or antisymmetric (fermions).
struct QuadraticSpec {
    Statistics statistics = Statistics::boson;
    Eigen::MatrixXcd omega;
    Eigen::VectorXcd source;   // size 0 when absent
    Eigen::MatrixXcd pairing;  // size 0x0 when absent

    int n_basis() const { return static_cast<int>(omega.rows()); }
    bool has_source() const { return source.size() > 0 && source.cwiseAbs().maxCoeff() > 0.0; }
    bool has_pairing() const { return pairing.size() > 0 && pairing.cwiseAbs().maxCoeff() > 0.0; }
};

struct SourceElimination {
    Eigen::VectorXcd shift;      // h-tilde
    double shift_constant = 0.0; // C_h
    QuadraticSpec reduced;       // source removed
};

struct BogoliubovSolution {
    Statistics statistics = Statistics::boson;
    Eigen::VectorXcd shift;       // h-tilde (zero when solved without source)
    double shift_constant = 0.0;  // C_h
    Eigen::MatrixXcd U, V;
    Eigen::VectorXd quasiparticle_energies;  // ascending
    double ground_constant = 0.0;            // +-1/2 Tr(E* - omega) minus C_h
    bool stable = true;
    double max_imag = 0.0;  // largest |Im| over the selected eigenvalues
};

struct QuadraticThermodynamics {
    double log_z = 0.0;
    double z = 0.0;
    double omega = 0.0;
    double energy = 0.0;
    double entropy = 0.0;
};

namespace detail {

inline void check_pairing_symmetry(const QuadraticSpec& spec, double tol = 1e-12) {
    if (spec.pairing.size() == 0) return;
    const double scale = std::max(1.0, spec.pairing.cwiseAbs().maxCoeff());
    const Eigen::MatrixXcd res = (spec.statistics == Statistics::boson)
        ? Eigen::MatrixXcd(spec.pairing - spec.pairing.transpose())
        : Eigen::MatrixXcd(spec.pairing + spec.pairing.transpose());
    if (res.cwiseAbs().maxCoeff() > tol * scale)
        throw std::invalid_argument("QuadraticSpec: pairing symmetry does not match statistics");
}

// Orthonormal basis of the antilinear fixed/pair structure is extracted from
// the kernel of a real 2m x 2m matrix; the smallest eigenvectors of K^T K give
// a deterministic orthonormal kernel basis.
inline Eigen::MatrixXd kernel_basis(const Eigen::MatrixXd& K, int dim) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(K.transpose() * K);
    return es.eigenvectors().leftCols(dim);
}

}  // namespace detail

/// Removes the source term by a constant shift of the mode operators.  Returns
/// the shift vector, the spectral offset C_h and the source-free spec.  Only
/// bosonic operators admit the scalar shift; fermionic sources are rejected.
inline SourceElimination eliminate_source(const QuadraticSpec& spec) {
    const int nb = spec.n_basis();
    detail::check_pairing_symmetry(spec);

    SourceElimination out;
    out.reduced = spec;
    out.reduced.source = Eigen::VectorXcd();
    if (!spec.has_source()) {
        out.shift = Eigen::VectorXcd::Zero(nb);
        return out;
    }
    if (spec.statistics == Statistics::fermion)
        throw std::invalid_argument(
            "eliminate_source: a fermionic source term is incompatible with the "
            "canonical anticommutation relations (scalar shifts break them)");

    // omega^T h + (D + D^T) conj(h) = source, split into real and imaginary
    // parts.  Collecting the shifted-mode coefficients puts the one-body block
    // in transposed; for real omega this is the usual untransposed equation.
    Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(nb, nb);
    if (spec.pairing.size() > 0) m = spec.pairing + spec.pairing.transpose();
    const Eigen::MatrixXcd wt = spec.omega.transpose();
    const Eigen::MatrixXd a = wt.real(), b = wt.imag();
    const Eigen::MatrixXd p = m.real(), q = m.imag();
    Eigen::MatrixXd sys(2 * nb, 2 * nb);
    sys << a + p, q - b,
           b + q, a - p;
    Eigen::VectorXd rhs(2 * nb);
    rhs << spec.source.real(), spec.source.imag();

    Eigen::FullPivLU<Eigen::MatrixXd> lu(sys);
    lu.setThreshold(1e-12);
    if (!lu.isInvertible()) {
        const Eigen::MatrixXd ker = lu.kernel();
        std::string dir = "[";
        for (int i = 0; i < ker.rows(); ++i)
            dir += (i ? ", " : "") + std::to_string(ker(i, 0));
        throw std::runtime_error(
            "eliminate_source: singular shift equation (zero mode along " + dir + "])");
    }
    const Eigen::VectorXd sol = lu.solve(rhs);
    out.shift = sol.head(nb) + cplx(0, 1) * sol.tail(nb);
    // C_h = (h~+ h + h+ h~)/2 = Re(h~+ h)
    out.shift_constant = (out.shift.adjoint() * spec.source).real()(0);
    const Eigen::VectorXcd residual =
        wt * out.shift + m * out.shift.conjugate() - spec.source;
    if (residual.cwiseAbs().maxCoeff() >
        1e-10 * std::max(1.0, spec.source.cwiseAbs().maxCoeff()))
        throw std::runtime_error("eliminate_source: shift equation residual too large");
    return out;
}

/// Takagi factorization of a complex symmetric matrix: returns a unitary U and
/// d >= 0 (descending) with U^T D U = diag(d).
inline std::pair<Eigen::MatrixXcd, Eigen::VectorXd> takagi(const Eigen::MatrixXcd& d_in) {
    const int n = static_cast<int>(d_in.rows());
    const double scale = std::max(1.0, d_in.size() ? d_in.cwiseAbs().maxCoeff() : 0.0);
    if ((d_in - d_in.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
        throw std::invalid_argument("takagi: matrix is not symmetric");

    // Eigenspaces of D conj(D) are invariant under the antilinear map
    // T v = D conj(v) / sigma, which is an involution there; its fixed vectors
    // are the Takagi vectors with real non-negative values sigma.
    Eigen::MatrixXcd h = d_in * d_in.adjoint();
    h = cplx(0.5, 0) * (h + h.adjoint());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h);
    const Eigen::VectorXd evals = es.eigenvalues().cwiseMax(0.0);

    Eigen::MatrixXcd u(n, n);
    Eigen::VectorXd d(n);
    const double eval_scale = std::max(1.0, evals.size() ? evals.maxCoeff() : 0.0);
    const double group_tol = 1e-10 * eval_scale;
    const double zero_tol = 1e-14 * eval_scale;  // on the squared-value scale

    int col = 0;
    int hi = n;  // process groups from the largest eigenvalue down
    while (hi > 0) {
        int lo = hi - 1;
        while (lo > 0 && std::abs(evals(lo - 1) - evals(hi - 1)) <= group_tol) --lo;
        const int m = hi - lo;
        const double sigma = std::sqrt(std::max(0.0, evals(lo)));
        const Eigen::MatrixXcd w = es.eigenvectors().middleCols(lo, m);
        if (evals(lo) <= zero_tol) {
            // D conj(v) = 0 on this subspace; any orthonormal basis works.
            for (int k = 0; k < m; ++k) {
                u.col(col) = w.col(k).conjugate();
                d(col++) = 0.0;
            }
        } else {
            const Eigen::MatrixXcd t = (w.adjoint() * d_in * w.conjugate()) / sigma;
            const Eigen::MatrixXd r = t.real(), s = t.imag();
            Eigen::MatrixXd k(2 * m, 2 * m);
            k << r - Eigen::MatrixXd::Identity(m, m), s,
                 s, -r - Eigen::MatrixXd::Identity(m, m);
            const Eigen::MatrixXd z = detail::kernel_basis(k, m);
            for (int j = 0; j < m; ++j) {
                const Eigen::VectorXcd zc = z.col(j).head(m) + cplx(0, 1) * z.col(j).tail(m);
                u.col(col) = (w * zc).conjugate();
                d(col++) = sigma;
            }
        }
        hi = lo;
    }
    return {u, d};
}

/// Youla canonical form of a complex antisymmetric matrix: returns a unitary U
/// and the block values d >= 0 (descending) with U^T D U equal to the direct
/// sum of [[0, d_k], [-d_k, 0]] blocks plus a zero row/column when n is odd.
inline std::pair<Eigen::MatrixXcd, Eigen::VectorXd> youla(const Eigen::MatrixXcd& d_in) {
    const int n = static_cast<int>(d_in.rows());
    const double scale = std::max(1.0, d_in.size() ? d_in.cwiseAbs().maxCoeff() : 0.0);
    if ((d_in + d_in.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
        throw std::invalid_argument("youla: matrix is not antisymmetric");

    Eigen::MatrixXcd h = d_in * d_in.adjoint();
    h = cplx(0.5, 0) * (h + h.adjoint());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h);
    const Eigen::VectorXd evals = es.eigenvalues().cwiseMax(0.0);

    Eigen::MatrixXcd u(n, n);
    Eigen::VectorXd d(n / 2);
    const double eval_scale = std::max(1.0, evals.size() ? evals.maxCoeff() : 0.0);
    const double group_tol = 1e-10 * eval_scale;
    const double zero_tol = 1e-14 * eval_scale;

    int col = 0, blk = 0;
    int hi = n;
    while (hi > 0) {
        int lo = hi - 1;
        while (lo > 0 && std::abs(evals(lo - 1) - evals(hi - 1)) <= group_tol) --lo;
        const int m = hi - lo;
        const double sigma = std::sqrt(std::max(0.0, evals(lo)));
        const Eigen::MatrixXcd w = es.eigenvectors().middleCols(lo, m);
        if (evals(lo) <= zero_tol) {
            for (int k = 0; k < m; ++k) u.col(col++) = w.col(k).conjugate();
        } else {
            // T v = D conj(v) / sigma squares to -1 here: vectors come in
            // orthogonal pairs (v, Tv) spanning canonical 2x2 blocks.
            if (m % 2 != 0) throw std::runtime_error("youla: odd multiplicity at nonzero sigma");
            const Eigen::MatrixXcd t = (w.adjoint() * d_in * w.conjugate()) / sigma;
            Eigen::MatrixXcd rem = Eigen::MatrixXcd::Identity(m, m);
            int nrem = m;
            while (nrem >= 2) {
                // first remaining direction
                int pick = 0;
                double best = -1.0;
                for (int j = 0; j < m; ++j) {
                    const double nn = rem.col(j).norm();
                    if (nn > best) { best = nn; pick = j; }
                }
                Eigen::VectorXcd z1 = rem.col(pick) / rem.col(pick).norm();
                Eigen::VectorXcd z2 = t * z1.conjugate();
                z2 -= (z1.adjoint() * z2)(0) * z1;
                z2.normalize();
                u.col(col) = (w * z2).conjugate();
                u.col(col + 1) = (w * z1).conjugate();
                d(blk++) = sigma;
                col += 2;
                for (int j = 0; j < m; ++j) {
                    rem.col(j) -= z1 * (z1.adjoint() * rem.col(j))(0);
                    rem.col(j) -= z2 * (z2.adjoint() * rem.col(j))(0);
                }
                nrem -= 2;
            }
        }
        hi = lo;
    }
    return {u, d.head(blk).eval()};
}

/// Diagonalizes a source-free quadratic Hamiltonian.  Fermions reduce to a
/// Hermitian 2Nb eigenproblem; bosons to the eigenproblem of eta*M with the
/// indefinite metric eta = diag(1, -1).  Bosonic solutions with complex
/// eigenvalues or vanishing metric norm are flagged unstable.
inline BogoliubovSolution diagonalize(const QuadraticSpec& spec) {
    if (spec.has_source())
        throw std::invalid_argument("diagonalize: spec still carries a source term; "
                                    "run eliminate_source first");
    detail::check_pairing_symmetry(spec);
    const int nb = spec.n_basis();
    const bool boson = spec.statistics == Statistics::boson;

    Eigen::MatrixXcd dmat = spec.pairing.size() ? spec.pairing
                                                : Eigen::MatrixXcd::Zero(nb, nb);
    Eigen::MatrixXcd m(2 * nb, 2 * nb);
    const double sgn = boson ? 1.0 : -1.0;
    m << 0.5 * spec.omega, dmat.adjoint(),
         dmat, sgn * 0.5 * spec.omega.transpose();

    BogoliubovSolution sol;
    sol.statistics = spec.statistics;
    sol.shift = Eigen::VectorXcd::Zero(nb);
    sol.U.resize(nb, nb);
    sol.V.resize(nb, nb);

    Eigen::MatrixXcd cols(2 * nb, nb);
    Eigen::VectorXd energies(nb);

    if (!boson) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(m);
        // eigenvalues come in +- pairs; the ascending top half carries E/2
        for (int k = 0; k < nb; ++k) {
            energies(k) = 2.0 * es.eigenvalues()(nb + k);
            cols.col(k) = es.eigenvectors().col(nb + k);
        }
        sol.stable = true;
        sol.max_imag = 0.0;
    } else {
        Eigen::MatrixXcd eta_m = m;
        eta_m.bottomRows(nb) *= -1.0;
        Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(eta_m);
        const double escale = std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());

        // candidates with positive real part, ascending
        std::vector<int> order(2 * nb);
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
            return es.eigenvalues()(a).real() < es.eigenvalues()(b).real();
        });
        sol.stable = true;
        sol.max_imag = 0.0;
        for (int k = 0; k < nb; ++k) {
            const int idx = order[nb + k];
            const cplx lam = es.eigenvalues()(idx);
            sol.max_imag = std::max(sol.max_imag, std::abs(lam.imag()));
            Eigen::VectorXcd vec = es.eigenvectors().col(idx);
            const double norm2 =
                vec.head(nb).squaredNorm() - vec.tail(nb).squaredNorm();
            if (std::abs(lam.imag()) > 1e-10 * escale || norm2 <= 1e-10) {
                sol.stable = false;
            } else {
                vec /= std::sqrt(norm2);
            }
            energies(k) = 2.0 * lam.real();
            cols.col(k) = vec;
        }
    }

    // ascending energies with a consistent column permutation
    std::vector<int> perm(nb);
    std::iota(perm.begin(), perm.end(), 0);
    std::stable_sort(perm.begin(), perm.end(),
                     [&](int a, int b) { return energies(a) < energies(b); });
    sol.quasiparticle_energies.resize(nb);
    for (int k = 0; k < nb; ++k) {
        sol.quasiparticle_energies(k) = energies(perm[k]);
        const Eigen::VectorXcd c = cols.col(perm[k]);
        // columns are (U+, -+ V+): U = X+, V = -+(Y+)
        sol.U.row(k) = c.head(nb).adjoint();
        sol.V.row(k) = boson ? (-c.tail(nb)).adjoint().eval() : c.tail(nb).adjoint().eval();
    }

    if (boson && sol.stable && sol.quasiparticle_energies.minCoeff() <= 0.0)
        sol.stable = false;

    const double trace_e = sol.quasiparticle_energies.sum();
    const double trace_w = spec.omega.trace().real();
    sol.ground_constant = boson ? 0.5 * (trace_e - trace_w) : -0.5 * (trace_e - trace_w);
    return sol;
}

/// Full pipeline: eliminate the source (if any), diagonalize, and fold the
/// spectral offset C_h into the ground constant.
inline BogoliubovSolution solve_quadratic(const QuadraticSpec& spec) {
    const SourceElimination se = eliminate_source(spec);
    BogoliubovSolution sol = diagonalize(se.reduced);
    sol.shift = se.shift;
    sol.shift_constant = se.shift_constant;
    sol.ground_constant -= se.shift_constant;
    return sol;
}

/// Closed-form thermodynamics from the quasiparticle spectrum:
/// Z = exp(-beta*ground) * prod_k (1 +- exp(-beta*E_k))^(+-1).
inline QuadraticThermodynamics quadratic_thermodynamics(const BogoliubovSolution& sol,
                                                        double beta) {
    if (!sol.stable)
        throw std::invalid_argument("quadratic_thermodynamics: unstable solution");
    if (beta <= 0.0) throw std::invalid_argument("quadratic_thermodynamics: beta must be > 0");
    QuadraticThermodynamics td;
    td.log_z = -beta * sol.ground_constant;
    td.energy = sol.ground_constant;
    for (int k = 0; k < sol.quasiparticle_energies.size(); ++k) {
        const double e = sol.quasiparticle_energies(k);
        if (sol.statistics == Statistics::boson) {
            if (e <= 0.0)
                throw std::invalid_argument(
                    "quadratic_thermodynamics: non-positive bosonic quasiparticle energy");
            td.log_z -= std::log1p(-std::exp(-beta * e));
            td.energy += e / std::expm1(beta * e);
        } else {
            td.log_z += std::log1p(std::exp(-beta * e));
            td.energy += e / (std::exp(beta * e) + 1.0);
        }
    }
    td.z = std::exp(td.log_z);
    td.omega = -td.log_z / beta;
    td.entropy = beta * (td.energy - td.omega);
    return td;
}

}  // namespace rdmft
