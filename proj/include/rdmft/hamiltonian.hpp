#pragma once

#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include "rdmft/bogoliubov.hpp"
#include "rdmft/fock.hpp"

namespace rdmft {

namespace detail {

inline double hermiticity_residual(const Eigen::MatrixXcd& a) {
    if (a.size() == 0) return 0.0;
    const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
    return (a - a.adjoint()).cwiseAbs().maxCoeff() / scale;
}

}  // namespace detail

/// Hermitian one-body potential perturbation v (conjugate variable of the 1RDM).
struct Potential {
    Eigen::MatrixXcd v;

    Potential() = default;
    explicit Potential(Eigen::MatrixXcd m, double tol = 1e-12) : v(std::move(m)) {
        if (v.rows() != v.cols()) throw std::invalid_argument("Potential: matrix must be square");
        if (detail::hermiticity_residual(v) > tol)
            throw std::invalid_argument("Potential: matrix is not Hermitian");
    }
    int n_basis() const { return static_cast<int>(v.rows()); }
};

/// mu = -trace(v): the constant of the potential acts as minus the chemical
/// potential in the grand-canonical setting.
inline double chemical_potential(const Potential& pot) {
    return -pot.v.trace().real();
}

/// Coefficient data of the full Hamiltonian class
///   H = h0 + sum h1_ij a+_i a_j + 1/2 sum w_ijkl a+_i a+_j a_k a_l
///     + sum (s*_i a+_i + s_i a_i) + sum (D+_ij a+_i a+_j + D_ij a_i a_j).
/// Interactions are capped at two-body order; the validation logic treats the
/// highest order present generically.
class HamiltonianSpec {
public:
    Statistics statistics = Statistics::fermion;
    int n_basis = 0;
    double h0 = 0.0;
    Eigen::MatrixXcd h1;
    std::vector<cplx> w;  // flat row-major (i,j,k,l); empty when non-interacting
    Eigen::VectorXcd source;
    Eigen::MatrixXcd pairing;
    std::optional<int> bosonic_truncation;

    HamiltonianSpec() = default;
    HamiltonianSpec(Statistics stats, Eigen::MatrixXcd one_body, double constant = 0.0)
        : statistics(stats), n_basis(static_cast<int>(one_body.rows())),
          h0(constant), h1(std::move(one_body)) {
        if (h1.rows() != h1.cols())
            throw std::invalid_argument("HamiltonianSpec: h1 must be square");
    }

    bool interacting() const { return !w.empty(); }
    bool has_source() const { return source.size() > 0 && source.cwiseAbs().maxCoeff() > 0.0; }
    bool has_pairing() const { return pairing.size() > 0 && pairing.cwiseAbs().maxCoeff() > 0.0; }
    bool number_conserving() const { return !has_source() && !has_pairing(); }

    cplx w_at(int i, int j, int k, int l) const {
        return w[((static_cast<std::size_t>(i) * n_basis + j) * n_basis + k) * n_basis + l];
    }
    void set_w(std::vector<cplx> tensor) {
        const std::size_t nb = static_cast<std::size_t>(n_basis);
        if (tensor.size() != nb * nb * nb * nb)
            throw std::invalid_argument(
                "HamiltonianSpec: two-body tensor must have Nb^4 entries "
                "(interactions above two-body order are not representable)");
        w = std::move(tensor);
    }

    /// Two-body tensor reshaped to the Nb^2 x Nb^2 matrix W[(i,j),(l,k)] = w_ijkl,
    /// which is Hermitian under the tensor hermiticity condition; its lowest
    /// eigenvalue is the interaction floor estimate K_l.
    Eigen::MatrixXcd reshaped_two_body() const {
        const int nb = n_basis;
        Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(nb * nb, nb * nb);
        if (w.empty()) return m;
        for (int i = 0; i < nb; ++i)
            for (int j = 0; j < nb; ++j)
                for (int k = 0; k < nb; ++k)
                    for (int l = 0; l < nb; ++l)
                        m(i * nb + j, l * nb + k) = w_at(i, j, k, l);
        return m;
    }

    QuadraticSpec quadratic_part() const {
        QuadraticSpec q;
        q.statistics = statistics;
        q.omega = h1;
        q.source = source;
        q.pairing = pairing;
        return q;
    }
};

struct ValidationCheck {
    std::string name;
    bool passed = false;
    bool mandatory = false;
    double measured = 0.0;
    std::string detail;
};

struct ValidationReport {
    std::vector<ValidationCheck> checks;

    bool all_passed() const {
        for (const auto& c : checks)
            if (!c.passed) return false;
        return true;
    }
    bool mandatory_passed() const {
        for (const auto& c : checks)
            if (c.mandatory && !c.passed) return false;
        return true;
    }
    const ValidationCheck* find(const std::string& name) const {
        for (const auto& c : checks)
            if (c.name == name) return &c;
        return nullptr;
    }
};

/// Report-only validation: hermiticity residuals, pairing symmetry, the
/// bosonic interaction floor K_l, and (bosonic pairing) quadratic stability.
inline ValidationReport validate_spec(const HamiltonianSpec& spec, double tol = 1e-12) {
    ValidationReport rep;
    const int nb = spec.n_basis;

    {
        const double r = detail::hermiticity_residual(spec.h1);
        rep.checks.push_back({"h1_hermitian", r <= tol, true, r,
                              "relative max-norm residual of h1 - h1+"});
    }
    if (spec.interacting()) {
        const Eigen::MatrixXcd wm = spec.reshaped_two_body();
        const double r = detail::hermiticity_residual(wm);
        rep.checks.push_back({"w_hermitian", r <= tol, true, r,
                              "relative residual of the reshaped tensor vs its adjoint"});
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(
            cplx(0.5, 0) * (wm + wm.adjoint()));
        const double kl = es.eigenvalues().minCoeff();
        const bool need_pd = spec.statistics == Statistics::boson;
        rep.checks.push_back({"interaction_floor", !need_pd || kl > 0.0, need_pd, kl,
                              "K_l estimate: lowest eigenvalue of the reshaped two-body tensor"});
    }
    if (spec.pairing.size() > 0) {
        const double scale = std::max(1.0, spec.pairing.cwiseAbs().maxCoeff());
        const Eigen::MatrixXcd res = (spec.statistics == Statistics::boson)
            ? Eigen::MatrixXcd(spec.pairing - spec.pairing.transpose())
            : Eigen::MatrixXcd(spec.pairing + spec.pairing.transpose());
        const double r = res.cwiseAbs().maxCoeff() / scale;
        rep.checks.push_back({"pairing_symmetry", r <= tol, true, r,
                              spec.statistics == Statistics::boson
                                  ? "bosonic pairing must be symmetric"
                                  : "fermionic pairing must be antisymmetric"});
    }
    if (spec.source.size() > 0 && static_cast<int>(spec.source.size()) != nb)
        rep.checks.push_back({"source_shape", false, true,
                              static_cast<double>(spec.source.size()),
                              "source vector must have Nb entries"});
    if (spec.statistics == Statistics::boson && !spec.interacting() && spec.has_pairing()) {
        // |d| < 1 analogue: the quadratic spectrum must be real
        BogoliubovSolution sol = diagonalize(spec.quadratic_part().has_source()
                                                 ? eliminate_source(spec.quadratic_part()).reduced
                                                 : spec.quadratic_part());
        rep.checks.push_back({"pairing_stability", sol.stable, false, sol.max_imag,
                              "bosonic quadratic spectrum realness (unstable pairing "
                              "yields a continuous spectrum)"});
    }
    return rep;
}

/// Pass/fail feasibility of a potential for a given reference Hamiltonian.
struct PotentialCheck {
    bool passed = false;
    double min_eigenvalue = 0.0;  // of h1 + v (bosonic non-interacting case)
    std::string reason;
};

/// Fermions accept every Hermitian v.  Non-interacting bosons require
/// h1 + v > 0 (otherwise the partition function diverges); interacting bosons
/// with a positive-definite two-body tensor are unrestricted.
inline PotentialCheck validate_potential(const HamiltonianSpec& spec, const Potential& pot) {
    PotentialCheck out;
    if (pot.n_basis() != spec.n_basis)
        throw std::invalid_argument("validate_potential: dimension mismatch");
    if (spec.statistics == Statistics::fermion) {
        out.passed = true;
        out.reason = "fermionic potentials are unrestricted";
        return out;
    }
    if (spec.interacting()) {
        Eigen::MatrixXcd wm = spec.reshaped_two_body();
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(cplx(0.5, 0) * (wm + wm.adjoint()));
        out.min_eigenvalue = es.eigenvalues().minCoeff();
        out.passed = out.min_eigenvalue > 0.0;
        out.reason = out.passed ? "positive-definite interaction bounds the spectrum"
                                : "two-body tensor is not positive definite";
        return out;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(spec.h1 + pot.v);
    out.min_eigenvalue = es.eigenvalues().minCoeff();
    out.passed = out.min_eigenvalue > 1e-10;
    out.reason = out.passed ? "h1 + v is positive definite"
                            : "h1 + v has a non-positive mode; Z would diverge";
    return out;
}

/// Returns the spec with h1 replaced by h1 + v.
inline HamiltonianSpec add_potential(const HamiltonianSpec& spec, const Potential& pot) {
    if (pot.n_basis() != spec.n_basis)
        throw std::invalid_argument("add_potential: dimension mismatch");
    HamiltonianSpec out = spec;
    out.h1 += pot.v;
    return out;
}

/// Materializes the Hamiltonian on an enumerated Fock basis.
inline OperatorMatrix build_operator(const HamiltonianSpec& spec, const FockBasis& fb) {
    if (fb.statistics() != spec.statistics)
        throw std::invalid_argument("build_operator: statistics mismatch");
    if (fb.n_basis() != spec.n_basis)
        throw std::invalid_argument("build_operator: one-body dimension mismatch");
    {
        ValidationReport rep = validate_spec(spec);
        if (!rep.mandatory_passed()) {
            for (const auto& c : rep.checks)
                if (c.mandatory && !c.passed)
                    throw std::invalid_argument("build_operator: invalid spec (" + c.name +
                                                ", measured " + std::to_string(c.measured) + ")");
        }
    }

    const int nb = spec.n_basis;
    const int d = fb.dimension();
    std::vector<SpMat> cr(nb), an(nb);
    for (int i = 0; i < nb; ++i) {
        cr[i] = creation_matrix(fb, i).mat;
        an[i] = annihilation_matrix(fb, i).mat;
    }

    SpMat h(d, d);
    if (spec.h0 != 0.0) {
        SpMat id(d, d);
        id.setIdentity();
        h += cplx(spec.h0, 0) * id;
    }
    for (int i = 0; i < nb; ++i)
        for (int j = 0; j < nb; ++j) {
            const cplx c = spec.h1(i, j);
            if (c != cplx(0, 0)) h += c * SpMat(cr[i] * an[j]);
        }
    if (spec.interacting()) {
        // pair products a_k a_l reused across the (i,j) loop
        std::vector<SpMat> pair(nb * nb);
        for (int k = 0; k < nb; ++k)
            for (int l = 0; l < nb; ++l) pair[k * nb + l] = SpMat(an[k] * an[l]);
        for (int i = 0; i < nb; ++i)
            for (int j = 0; j < nb; ++j) {
                const SpMat crij = SpMat(pair[j * nb + i].adjoint());  // a+_i a+_j
                for (int k = 0; k < nb; ++k)
                    for (int l = 0; l < nb; ++l) {
                        const cplx c = 0.5 * spec.w_at(i, j, k, l);
                        if (c != cplx(0, 0)) h += c * SpMat(crij * pair[k * nb + l]);
                    }
            }
    }
    if (spec.source.size() > 0)
        for (int i = 0; i < nb; ++i) {
            const cplx s = spec.source(i);
            if (s != cplx(0, 0)) h += std::conj(s) * cr[i] + s * an[i];
        }
    if (spec.pairing.size() > 0)
        for (int i = 0; i < nb; ++i)
            for (int j = 0; j < nb; ++j) {
                const cplx dij = spec.pairing(i, j);
                const cplx dadj = std::conj(spec.pairing(j, i));
                if (dadj != cplx(0, 0)) h += dadj * SpMat(cr[i] * cr[j]);
                if (dij != cplx(0, 0)) h += dij * SpMat(an[i] * an[j]);
            }

    h.prune(0.0, 0.0);
    return {d, std::move(h)};
}

}  // namespace rdmft
