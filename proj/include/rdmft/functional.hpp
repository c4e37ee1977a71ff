#pragma once

#include <cmath>
#include <optional>
#include <stdexcept>

#include <Eigen/Dense>

#include "rdmft/ensemble.hpp"
#include "rdmft/fock.hpp"
#include "rdmft/hamiltonian.hpp"
#include "rdmft/reference.hpp"
#include "rdmft/representability.hpp"

namespace rdmft {

struct FunctionalOptions {
    double gamma_tol = 1e-9;       // Frobenius residual on gamma(v) - target
    int max_iterations = 500;
    double boundary_margin = 1e-8; // targets closer to the boundary are refused
    double trunc_tol = 1e-10;      // bosonic truncation convergence
    int max_dimension = 50000;
};

struct InversionResult {
    Potential v;
    double gamma_residual = 0.0;
    double f_value = 0.0;  // Omega[v] - tr{v gamma}
    int iterations = 0;
    bool converged = false;
    GibbsState state;  // Gibbs state of H + V_v
    int ntrunc = -1;   // bosonic truncation used, -1 for fermions
};

namespace detail {

// Real parametrization of Hermitian matrices: diagonal, then Re/Im of the
// strict upper triangle.
inline int herm_dim(int nb) { return nb * nb; }

inline Eigen::MatrixXcd herm_from_coords(const Eigen::VectorXd& x, int nb) {
    Eigen::MatrixXcd m(nb, nb);
    int k = 0;
    for (int i = 0; i < nb; ++i) m(i, i) = x(k++);
    for (int i = 0; i < nb; ++i)
        for (int j = i + 1; j < nb; ++j) {
            const double re = x(k++);
            const double im = x(k++);
            m(i, j) = cplx(re, im);
            m(j, i) = cplx(re, -im);
        }
    return m;
}

inline Eigen::VectorXd herm_to_coords(const Eigen::MatrixXcd& m) {
    const int nb = static_cast<int>(m.rows());
    Eigen::VectorXd x(herm_dim(nb));
    int k = 0;
    for (int i = 0; i < nb; ++i) x(k++) = m(i, i).real();
    for (int i = 0; i < nb; ++i)
        for (int j = i + 1; j < nb; ++j) {
            x(k++) = m(i, j).real();
            x(k++) = m(i, j).imag();
        }
    return x;
}

// Gradient of tr{delta . A} over the coordinates of a Hermitian delta,
// for Hermitian A: (A_ii; 2 Re A_ij, 2 Im A_ij).
inline Eigen::VectorXd pairing_gradient(const Eigen::MatrixXcd& a) {
    const int nb = static_cast<int>(a.rows());
    Eigen::VectorXd g(herm_dim(nb));
    int k = 0;
    for (int i = 0; i < nb; ++i) g(k++) = a(i, i).real();
    for (int i = 0; i < nb; ++i)
        for (int j = i + 1; j < nb; ++j) {
            g(k++) = 2.0 * a(i, j).real();
            g(k++) = 2.0 * a(i, j).imag();
        }
    return g;
}

// Inverse Hessian of -G from the non-interacting linear response at the warm
// start: the occupation response to a potential perturbation is the divided
// difference of the occupation function across the one-particle spectrum.
// Exact for w = 0 and a well-scaled curvature model otherwise.
inline Eigen::MatrixXd warm_start_inverse_hessian(const Eigen::MatrixXcd& nos,
                                                  const Eigen::VectorXd& occ, double beta,
                                                  Statistics stats) {
    const int nb = static_cast<int>(nos.rows());
    const int dim = herm_dim(nb);
    const Eigen::VectorXd eps = reference::energies_from_occupations(occ, beta, stats);
    const double sgn = (stats == Statistics::boson) ? 1.0 : -1.0;

    Eigen::MatrixXd kern(nb, nb);
    for (int i = 0; i < nb; ++i)
        for (int j = 0; j < nb; ++j) {
            if (std::abs(eps(i) - eps(j)) > 1e-8) {
                kern(i, j) = (occ(i) - occ(j)) / (eps(i) - eps(j));
            } else {
                const double n = 0.5 * (occ(i) + occ(j));
                kern(i, j) = -beta * n * (1.0 + sgn * n);
            }
        }

    Eigen::MatrixXd hess(dim, dim);
    Eigen::VectorXd coord = Eigen::VectorXd::Zero(dim);
    for (int l = 0; l < dim; ++l) {
        coord(l) = 1.0;
        const Eigen::MatrixXcd b = herm_from_coords(coord, nb);
        coord(l) = 0.0;
        const Eigen::MatrixXcd bt = nos.adjoint() * b * nos;
        const Eigen::MatrixXcd resp = nos * bt.cwiseProduct(kern.cast<cplx>()) * nos.adjoint();
        hess.col(l) = -pairing_gradient(resp);  // -d gamma / d v is positive definite
    }
    hess = 0.5 * (hess + hess.transpose());

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(hess);
    const double floor = 1e-12 * std::max(1.0, es.eigenvalues().maxCoeff());
    Eigen::VectorXd inv = es.eigenvalues().cwiseMax(floor).cwiseInverse();
    return es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace detail

/// tr{v gamma} with the index convention gamma_ij = <a+_j a_i> and
/// V = sum v_ij a+_i a_j: the pairing is the matrix-product trace.
inline double duality_pairing(const Eigen::MatrixXcd& v, const Eigen::MatrixXcd& gamma) {
    return (v * gamma).trace().real();
}

/// Equilibrium 1RDM of H + V_v at inverse temperature beta.  Bosonic specs are
/// truncation-converged first.  Returns the full Gibbs state via the optional
/// out-parameters of the detailed overload below.
inline GibbsState solve_with_potential(const HamiltonianSpec& spec, const Potential& v,
                                       double beta, const FunctionalOptions& opt = {},
                                       int* ntrunc_out = nullptr) {
    const HamiltonianSpec shifted = add_potential(spec, v);
    const PotentialCheck pc = validate_potential(spec, v);
    if (!pc.passed)
        throw std::invalid_argument("solve_with_potential: infeasible potential (" + pc.reason + ")");
    if (spec.statistics == Statistics::fermion) {
        const OneBodyBasis ob(spec.n_basis);
        const FockBasis fb = FockBasis::enumerate(ob, Statistics::fermion);
        if (ntrunc_out) *ntrunc_out = -1;
        return gibbs(build_operator(shifted, fb), beta, fb);
    }
    TruncationOptions topt;
    topt.max_dimension = opt.max_dimension;
    auto [nt, st] = converge_truncation(shifted, beta, opt.trunc_tol, topt);
    if (ntrunc_out) *ntrunc_out = nt;
    return st;
}

inline OneRDM gamma_from_v(const HamiltonianSpec& spec, const Potential& v, double beta,
                           const FunctionalOptions& opt = {}) {
    return solve_with_potential(spec, v, beta, opt).gamma;
}

/// Inverts the Mermin map gamma -> v by maximizing the concave dual
///   G(v) = Omega[v] - tr{v gamma_target}
/// over Hermitian v (Nb^2 real coordinates) with BFGS and a backtracking line
/// search that enforces bosonic feasibility.  The warm start is the exact
/// non-interacting inversion of the target occupations.  The maximizer value
/// is the universal functional F[gamma_target].
inline InversionResult v_from_gamma(const HamiltonianSpec& spec, const OneRDM& gamma_target,
                                    double beta, const FunctionalOptions& opt = {}) {
    const int nb = spec.n_basis;
    if (gamma_target.n_basis() != nb)
        throw std::invalid_argument("v_from_gamma: dimension mismatch");
    {
        const MembershipReport rep = classify(gamma_target, opt.boundary_margin);
        if (rep.membership != SetMembership::interior)
            throw std::invalid_argument(
                std::string("v_from_gamma: target is ") + to_string(rep.membership) +
                " (occupation margin " + std::to_string(rep.margins.minCoeff()) +
                "); the map is defined on the open interior only");
    }

    // warm start: exact when w = 0
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(gamma_target.matrix);
    const Eigen::VectorXd eps =
        reference::energies_from_occupations(es.eigenvalues(), beta, spec.statistics);
    const Eigen::MatrixXcd h_target =
        es.eigenvectors() * eps.asDiagonal() * es.eigenvectors().adjoint();
    Eigen::VectorXd x = detail::herm_to_coords(h_target - spec.h1);

    Eigen::MatrixXd hinv = detail::warm_start_inverse_hessian(
        es.eigenvectors(), es.eigenvalues(), beta, spec.statistics);

    struct Eval {
        double g = 0.0;           // dual value
        Eigen::VectorXd grad;     // of G
        double residual = 0.0;    // ||gamma(v) - target||_F
        GibbsState state;
        int ntrunc = -1;
    };
    int evaluations = 0;
    auto evaluate = [&](const Eigen::VectorXd& coords) -> std::optional<Eval> {
        const Potential v(detail::herm_from_coords(coords, nb));
        if (!validate_potential(spec, v).passed) return std::nullopt;
        Eval e;
        e.state = solve_with_potential(spec, v, beta, opt, &e.ntrunc);
        ++evaluations;
        e.g = e.state.omega - duality_pairing(v.v, gamma_target.matrix);
        const Eigen::MatrixXcd delta = e.state.gamma.matrix - gamma_target.matrix;
        e.grad = detail::pairing_gradient(delta);
        e.residual = delta.norm();
        return e;
    };

    std::optional<Eval> cur = evaluate(x);
    if (!cur)
        throw std::invalid_argument("v_from_gamma: warm start infeasible for this spec");

    const Eigen::MatrixXd hinv0 = hinv;
    InversionResult res;
    int it = 0;
    for (; it < opt.max_iterations && cur->residual >= opt.gamma_tol; ++it) {
        Eigen::VectorXd step_dir = hinv * cur->grad;  // ascent direction
        double slope = cur->grad.dot(step_dir);
        if (slope <= 0.0) {  // curvature model went bad; reset it
            hinv = hinv0;
            step_dir = hinv * cur->grad;
            slope = cur->grad.dot(step_dir);
        }
        const double noise = 1e-14 * (1.0 + std::abs(cur->g));
        double t = 1.0;
        std::optional<Eval> next;
        for (int ls = 0; ls < 60; ++ls) {
            next = evaluate(x + t * step_dir);
            if (next && next->g >= cur->g + 1e-4 * t * slope - noise) break;
            next.reset();
            t *= 0.5;
        }
        if (!next) break;  // no admissible uphill step left
        const Eigen::VectorXd s = t * step_dir;
        const Eigen::VectorXd y = cur->grad - next->grad;  // = -(grad f) difference
        const double sy = s.dot(y);
        if (sy > 1e-12 * s.norm() * y.norm()) {
            const Eigen::VectorXd hy = hinv * y;
            const double yhy = y.dot(hy);
            hinv += ((sy + yhy) / (sy * sy)) * (s * s.transpose()) -
                    (hy * s.transpose() + s * hy.transpose()) / sy;
        }
        x += s;
        cur = std::move(next);
    }

    res.v = Potential(detail::herm_from_coords(x, nb));
    res.gamma_residual = cur->residual;
    res.converged = cur->residual < opt.gamma_tol;
    res.iterations = it;
    res.f_value = cur->g;
    res.state = std::move(cur->state);
    res.ntrunc = cur->ntrunc;
    return res;
}

/// Universal functional F[gamma] = Omega[v*] - tr{v* gamma} at the maximizing
/// potential; exact on the interior where every 1RDM is v-representable.
struct UniversalFunctionalResult {
    double f_value = 0.0;
    Potential v;
    InversionResult inversion;
};

inline UniversalFunctionalResult universal_functional(const HamiltonianSpec& spec,
                                                      const OneRDM& gamma, double beta,
                                                      const FunctionalOptions& opt = {}) {
    InversionResult inv = v_from_gamma(spec, gamma, beta, opt);
    if (!inv.converged)
        throw std::runtime_error("universal_functional: dual maximization did not converge "
                                 "(residual " + std::to_string(inv.gamma_residual) + ")");
    UniversalFunctionalResult out;
    out.f_value = inv.f_value;
    out.v = inv.v;
    out.inversion = std::move(inv);
    return out;
}

/// Hartree / exchange / correlation split of F relative to a non-interacting
/// reference with one-body part h_s0.
struct HxcDecomposition {
    double e_hartree = 0.0;
    double e_exchange = 0.0;
    double e_correlation = 0.0;
    double s_reference = 0.0;
    double s_correlation = 0.0;
    double f_value = 0.0;
    double f_reference = 0.0;
    double f_hxc = 0.0;
};

inline HxcDecomposition hxc_decompose(const HamiltonianSpec& spec, const OneRDM& gamma,
                                      double beta, const Eigen::MatrixXcd& h_s0,
                                      const FunctionalOptions& opt = {}) {
    if (!spec.interacting())
        throw std::invalid_argument("hxc_decompose: spec has no two-body tensor");
    const int nb = spec.n_basis;

    const UniversalFunctionalResult uf = universal_functional(spec, gamma, beta, opt);
    const GibbsState& st = uf.inversion.state;

    HxcDecomposition out;
    const Eigen::MatrixXcd& g = gamma.matrix;
    cplx eh = 0.0, ex = 0.0;
    for (int i = 0; i < nb; ++i)
        for (int j = 0; j < nb; ++j)
            for (int k = 0; k < nb; ++k)
                for (int l = 0; l < nb; ++l) {
                    const cplx w = spec.w_at(i, j, k, l);
                    if (w == cplx(0, 0)) continue;
                    eh += 0.5 * w * g(l, i) * g(k, j);
                    ex += 0.5 * w * g(l, j) * g(k, i);
                }
    out.e_hartree = eh.real();
    out.e_exchange = ex.real();

    // Trace{rho* H_0} = E[rho*] - <V_v*>; the correlation energy is measured
    // against the reference one-body energy tr{gamma h_s0}.
    const double e0 = st.energy - duality_pairing(uf.v.v, g);
    const double e_s0 = (g * h_s0).trace().real();
    out.e_correlation = e0 - e_s0 - out.e_hartree - out.e_exchange;

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(g);
    out.s_reference = reference::entropy_s(es.eigenvalues(), spec.statistics);
    out.s_correlation = st.entropy - out.s_reference;

    out.f_value = uf.f_value;
    out.f_reference = reference::f_s(g, h_s0, beta, spec.statistics);
    out.f_hxc = out.f_value - out.f_reference;
    return out;
}

}  // namespace rdmft
