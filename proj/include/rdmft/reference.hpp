#pragma once

#include <cmath>
#include <stdexcept>

#include <Eigen/Dense>

#include "rdmft/fock.hpp"

namespace rdmft {

/// Closed-form grand-canonical thermodynamics of non-interacting systems:
/// occupation/energy duals, Omega_s, E_s, S_s and F_s for both statistics.
/// Boundary occupations (0, and 1 for fermions) are rejected rather than
/// clamped so infeasible targets surface in callers.
namespace reference {

namespace detail {

inline void check_energies(const Eigen::VectorXd& eps, Statistics stats) {
    if (stats == Statistics::boson && eps.size() > 0 && eps.minCoeff() <= 0.0)
        throw std::invalid_argument("reference: bosonic one-particle energies must be > 0");
}

inline void check_occupations(const Eigen::VectorXd& n, Statistics stats) {
    if (n.size() == 0) return;
    if (n.minCoeff() <= 0.0)
        throw std::invalid_argument("reference: occupations must be > 0");
    if (stats == Statistics::fermion && n.maxCoeff() >= 1.0)
        throw std::invalid_argument("reference: fermionic occupations must be < 1");
}

}  // namespace detail

/// Fermi-Dirac / Bose-Einstein occupations n = 1/(e^(beta eps) -+ 1).
inline Eigen::VectorXd occupations_from_energies(const Eigen::VectorXd& eps, double beta,
                                                 Statistics stats) {
    detail::check_energies(eps, stats);
    Eigen::VectorXd n(eps.size());
    for (int i = 0; i < eps.size(); ++i)
        n(i) = (stats == Statistics::boson) ? 1.0 / std::expm1(beta * eps(i))
                                            : 1.0 / (std::exp(beta * eps(i)) + 1.0);
    return n;
}

/// Exact inverse: eps = (1/beta) ln((1 +- n)/n).
inline Eigen::VectorXd energies_from_occupations(const Eigen::VectorXd& n, double beta,
                                                 Statistics stats) {
    detail::check_occupations(n, stats);
    Eigen::VectorXd eps(n.size());
    for (int i = 0; i < n.size(); ++i) {
        const double ratio = (stats == Statistics::boson) ? (1.0 + n(i)) / n(i)
                                                          : (1.0 - n(i)) / n(i);
        eps(i) = std::log(ratio) / beta;
    }
    return eps;
}

/// ln Z from the product formulas Z- = prod (1 + e^(-beta eps)) and
/// Z+ = prod (1 - e^(-beta eps))^(-1).
inline double log_z(const Eigen::VectorXd& eps, double beta, Statistics stats) {
    detail::check_energies(eps, stats);
    double acc = 0.0;
    for (int i = 0; i < eps.size(); ++i)
        acc += (stats == Statistics::boson) ? -std::log1p(-std::exp(-beta * eps(i)))
                                            : std::log1p(std::exp(-beta * eps(i)));
    return acc;
}

/// Omega_s = -+ (1/beta) sum ln(1 +- n_i).
inline double omega_s(const Eigen::VectorXd& n, double beta, Statistics stats) {
    detail::check_occupations(n, stats);
    double acc = 0.0;
    for (int i = 0; i < n.size(); ++i)
        acc += (stats == Statistics::boson) ? -std::log1p(n(i)) : std::log1p(-n(i));
    return acc / beta;
}

inline double omega_s(const Eigen::MatrixXcd& gamma, double beta, Statistics stats) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(gamma);
    return omega_s(es.eigenvalues(), beta, stats);
}

/// E_s = sum n_i eps_i.
inline double energy_s(const Eigen::VectorXd& n, const Eigen::VectorXd& eps) {
    return n.dot(eps);
}

/// S_s = sum [(n_i +- 1) ln(1 +- n_i) - n_i ln(n_i)]; additive over modes.
inline double entropy_s(const Eigen::VectorXd& n, Statistics stats) {
    detail::check_occupations(n, stats);
    double acc = 0.0;
    for (int i = 0; i < n.size(); ++i)
        acc += (stats == Statistics::boson)
                   ? (n(i) + 1.0) * std::log1p(n(i)) - n(i) * std::log(n(i))
                   : (n(i) - 1.0) * std::log1p(-n(i)) - n(i) * std::log(n(i));
    return acc;
}

/// F_s = sum [n_i (eps0_i + ln(n_i)/beta) - (n_i +- 1) ln(1 +- n_i)/beta]
/// with eps0 the reference one-body eigenvalues aligned with n.
inline double f_s(const Eigen::VectorXd& n, const Eigen::VectorXd& eps0, double beta,
                  Statistics stats) {
    return energy_s(n, eps0) - entropy_s(n, stats) / beta;
}

/// Matrix form F_s = tr{gamma h_s0} + (1/beta) tr{gamma ln gamma
/// - (gamma +- 1) ln(1 +- gamma)}; the entropy part depends on the occupation
/// spectrum only.
inline double f_s(const Eigen::MatrixXcd& gamma, const Eigen::MatrixXcd& h_s0, double beta,
                  Statistics stats) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(gamma);
    detail::check_occupations(es.eigenvalues(), stats);
    return (gamma * h_s0).trace().real() - entropy_s(es.eigenvalues(), stats) / beta;
}

/// State record with every closed-form quantity filled in.
struct NonInteractingState {
    Statistics statistics = Statistics::fermion;
    double beta = 0.0;
    Eigen::VectorXd epsilons;
    Eigen::VectorXd occupations;
    double log_z = 0.0;
    double omega = 0.0;
    double energy = 0.0;
    double entropy = 0.0;
    double f_value = 0.0;  // with h_s0 = diag(epsilons)
};

inline NonInteractingState solve(const Eigen::VectorXd& eps, double beta, Statistics stats) {
    NonInteractingState st;
    st.statistics = stats;
    st.beta = beta;
    st.epsilons = eps;
    st.occupations = occupations_from_energies(eps, beta, stats);
    st.log_z = log_z(eps, beta, stats);
    st.omega = -st.log_z / beta;
    st.energy = energy_s(st.occupations, eps);
    st.entropy = beta * (st.energy - st.omega);
    st.f_value = f_s(st.occupations, eps, beta, stats);
    return st;
}

}  // namespace reference
}  // namespace rdmft
