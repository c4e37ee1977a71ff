#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "rdmft/ensemble.hpp"
#include "rdmft/fock.hpp"

namespace rdmft {

enum class SetMembership { exterior, boundary, interior };

inline const char* to_string(SetMembership m) {
    switch (m) {
        case SetMembership::exterior: return "exterior";
        case SetMembership::boundary: return "boundary";
        default: return "interior";
    }
}

/// Classification of a 1RDM against the ensemble-representable set: the
/// occupation spectrum with the distance of each eigenvalue to its active
/// bounds (0 and, for fermions, 1).
struct MembershipReport {
    SetMembership membership = SetMembership::exterior;
    Statistics statistics = Statistics::fermion;
    Eigen::VectorXd occupation_spectrum;  // ascending
    Eigen::VectorXd margins;              // min distance to the active bounds, signed
};

inline MembershipReport classify(const OneRDM& gamma, double delta = 1e-12) {
    if (detail::hermiticity_residual(gamma.matrix) > 1e-12)
        throw std::invalid_argument("classify: 1RDM is not Hermitian");
    MembershipReport rep;
    rep.statistics = gamma.statistics;
    rep.occupation_spectrum = gamma.occupations();
    rep.margins.resize(rep.occupation_spectrum.size());
    bool outside = false, on_edge = false;
    for (int i = 0; i < rep.occupation_spectrum.size(); ++i) {
        const double n = rep.occupation_spectrum(i);
        double margin = n;  // distance to the lower bound
        if (gamma.statistics == Statistics::fermion) margin = std::min(n, 1.0 - n);
        rep.margins(i) = margin;
        if (margin < -delta) outside = true;
        else if (margin <= delta) on_edge = true;
    }
    rep.membership = outside ? SetMembership::exterior
                             : (on_edge ? SetMembership::boundary : SetMembership::interior);
    return rep;
}

/// Convex decomposition of a 1RDM over occupation-basis extreme points in its
/// natural-orbital basis.
struct ColemanTerm {
    double weight = 0.0;
    Configuration configuration;  // occupations of the natural orbitals
};

struct ColemanEnsemble {
    Statistics statistics = Statistics::fermion;
    Eigen::MatrixXcd natural_orbital_transform;  // columns are the NOs
    std::vector<ColemanTerm> terms;

    /// 1RDM generated by the ensemble (linearity of the map rho -> gamma).
    Eigen::MatrixXcd reconstruct() const {
        const int nb = static_cast<int>(natural_orbital_transform.rows());
        Eigen::VectorXd n = Eigen::VectorXd::Zero(nb);
        for (const auto& t : terms)
            for (int i = 0; i < nb; ++i) n(i) += t.weight * t.configuration[i];
        return natural_orbital_transform * n.asDiagonal() *
               natural_orbital_transform.adjoint();
    }
};

namespace detail {

// Greedy polytope decomposition of a fermionic occupation vector with
// sum(n) = N * mass and 0 <= n_i <= mass: pick the N largest coordinates as
// the next extreme point and subtract as much of it as stays feasible.  Each
// round pins at least one coordinate to a bound, so at most Nb terms appear.
inline std::vector<std::pair<double, std::vector<int>>> fermi_polytope_decompose(
    Eigen::VectorXd n, int big_n) {
    const int nb = static_cast<int>(n.size());
    std::vector<std::pair<double, std::vector<int>>> out;
    if (big_n == 0) {
        out.push_back({1.0, std::vector<int>(nb, 0)});
        return out;
    }
    double mass = 1.0;
    const double stop = 1e-13;
    while (mass > stop) {
        std::vector<int> order(nb);
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(),
                         [&](int a, int b) { return n(a) > n(b); });
        std::vector<int> config(nb, 0);
        double lam = mass;
        for (int k = 0; k < big_n; ++k) {
            config[order[k]] = 1;
            lam = std::min(lam, n(order[k]));
        }
        for (int k = big_n; k < nb; ++k) lam = std::min(lam, mass - n(order[k]));
        if (lam <= 0.0)
            throw std::runtime_error("coleman: greedy step stalled (occupations outside polytope?)");
        for (int i = 0; i < nb; ++i) n(i) -= lam * config[i];
        mass -= lam;
        out.push_back({lam, std::move(config)});
    }
    if (mass > 0.0 && !out.empty()) out.back().first += mass;  // fold the residual mass
    return out;
}

// Decomposition of an occupation vector with integer sum big_n, expressed in
// the basis ordering of n itself.
inline std::vector<ColemanTerm> integer_occupation_terms(Eigen::VectorXd n, Statistics stats,
                                                         int big_n) {
    const int nb = static_cast<int>(n.size());
    std::vector<ColemanTerm> terms;
    if (stats == Statistics::boson) {
        if (big_n == 0) {
            terms.push_back({1.0, Configuration(nb, 0)});
            return terms;
        }
        for (int i = 0; i < nb; ++i) {
            if (n(i) <= 0.0) continue;
            Configuration c(nb, 0);
            c[i] = big_n;
            terms.push_back({n(i) / big_n, std::move(c)});
        }
    } else {
        for (int i = 0; i < nb; ++i) n(i) = std::min(std::max(n(i), 0.0), 1.0);
        for (auto& [lam, cfg] : fermi_polytope_decompose(n, big_n))
            terms.push_back({lam, std::move(cfg)});
    }
    double sum = 0.0;
    for (const auto& t : terms) sum += t.weight;
    for (auto& t : terms) t.weight /= sum;
    return terms;
}

}  // namespace detail

/// Coleman construction for integer trace N: bosons decompose over the scaled
/// simplex (configurations N e_i), fermions over determinant extreme points
/// via the greedy polytope decomposition.
inline ColemanEnsemble coleman_integer(const OneRDM& gamma, double trace_tol = 1e-10) {
    const MembershipReport rep = classify(gamma);
    if (rep.membership == SetMembership::exterior)
        throw std::invalid_argument("coleman_integer: 1RDM is not ensemble representable");
    const double tr = gamma.matrix.trace().real();
    const int big_n = static_cast<int>(std::lround(tr));
    if (std::abs(tr - big_n) > trace_tol)
        throw std::invalid_argument("coleman_integer: trace " + std::to_string(tr) +
                                    " is not an integer");

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(gamma.matrix);
    ColemanEnsemble ens;
    ens.statistics = gamma.statistics;
    ens.natural_orbital_transform = es.eigenvectors();
    ens.terms = detail::integer_occupation_terms(es.eigenvalues(), gamma.statistics, big_n);
    return ens;
}

/// Fractional trace N: split gamma = (ceil(N) - N) gamma_floor
/// + (N - floor(N)) gamma_ceil with shared natural orbitals, water-filling the
/// transferred particle onto the largest occupations, then decompose each
/// integer piece.
inline ColemanEnsemble coleman_fractional(const OneRDM& gamma, double trace_tol = 1e-10) {
    const double tr = gamma.matrix.trace().real();
    if (std::abs(tr - std::lround(tr)) <= trace_tol) return coleman_integer(gamma, trace_tol);

    const MembershipReport rep = classify(gamma);
    if (rep.membership == SetMembership::exterior)
        throw std::invalid_argument("coleman_fractional: 1RDM is not ensemble representable");

    const int n_floor = static_cast<int>(std::floor(tr));
    const double w_ceil = tr - n_floor;  // in (0,1)
    const double w_floor = 1.0 - w_ceil;

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(gamma.matrix);
    const int nb = gamma.n_basis();
    const Eigen::VectorXd n = es.eigenvalues().cwiseMax(0.0);

    // move one particle of distribution d from the floor piece to the ceil
    // piece: n_floor = n - w_ceil d, n_ceil = n + w_floor d, sum(d) = 1
    std::vector<int> order(nb);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return n(a) > n(b); });
    Eigen::VectorXd d = Eigen::VectorXd::Zero(nb);
    double remaining = 1.0;
    for (int k = 0; k < nb && remaining > 0.0; ++k) {
        const int i = order[k];
        double cap = n(i) / w_ceil;
        if (gamma.statistics == Statistics::fermion)
            cap = std::min(cap, (1.0 - n(i)) / w_floor);
        d(i) = std::min(cap, remaining);
        remaining -= d(i);
    }
    if (remaining > 1e-12) {
        const int blocker = order[0];
        throw std::runtime_error("coleman_fractional: infeasible split, blocked at occupation " +
                                 std::to_string(n(blocker)));
    }

    const Eigen::VectorXd occ_floor = n - w_ceil * d;
    const Eigen::VectorXd occ_ceil = n + w_floor * d;

    ColemanEnsemble ens;
    ens.statistics = gamma.statistics;
    ens.natural_orbital_transform = es.eigenvectors();
    auto absorb = [&](const Eigen::VectorXd& occ, int big_n, double weight) {
        if (weight <= 0.0) return;
        for (auto& t : detail::integer_occupation_terms(occ, gamma.statistics, big_n))
            ens.terms.push_back({weight * t.weight, std::move(t.configuration)});
    };
    absorb(occ_floor, n_floor, w_floor);
    absorb(occ_ceil, n_floor + 1, w_ceil);
    return ens;
}

/// Materializes the ensemble as a density-matrix operator on a Fock basis:
/// every term is an occupation-basis state of the rotated (natural) orbitals.
inline DensityMatrixOperator realize(const ColemanEnsemble& ens, const FockBasis& fb) {
    if (fb.statistics() != ens.statistics)
        throw std::invalid_argument("realize: statistics mismatch");
    const int nb = fb.n_basis();
    if (static_cast<int>(ens.natural_orbital_transform.rows()) != nb)
        throw std::invalid_argument("realize: one-body dimension mismatch");

    std::vector<SpMat> rotated(nb);  // b+_j = sum_i U_ij a+_i
    for (int j = 0; j < nb; ++j) {
        SpMat acc(fb.dimension(), fb.dimension());
        for (int i = 0; i < nb; ++i) {
            const cplx u = ens.natural_orbital_transform(i, j);
            if (u != cplx(0, 0)) acc = acc + SpMat(u * creation_matrix(fb, i).mat);
        }
        rotated[j] = acc;
    }

    DensityMatrixOperator rho;
    rho.weights.resize(static_cast<int>(ens.terms.size()));
    rho.states.resize(fb.dimension(), static_cast<int>(ens.terms.size()));
    for (std::size_t t = 0; t < ens.terms.size(); ++t) {
        const auto& term = ens.terms[t];
        int total = 0;
        for (int c : term.configuration) total += c;
        if (fb.statistics() == Statistics::boson && total > fb.truncation())
            throw std::invalid_argument("realize: configuration with " + std::to_string(total) +
                                        " particles exceeds the truncation " +
                                        std::to_string(fb.truncation()));
        Eigen::VectorXcd psi = Eigen::VectorXcd::Zero(fb.dimension());
        psi(0) = 1.0;  // vacuum is index 0 by the canonical ordering
        for (int j = 0; j < nb; ++j)
            for (int rep = 0; rep < term.configuration[j]; ++rep)
                psi = rotated[j] * psi / std::sqrt(static_cast<double>(rep + 1));
        rho.weights(static_cast<int>(t)) = term.weight;
        rho.states.col(static_cast<int>(t)) = psi;
    }
    return rho;
}

}  // namespace rdmft
