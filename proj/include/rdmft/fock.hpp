#pragma once

#include <complex>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

namespace rdmft {

using cplx = std::complex<double>;
using SpMat = Eigen::SparseMatrix<cplx>;

enum class Statistics { fermion, boson };

inline const char* to_string(Statistics s) {
    return s == Statistics::fermion ? "fermion" : "boson";
}

/// Finite set of Nb orthonormal spin-orbitals spanning the one-body space.
struct OneBodyBasis {
    int n_basis = 0;
    std::vector<std::string> labels;  // optional, size 0 or n_basis

    explicit OneBodyBasis(int nb, std::vector<std::string> lbl = {})
        : n_basis(nb), labels(std::move(lbl)) {
        if (n_basis < 1) throw std::invalid_argument("OneBodyBasis: n_basis must be >= 1");
        if (!labels.empty() && static_cast<int>(labels.size()) != n_basis)
            throw std::invalid_argument("OneBodyBasis: labels must have length n_basis");
        for (std::size_t i = 0; i < labels.size(); ++i)
            for (std::size_t j = i + 1; j < labels.size(); ++j)
                if (labels[i] == labels[j])
                    throw std::invalid_argument("OneBodyBasis: duplicate label '" + labels[i] + "'");
    }
};

/// Occupation-number configuration n = (n_1, ..., n_Nb).
using Configuration = std::vector<int>;

/// Operator on a Fock space, stored sparse with dense semantics.
struct OperatorMatrix {
    int dimension = 0;
    SpMat mat;

    OperatorMatrix() = default;
    OperatorMatrix(int dim, SpMat m) : dimension(dim), mat(std::move(m)) {}

    Eigen::MatrixXcd dense() const { return Eigen::MatrixXcd(mat); }
};

/// Enumerated occupation-number basis of a fermionic or (truncated) bosonic
/// Fock space.  Configurations are ordered by ascending total particle number
/// and, within a sector, descending lexicographically, so that serialized
/// operators are reproducible across runs.
class FockBasis {
public:
    static FockBasis enumerate(const OneBodyBasis& basis, Statistics stats,
                               std::optional<int> truncation = std::nullopt) {
        if (stats == Statistics::boson) {
            if (!truncation.has_value())
                throw std::invalid_argument("FockBasis: bosonic enumeration requires a truncation");
            if (*truncation < 0)
                throw std::invalid_argument("FockBasis: bosonic truncation must be >= 0");
        }
        FockBasis fb;
        fb.statistics_ = stats;
        fb.n_basis_ = basis.n_basis;
        fb.truncation_ = (stats == Statistics::boson) ? *truncation : -1;

        const int n_max = (stats == Statistics::fermion) ? basis.n_basis : *truncation;
        Configuration scratch(basis.n_basis, 0);
        for (int n = 0; n <= n_max; ++n) {
            fb.sector_offset_.push_back(static_cast<int>(fb.configurations_.size()));
            fb.emit_sector(scratch, 0, n);
        }
        fb.sector_offset_.push_back(static_cast<int>(fb.configurations_.size()));

        for (std::size_t k = 0; k < fb.configurations_.size(); ++k)
            fb.index_.emplace(fb.configurations_[k], static_cast<int>(k));
        return fb;
    }

    Statistics statistics() const { return statistics_; }
    int n_basis() const { return n_basis_; }
    int truncation() const { return truncation_; }
    int dimension() const { return static_cast<int>(configurations_.size()); }
    int n_sectors() const { return static_cast<int>(sector_offset_.size()) - 1; }

    const std::vector<Configuration>& configurations() const { return configurations_; }
    const Configuration& configuration(int idx) const { return configurations_.at(idx); }

    /// Index of a configuration, or -1 when absent (e.g. above the truncation).
    int index_of(const Configuration& c) const {
        auto it = index_.find(c);
        return it == index_.end() ? -1 : it->second;
    }

    int particle_number(int idx) const {
        int n = 0;
        for (int v : configurations_.at(idx)) n += v;
        return n;
    }

    /// Half-open index range [first, last) of the N-particle sector.
    std::pair<int, int> sector_range(int n) const {
        return {sector_offset_.at(n), sector_offset_.at(n + 1)};
    }

private:
    FockBasis() = default;

    // Fill orbital `pos` with k = remaining..0 particles and recurse; this
    // yields the descending lexicographic order within a sector.
    void emit_sector(Configuration& c, int pos, int remaining) {
        if (pos == n_basis_ - 1) {
            if (statistics_ == Statistics::fermion && remaining > 1) return;
            c[pos] = remaining;
            configurations_.push_back(c);
            return;
        }
        const int cap = (statistics_ == Statistics::fermion) ? std::min(remaining, 1) : remaining;
        for (int k = cap; k >= 0; --k) {
            c[pos] = k;
            emit_sector(c, pos + 1, remaining - k);
        }
        c[pos] = 0;
    }

    Statistics statistics_ = Statistics::fermion;
    int n_basis_ = 0;
    int truncation_ = -1;
    std::vector<Configuration> configurations_;
    std::map<Configuration, int> index_;
    std::vector<int> sector_offset_;
};

/// Matrix of the creation operator for orbital i (0-based) in the occupation
/// basis.  Fermionic matrix elements carry the sign (-1)^(number of occupied
/// orbitals with index < i); bosonic ones the factor sqrt(n_i + 1).  Bosonic
/// amplitudes leaving the truncated space are dropped.
inline OperatorMatrix creation_matrix(const FockBasis& fb, int orbital) {
    if (orbital < 0 || orbital >= fb.n_basis())
        throw std::out_of_range("creation_matrix: orbital index out of range");
    const int d = fb.dimension();
    std::vector<Eigen::Triplet<cplx>> trip;
    trip.reserve(d);
    for (int col = 0; col < d; ++col) {
        Configuration c = fb.configuration(col);
        if (fb.statistics() == Statistics::fermion) {
            if (c[orbital] == 1) continue;
            int parity = 0;
            for (int j = 0; j < orbital; ++j) parity += c[j];
            c[orbital] = 1;
            const int row = fb.index_of(c);
            trip.emplace_back(row, col, (parity % 2 == 0) ? 1.0 : -1.0);
        } else {
            const double amp = std::sqrt(static_cast<double>(c[orbital] + 1));
            c[orbital] += 1;
            const int row = fb.index_of(c);
            if (row >= 0) trip.emplace_back(row, col, amp);
        }
    }
    SpMat m(d, d);
    m.setFromTriplets(trip.begin(), trip.end());
    return {d, std::move(m)};
}

/// Conjugate transpose of creation_matrix(fb, orbital).
inline OperatorMatrix annihilation_matrix(const FockBasis& fb, int orbital) {
    OperatorMatrix c = creation_matrix(fb, orbital);
    SpMat m = c.mat.adjoint();
    return {c.dimension, std::move(m)};
}

/// Total number operator; diagonal with entry sum_i n_i.
inline OperatorMatrix number_operator(const FockBasis& fb) {
    const int d = fb.dimension();
    std::vector<Eigen::Triplet<cplx>> trip;
    trip.reserve(d);
    for (int k = 0; k < d; ++k) {
        const int n = fb.particle_number(k);
        if (n != 0) trip.emplace_back(k, k, static_cast<double>(n));
    }
    SpMat m(d, d);
    m.setFromTriplets(trip.begin(), trip.end());
    return {d, std::move(m)};
}

}  // namespace rdmft
