#include <catch2/catch_amalgamated.hpp>

#include <rdmft/fock.hpp>

#include <complex>
#include <set>
#include <vector>

using namespace rdmft;
using Catch::Approx;

namespace {

// ---------------------------------------------------------------------------
// Independent oracle: matrix elements of a+_i from the permanent/determinant
// inner product of (anti)symmetrized index lists.  States are ascending index
// lists; a+_i prepends its index, which reproduces the normal-ordering sign
// convention (-1)^(occupied below i).
// ---------------------------------------------------------------------------

double sym_overlap(const std::vector<int>& bra, const std::vector<int>& ket, bool fermion) {
    if (bra.size() != ket.size()) return 0.0;
    const int n = static_cast<int>(bra.size());
    if (n == 0) return 1.0;
    // Laplace expansion along the first row of M_ab = delta(bra[a], ket[b])
    double acc = 0.0;
    for (int b = 0; b < n; ++b) {
        if (bra[0] != ket[b]) continue;
        std::vector<int> bra_rest(bra.begin() + 1, bra.end());
        std::vector<int> ket_rest;
        for (int c = 0; c < n; ++c)
            if (c != b) ket_rest.push_back(ket[c]);
        const double sign = (fermion && b % 2 == 1) ? -1.0 : 1.0;
        acc += sign * sym_overlap(bra_rest, ket_rest, fermion);
    }
    return acc;
}

std::vector<int> config_to_list(const Configuration& c) {
    std::vector<int> list;
    for (int orb = 0; orb < static_cast<int>(c.size()); ++orb)
        for (int k = 0; k < c[orb]; ++k) list.push_back(orb);
    return list;
}

double oracle_creation_element(const FockBasis& fb, int orbital, int row, int col) {
    const bool fermion = fb.statistics() == Statistics::fermion;
    const std::vector<int> source = config_to_list(fb.configuration(col));
    const std::vector<int> target = config_to_list(fb.configuration(row));
    std::vector<int> raised;
    raised.push_back(orbital);
    raised.insert(raised.end(), source.begin(), source.end());
    const double norm_s = sym_overlap(source, source, fermion);
    const double norm_t = sym_overlap(target, target, fermion);
    if (norm_s == 0.0 || norm_t == 0.0) return 0.0;
    return sym_overlap(target, raised, fermion) / std::sqrt(norm_s * norm_t);
}

Eigen::MatrixXcd anticommutator(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b) {
    return a * b + b * a;
}

Eigen::MatrixXcd commutator(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b) {
    return a * b - b * a;
}

}  // namespace

TEST_CASE("basis enumeration dimensions and ordering") {
    SECTION("fermion Nb=3 has dimension 8") {
        const FockBasis fb = FockBasis::enumerate(OneBodyBasis(3), Statistics::fermion);
        CHECK(fb.dimension() == 8);
    }
    SECTION("boson Nb=2 Ntrunc=2 enumerates the six configurations in order") {
        const FockBasis fb = FockBasis::enumerate(OneBodyBasis(2), Statistics::boson, 2);
        REQUIRE(fb.dimension() == 6);
        const std::vector<Configuration> expected = {
            {0, 0}, {1, 0}, {0, 1}, {2, 0}, {1, 1}, {0, 2}};
        CHECK(fb.configurations() == expected);
    }
    SECTION("single fermionic mode") {
        const FockBasis fb = FockBasis::enumerate(OneBodyBasis(1), Statistics::fermion);
        REQUIRE(fb.dimension() == 2);
        CHECK(fb.configuration(0) == Configuration{0});
        CHECK(fb.configuration(1) == Configuration{1});
    }
    SECTION("errors") {
        CHECK_THROWS_AS(OneBodyBasis(0), std::invalid_argument);
        CHECK_THROWS_AS(FockBasis::enumerate(OneBodyBasis(2), Statistics::boson, -1),
                        std::invalid_argument);
        CHECK_THROWS_AS(FockBasis::enumerate(OneBodyBasis(2), Statistics::boson),
                        std::invalid_argument);
    }
}

TEST_CASE("basis enumeration is a bijection") {
    const FockBasis fermi = FockBasis::enumerate(OneBodyBasis(5), Statistics::fermion);
    const FockBasis bose = FockBasis::enumerate(OneBodyBasis(3), Statistics::boson, 5);
    for (const FockBasis* fb : {&fermi, &bose}) {
        std::set<Configuration> seen;
        for (int k = 0; k < fb->dimension(); ++k) {
            const Configuration& c = fb->configuration(k);
            CHECK(fb->index_of(c) == k);
            CHECK(seen.insert(c).second);  // no duplicates
        }
        // sectors are contiguous and ascending
        for (int k = 1; k < fb->dimension(); ++k)
            CHECK(fb->particle_number(k) >= fb->particle_number(k - 1));
    }
    // bosonic count: sum of binomials C(n+Nb-1, n) for n <= 5, Nb = 3
    CHECK(bose.dimension() == 1 + 3 + 6 + 10 + 15 + 21);
}

TEST_CASE("creation matrices match the permanent/determinant oracle") {
    SECTION("fermion Nb=2") {
        const FockBasis fb = FockBasis::enumerate(OneBodyBasis(2), Statistics::fermion);
        for (int orb = 0; orb < 2; ++orb) {
            const Eigen::MatrixXcd cr = creation_matrix(fb, orb).dense();
            for (int r = 0; r < fb.dimension(); ++r)
                for (int c = 0; c < fb.dimension(); ++c)
                    CHECK(cr(r, c).real() ==
                          Approx(oracle_creation_element(fb, orb, r, c)).margin(1e-14));
        }
        // pinned elements: vacuum raising and the sign convention
        const Eigen::MatrixXcd c0 = creation_matrix(fb, 0).dense();
        const Eigen::MatrixXcd c1 = creation_matrix(fb, 1).dense();
        const int vac = fb.index_of({0, 0});
        const int i10 = fb.index_of({1, 0});
        const int i01 = fb.index_of({0, 1});
        const int i11 = fb.index_of({1, 1});
        CHECK(c0(i10, vac).real() == Approx(1.0));            // a+_1 |00> = |10>
        CHECK(c0(i11, i01).real() == Approx(1.0));            // a+_1 |01> = +|11>
        CHECK(c1(i11, i10).real() == Approx(-1.0));           // a+_2 |10> = -|11>
    }
    SECTION("fermion Nb=3") {
        const FockBasis fb = FockBasis::enumerate(OneBodyBasis(3), Statistics::fermion);
        for (int orb = 0; orb < 3; ++orb) {
            const Eigen::MatrixXcd cr = creation_matrix(fb, orb).dense();
            for (int r = 0; r < fb.dimension(); ++r)
                for (int c = 0; c < fb.dimension(); ++c)
                    CHECK(cr(r, c).real() ==
                          Approx(oracle_creation_element(fb, orb, r, c)).margin(1e-14));
        }
    }
    SECTION("boson Nb=1 Ntrunc=3 carries the sqrt factors") {
        const FockBasis fb = FockBasis::enumerate(OneBodyBasis(1), Statistics::boson, 3);
        const Eigen::MatrixXcd cr = creation_matrix(fb, 0).dense();
        CHECK(cr(3, 2).real() == Approx(std::sqrt(3.0)));  // a+ |2> = sqrt(3) |3>
        for (int r = 0; r < fb.dimension(); ++r)
            for (int c = 0; c < fb.dimension(); ++c)
                CHECK(cr(r, c).real() ==
                      Approx(oracle_creation_element(fb, 0, r, c)).margin(1e-13));
    }
    SECTION("boson Nb=2 Ntrunc=3 against the oracle") {
        const FockBasis fb = FockBasis::enumerate(OneBodyBasis(2), Statistics::boson, 3);
        for (int orb = 0; orb < 2; ++orb) {
            const Eigen::MatrixXcd cr = creation_matrix(fb, orb).dense();
            for (int r = 0; r < fb.dimension(); ++r)
                for (int c = 0; c < fb.dimension(); ++c)
                    CHECK(cr(r, c).real() ==
                          Approx(oracle_creation_element(fb, orb, r, c)).margin(1e-13));
        }
    }
}

TEST_CASE("annihilation is the adjoint of creation") {
    const FockBasis fermi = FockBasis::enumerate(OneBodyBasis(3), Statistics::fermion);
    const FockBasis bose = FockBasis::enumerate(OneBodyBasis(2), Statistics::boson, 4);
    for (const FockBasis* fb : {&fermi, &bose})
        for (int orb = 0; orb < fb->n_basis(); ++orb) {
            const Eigen::MatrixXcd cr = creation_matrix(*fb, orb).dense();
            const Eigen::MatrixXcd an = annihilation_matrix(*fb, orb).dense();
            CHECK((an - cr.adjoint()).cwiseAbs().maxCoeff() == 0.0);
        }

    // a_1 |00> = 0, a |1> = |0>, a_2 |11> = -|10> under the sign convention
    const Eigen::MatrixXcd an0 = annihilation_matrix(fermi, 0).dense();
    CHECK(an0.col(fermi.index_of({0, 0, 0})).cwiseAbs().maxCoeff() == 0.0);

    const FockBasis single = FockBasis::enumerate(OneBodyBasis(1), Statistics::boson, 2);
    const Eigen::MatrixXcd an = annihilation_matrix(single, 0).dense();
    CHECK(an(0, 1).real() == Approx(1.0));

    const FockBasis two = FockBasis::enumerate(OneBodyBasis(2), Statistics::fermion);
    const Eigen::MatrixXcd an1 = annihilation_matrix(two, 1).dense();
    CHECK(an1(two.index_of({1, 0}), two.index_of({1, 1})).real() == Approx(-1.0));

    CHECK_THROWS_AS(creation_matrix(fermi, 3), std::out_of_range);
    CHECK_THROWS_AS(annihilation_matrix(fermi, -1), std::out_of_range);
}

TEST_CASE("number operator is diagonal and equals sum a+_i a_i") {
    SECTION("fermion Nb=2") {
        const FockBasis fb = FockBasis::enumerate(OneBodyBasis(2), Statistics::fermion);
        const Eigen::MatrixXcd n = number_operator(fb).dense();
        Eigen::VectorXd expected(4);
        expected << 0, 1, 1, 2;
        CHECK((n.diagonal().real() - expected).cwiseAbs().maxCoeff() == 0.0);
        CHECK((n - Eigen::MatrixXcd(n.diagonal().asDiagonal())).cwiseAbs().maxCoeff() == 0.0);
    }
    SECTION("boson Nb=1 Ntrunc=3") {
        const FockBasis fb = FockBasis::enumerate(OneBodyBasis(1), Statistics::boson, 3);
        const Eigen::MatrixXcd n = number_operator(fb).dense();
        Eigen::VectorXd expected(4);
        expected << 0, 1, 2, 3;
        CHECK((n.diagonal().real() - expected).cwiseAbs().maxCoeff() == 0.0);
    }
    SECTION("operator identity on both statistics") {
        const FockBasis fermi = FockBasis::enumerate(OneBodyBasis(4), Statistics::fermion);
        const FockBasis bose = FockBasis::enumerate(OneBodyBasis(2), Statistics::boson, 4);
        for (const FockBasis* fb : {&fermi, &bose}) {
            Eigen::MatrixXcd acc = Eigen::MatrixXcd::Zero(fb->dimension(), fb->dimension());
            for (int i = 0; i < fb->n_basis(); ++i)
                acc += creation_matrix(*fb, i).dense() * annihilation_matrix(*fb, i).dense();
            CHECK((acc - number_operator(*fb).dense()).cwiseAbs().maxCoeff() < 1e-12);
        }
    }
}

TEST_CASE("fermionic anticommutation relations hold exactly") {
    const FockBasis fb = FockBasis::enumerate(OneBodyBasis(4), Statistics::fermion);
    const int nb = fb.n_basis();
    std::vector<Eigen::MatrixXcd> cr(nb), an(nb);
    for (int i = 0; i < nb; ++i) {
        cr[i] = creation_matrix(fb, i).dense();
        an[i] = annihilation_matrix(fb, i).dense();
    }
    const Eigen::MatrixXcd id = Eigen::MatrixXcd::Identity(fb.dimension(), fb.dimension());
    for (int k = 0; k < nb; ++k)
        for (int l = 0; l < nb; ++l) {
            const Eigen::MatrixXcd lhs = anticommutator(an[k], cr[l]);
            const Eigen::MatrixXcd expected = (k == l) ? id : Eigen::MatrixXcd::Zero(id.rows(), id.cols());
            CHECK((lhs - expected).cwiseAbs().maxCoeff() < 1e-12);
            CHECK(anticommutator(an[k], an[l]).cwiseAbs().maxCoeff() < 1e-12);
        }
    // Pauli principle: a+_i a+_i = 0
    for (int i = 0; i < nb; ++i) CHECK((cr[i] * cr[i]).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("bosonic commutation relations hold below the truncation sector") {
    const int ntrunc = 4;
    const FockBasis fb = FockBasis::enumerate(OneBodyBasis(2), Statistics::boson, ntrunc);
    const int nb = fb.n_basis();
    const int d = fb.dimension();

    // projector onto total particle number < Ntrunc
    Eigen::MatrixXcd proj = Eigen::MatrixXcd::Zero(d, d);
    for (int k = 0; k < d; ++k)
        if (fb.particle_number(k) < ntrunc) proj(k, k) = 1.0;

    std::vector<Eigen::MatrixXcd> cr(nb), an(nb);
    for (int i = 0; i < nb; ++i) {
        cr[i] = creation_matrix(fb, i).dense();
        an[i] = annihilation_matrix(fb, i).dense();
    }
    const Eigen::MatrixXcd id = Eigen::MatrixXcd::Identity(d, d);
    for (int k = 0; k < nb; ++k)
        for (int l = 0; l < nb; ++l) {
            const Eigen::MatrixXcd comm = commutator(an[k], cr[l]);
            const Eigen::MatrixXcd expected = (k == l) ? id : Eigen::MatrixXcd::Zero(d, d);
            CHECK((proj * (comm - expected) * proj).cwiseAbs().maxCoeff() < 1e-12);
            CHECK((proj * commutator(an[k], an[l]) * proj).cwiseAbs().maxCoeff() < 1e-12);
        }
}
