#include <catch2/catch_amalgamated.hpp>

#include <rdmft/ensemble.hpp>
#include <rdmft/fock.hpp>
#include <rdmft/hamiltonian.hpp>
#include <rdmft/random.hpp>
#include <rdmft/representability.hpp>

#include <cmath>

using namespace rdmft;
using Catch::Approx;

namespace {

OneRDM diag_rdm(std::initializer_list<double> occ, Statistics stats) {
    Eigen::VectorXd n(static_cast<int>(occ.size()));
    int k = 0;
    for (double v : occ) n(k++) = v;
    return {Eigen::MatrixXcd(n.cast<cplx>().asDiagonal()), stats};
}

double reconstruction_error(const OneRDM& gamma, const ColemanEnsemble& ens) {
    return (ens.reconstruct() - gamma.matrix).norm();
}

}  // namespace

TEST_CASE("classify against the representable sets") {
    CHECK(classify(diag_rdm({0.9, 0.9, 0.1, 0.1}, Statistics::fermion)).membership ==
          SetMembership::interior);
    CHECK(classify(diag_rdm({1.0, 1.0, 0.0, 0.0}, Statistics::fermion)).membership ==
          SetMembership::boundary);
    CHECK(classify(diag_rdm({1.2, 0.5, 0.5, 0.0}, Statistics::fermion)).membership ==
          SetMembership::exterior);
    CHECK(classify(diag_rdm({-0.2, 0.5}, Statistics::boson)).membership ==
          SetMembership::exterior);
    CHECK(classify(diag_rdm({3.7, 0.5}, Statistics::boson)).membership ==
          SetMembership::interior);  // bosons have no upper bound

    Eigen::MatrixXcd bad(2, 2);
    bad << 0.5, 1.0, 0.0, 0.5;
    CHECK_THROWS_AS(classify(OneRDM(bad, Statistics::fermion)), std::invalid_argument);

    const MembershipReport rep = classify(diag_rdm({0.3, 0.8}, Statistics::fermion));
    CHECK(rep.margins.minCoeff() == Approx(0.2));
}

TEST_CASE("coleman_integer") {
    SECTION("bosonic condensate is a single extreme point") {
        const ColemanEnsemble ens = coleman_integer(diag_rdm({2.0, 0.0, 0.0}, Statistics::boson));
        REQUIRE(ens.terms.size() == 1);
        CHECK(ens.terms[0].weight == Approx(1.0));
        int total = 0, max_entry = 0;
        for (int c : ens.terms[0].configuration) {
            total += c;
            max_entry = std::max(max_entry, c);
        }
        CHECK(total == 2);
        CHECK(max_entry == 2);
        CHECK(reconstruction_error(diag_rdm({2.0, 0.0, 0.0}, Statistics::boson), ens) < 1e-12);
    }
    SECTION("fermionic half-half splits over two determinants") {
        const OneRDM gamma = diag_rdm({1.0, 0.5, 0.5}, Statistics::fermion);
        const ColemanEnsemble ens = coleman_integer(gamma);
        REQUIRE(ens.terms.size() == 2);
        CHECK(ens.terms[0].weight == Approx(0.5));
        CHECK(ens.terms[1].weight == Approx(0.5));
        for (const auto& t : ens.terms) {
            int total = 0;
            for (int c : t.configuration) total += c;
            CHECK(total == 2);
        }
        CHECK(reconstruction_error(gamma, ens) < 1e-12);
    }
    SECTION("a full determinant is its own decomposition") {
        const OneRDM gamma = diag_rdm({1.0, 1.0, 0.0}, Statistics::fermion);
        const ColemanEnsemble ens = coleman_integer(gamma);
        REQUIRE(ens.terms.size() == 1);
        CHECK(ens.terms[0].weight == Approx(1.0));
    }
    SECTION("errors") {
        CHECK_THROWS_AS(coleman_integer(diag_rdm({1.3, 0.7}, Statistics::fermion)),
                        std::invalid_argument);  // exterior
        CHECK_THROWS_AS(coleman_integer(diag_rdm({0.5, 0.4}, Statistics::fermion)),
                        std::invalid_argument);  // non-integer trace
    }
    SECTION("greedy terminates within Nb terms on random occupation vectors") {
        Rng rng(101);
        for (int trial = 0; trial < 200; ++trial) {
            const int nb = rng.uniform_int(2, 7);
            const int big_n = rng.uniform_int(1, nb - 1);
            // random interior point of the sector polytope by mixing extremes
            Eigen::VectorXd n = Eigen::VectorXd::Zero(nb);
            const int mixes = rng.uniform_int(1, 6);
            for (int m = 0; m < mixes; ++m) {
                Eigen::VectorXd w = random_weights(rng, nb);
                std::vector<int> order(nb);
                std::iota(order.begin(), order.end(), 0);
                std::stable_sort(order.begin(), order.end(),
                                 [&](int a, int b) { return w(a) > w(b); });
                Eigen::VectorXd e = Eigen::VectorXd::Zero(nb);
                for (int k = 0; k < big_n; ++k) e(order[k]) = 1.0;
                n += e / mixes;
            }
            OneRDM gamma(Eigen::MatrixXcd(n.cast<cplx>().asDiagonal()), Statistics::fermion);
            const ColemanEnsemble ens = coleman_integer(gamma);
            CHECK(ens.terms.size() <= static_cast<std::size_t>(nb));
            CHECK(reconstruction_error(gamma, ens) < 1e-10);
        }
    }
}

TEST_CASE("coleman_fractional") {
    SECTION("integer traces fall back to the integer construction") {
        const OneRDM gamma = diag_rdm({0.6, 0.4}, Statistics::fermion);
        const ColemanEnsemble a = coleman_integer(gamma);
        const ColemanEnsemble b = coleman_fractional(gamma);
        REQUIRE(a.terms.size() == b.terms.size());
        for (std::size_t k = 0; k < a.terms.size(); ++k) {
            CHECK(a.terms[k].weight == Approx(b.terms[k].weight));
            CHECK(a.terms[k].configuration == b.terms[k].configuration);
        }
    }
    SECTION("N = 1.5 splits into one- and two-particle pieces") {
        const OneRDM gamma = diag_rdm({0.75, 0.75}, Statistics::fermion);
        const ColemanEnsemble ens = coleman_fractional(gamma);
        double w1 = 0.0, w2 = 0.0;
        for (const auto& t : ens.terms) {
            int total = 0;
            for (int c : t.configuration) total += c;
            if (total == 1) w1 += t.weight;
            if (total == 2) w2 += t.weight;
        }
        CHECK(w1 == Approx(0.5));
        CHECK(w2 == Approx(0.5));
        CHECK(reconstruction_error(gamma, ens) < 1e-10);
    }
    SECTION("bosonic fractional traces are always feasible") {
        Rng rng(103);
        for (int trial = 0; trial < 20; ++trial) {
            const OneRDM gamma = random_interior_rdm(rng, 3, Statistics::boson);
            const ColemanEnsemble ens = coleman_fractional(gamma);
            CHECK(reconstruction_error(gamma, ens) < 1e-10);
        }
    }
}

TEST_CASE("realize reproduces the 1RDM through an independent measurement") {
    SECTION("round-trip on random interior 1RDMs of both statistics") {
        Rng rng(107);
        for (int trial = 0; trial < 25; ++trial) {
            const OneRDM gamma = random_interior_rdm(rng, 3, Statistics::fermion);
            const ColemanEnsemble ens = coleman_fractional(gamma);
            const FockBasis fb = FockBasis::enumerate(OneBodyBasis(3), Statistics::fermion);
            const DensityMatrixOperator rho = realize(ens, fb);
            rho.validate();
            const OneRDM measured = measure_one_rdm(rho, fb);
            CHECK((measured.matrix - gamma.matrix).norm() < 1e-10);
        }
        for (int trial = 0; trial < 25; ++trial) {
            const OneRDM gamma = random_interior_rdm(rng, 2, Statistics::boson);
            const int need = static_cast<int>(std::ceil(gamma.matrix.trace().real())) + 1;
            const FockBasis fb = FockBasis::enumerate(OneBodyBasis(2), Statistics::boson, need);
            const DensityMatrixOperator rho = realize(coleman_fractional(gamma), fb);
            rho.validate();
            CHECK((measure_one_rdm(rho, fb).matrix - gamma.matrix).norm() < 1e-10);
        }
    }
    SECTION("a pure extreme determinant realizes a rank-1 projector") {
        const OneRDM gamma = diag_rdm({1.0, 0.0, 1.0}, Statistics::fermion);
        const FockBasis fb = FockBasis::enumerate(OneBodyBasis(3), Statistics::fermion);
        const DensityMatrixOperator rho = realize(coleman_integer(gamma), fb);
        REQUIRE(rho.weights.size() == 1);
        CHECK(rho.weights(0) == Approx(1.0));
        double entropy = 0.0;
        for (int i = 0; i < rho.weights.size(); ++i)
            if (rho.weights(i) > 0) entropy -= rho.weights(i) * std::log(rho.weights(i));
        CHECK(entropy == Approx(0.0).margin(1e-15));
    }
    SECTION("equal mixture of the N=2 extreme points gives (2/3) I") {
        ColemanEnsemble ens;
        ens.statistics = Statistics::fermion;
        ens.natural_orbital_transform = Eigen::MatrixXcd::Identity(3, 3);
        ens.terms = {{1.0 / 3.0, {1, 1, 0}}, {1.0 / 3.0, {1, 0, 1}}, {1.0 / 3.0, {0, 1, 1}}};
        const FockBasis fb = FockBasis::enumerate(OneBodyBasis(3), Statistics::fermion);
        const OneRDM measured = measure_one_rdm(realize(ens, fb), fb);
        CHECK((measured.matrix - (2.0 / 3.0) * Eigen::MatrixXcd::Identity(3, 3)).norm() < 1e-12);
    }
    SECTION("insufficient truncation is an error") {
        const OneRDM gamma = diag_rdm({2.5, 0.5}, Statistics::boson);
        const FockBasis fb = FockBasis::enumerate(OneBodyBasis(2), Statistics::boson, 2);
        CHECK_THROWS_AS(realize(coleman_fractional(gamma), fb), std::invalid_argument);
    }
}

TEST_CASE("realized ensembles keep the universal functional finite") {
    Rng rng(109);
    const FockBasis fb = FockBasis::enumerate(OneBodyBasis(3), Statistics::fermion);
    HamiltonianSpec spec = random_fermionic_spec(rng, 3, 0.5);
    const OperatorMatrix h = build_operator(spec, fb);
    for (int trial = 0; trial < 10; ++trial) {
        const OneRDM gamma = random_interior_rdm(rng, 3, Statistics::fermion);
        const DensityMatrixOperator rho = realize(coleman_fractional(gamma), fb);
        const double omega = grand_potential_of(rho, h, 1.0);
        CHECK(std::isfinite(omega));
    }
}

TEST_CASE("the map from ensembles to 1RDMs is linear") {
    Rng rng(113);
    const FockBasis fb = FockBasis::enumerate(OneBodyBasis(3), Statistics::fermion);
    for (int trial = 0; trial < 10; ++trial) {
        const OneRDM g1 = random_interior_rdm(rng, 3, Statistics::fermion);
        const OneRDM g2 = random_interior_rdm(rng, 3, Statistics::fermion);
        const double lam = rng.uniform(0.2, 0.8);
        const DensityMatrixOperator r1 = realize(coleman_fractional(g1), fb);
        const DensityMatrixOperator r2 = realize(coleman_fractional(g2), fb);
        // concatenated mixture; states of different ensembles need not be
        // mutually orthogonal, but the measured 1RDM is still linear
        DensityMatrixOperator mix;
        mix.weights.resize(r1.weights.size() + r2.weights.size());
        mix.weights << lam * r1.weights, (1.0 - lam) * r2.weights;
        mix.states.resize(fb.dimension(), r1.states.cols() + r2.states.cols());
        mix.states << r1.states, r2.states;
        const Eigen::MatrixXcd expected = lam * g1.matrix + (1.0 - lam) * g2.matrix;
        CHECK((measure_one_rdm(mix, fb).matrix - expected).norm() < 1e-10);
    }
}
