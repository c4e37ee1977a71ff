#include <catch2/catch_amalgamated.hpp>

#include <rdmft/cli.hpp>
#include <rdmft/io.hpp>
#include <rdmft/random.hpp>
#include <rdmft/rdmft.hpp>

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

using namespace rdmft;
using Catch::Approx;
using cli::Command;
using cli::RunConfig;
using io::json;

namespace {

std::string write_temp(const std::string& name, const std::string& text) {
    const std::string path = "/tmp/rdmft_cli_test_" + name;
    std::ofstream out(path);
    out << text;
    return path;
}

struct Outcome {
    int code = 0;
    std::string out;
    std::string err;
};

Outcome run_config(const RunConfig& cfg) {
    std::ostringstream out, err;
    Outcome o;
    o.code = cli::run(cfg, out, err);
    o.out = out.str();
    o.err = err.str();
    return o;
}

std::string fermi_mode_model() {
    return write_temp("fermi_mode.json",
                      R"({"statistics": "fermion", "n_basis": 1, "h0": 0.0, "h1": [[1.0, 0.0]]})");
}

}  // namespace

TEST_CASE("range parsing") {
    const cli::Range lin = cli::parse_range("0:2:5");
    CHECK(lin.grid() == std::vector<double>{0.0, 0.5, 1.0, 1.5, 2.0});
    const cli::Range lg = cli::parse_range("1:100:3:log");
    CHECK(lg.grid()[1] == Approx(10.0));
    CHECK_THROWS_AS(cli::parse_range("1:2"), io::ParseError);
    CHECK_THROWS_AS(cli::parse_range("2:1:3"), io::ParseError);
    CHECK_THROWS_AS(cli::parse_range("a:b:c"), io::ParseError);
    CHECK_THROWS_AS(cli::parse_range("-1:1:3:log"), io::ParseError);
}

TEST_CASE("model schema round-trips") {
    Rng rng(5);
    HamiltonianSpec spec = random_bosonic_spec(rng, 2, 1.0, 0.4);
    spec.h0 = 0.25;
    spec.source = Eigen::VectorXcd(2);
    spec.source << cplx(0.1, -0.2), cplx(0.0, 0.3);
    spec.pairing = random_symmetric(rng, 2, 0.1);
    spec.bosonic_truncation = 12;

    const json doc = io::to_json(spec);
    const HamiltonianSpec back = io::spec_from_json(doc);
    CHECK(back.statistics == spec.statistics);
    CHECK(back.n_basis == spec.n_basis);
    CHECK(back.h0 == spec.h0);
    CHECK((back.h1 - spec.h1).cwiseAbs().maxCoeff() == 0.0);
    CHECK((back.source - spec.source).cwiseAbs().maxCoeff() == 0.0);
    CHECK((back.pairing - spec.pairing).cwiseAbs().maxCoeff() == 0.0);
    CHECK(back.w == spec.w);
    CHECK(back.bosonic_truncation == spec.bosonic_truncation);
    // emitted-parsed-emitted is bitwise stable
    CHECK(io::to_json(back).dump() == doc.dump());

    const OneRDM gamma = random_interior_rdm(rng, 3, Statistics::fermion);
    const OneRDM gback = io::gamma_from_json(io::to_json(gamma), Statistics::fermion);
    CHECK((gback.matrix - gamma.matrix).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("ensemble command on the single fermionic mode") {
    RunConfig cfg;
    cfg.command = Command::ensemble;
    cfg.model_path = fermi_mode_model();
    cfg.beta = 1.0;
    const Outcome o = run_config(cfg);
    REQUIRE(o.code == cli::exit_ok);
    const json doc = json::parse(o.out);
    CHECK(doc["log_z"].get<double>() ==
          Approx(std::log(1.0 + std::exp(-1.0))).epsilon(1e-14));
    CHECK(doc["n_mean"].get<double>() == Approx(1.0 / (std::exp(1.0) + 1.0)).epsilon(1e-12));
}

TEST_CASE("sweep produces a monotone particle number in mu") {
    const std::string model = write_temp(
        "fermi_two.json",
        R"({"statistics": "fermion", "n_basis": 2, "h0": 0.0,
           "h1": [[1.0, 0.0], [0.3, 0.1], [0.3, -0.1], [2.0, 0.0]]})");
    RunConfig cfg;
    cfg.command = Command::sweep;
    cfg.model_path = model;
    cfg.beta = 1.0;
    cfg.mu_range = cli::Range{-2.0, 2.0, 9, false};
    cfg.format = cli::Format::csv;
    const Outcome o = run_config(cfg);
    REQUIRE(o.code == cli::exit_ok);

    std::istringstream rows(o.out);
    std::string line;
    std::getline(rows, line);  // header
    CHECK(line.rfind("beta,mu,", 0) == 0);
    double prev = -1.0;
    int count = 0;
    while (std::getline(rows, line)) {
        std::istringstream cells(line);
        std::string cell;
        for (int k = 0; k < 7; ++k) std::getline(cells, cell, ',');
        const double n_mean = std::stod(cell);
        CHECK(n_mean > prev);
        prev = n_mean;
        ++count;
    }
    CHECK(count == 9);

    SECTION("concurrent evaluation is order-deterministic") {
        RunConfig parallel = cfg;
        parallel.workers = 4;
        const Outcome p = run_config(parallel);
        REQUIRE(p.code == cli::exit_ok);
        CHECK(p.out == o.out);
    }
}

TEST_CASE("check audit is deterministic per seed") {
    RunConfig cfg;
    cfg.command = Command::check;
    cfg.seed = 0;
    const Outcome a = run_config(cfg);
    const Outcome b = run_config(cfg);
    REQUIRE(a.code == cli::exit_ok);
    CHECK(a.out == b.out);  // byte-identical reports

    const json doc = json::parse(a.out);
    CHECK(doc["all_passed"].get<bool>());
    CHECK(doc["checks"].size() >= 8);

    RunConfig other = cfg;
    other.seed = 1;
    const Outcome c = run_config(other);
    REQUIRE(c.code == cli::exit_ok);
    CHECK(c.out != a.out);  // margins move with the seed
}

TEST_CASE("invert and functional commands") {
    Rng rng(7);
    const HamiltonianSpec spec = random_fermionic_spec(rng, 2, 0.4);
    const Potential v_true(random_hermitian(rng, 2, 0.5));
    const OneRDM gamma = gamma_from_v(spec, v_true, 1.0);

    const std::string model = write_temp("invert_model.json", io::to_json(spec).dump());
    const std::string target = write_temp("invert_gamma.json", io::to_json(gamma).dump());

    RunConfig cfg;
    cfg.command = Command::invert;
    cfg.model_path = model;
    cfg.gamma_path = target;
    cfg.beta = 1.0;
    const Outcome o = run_config(cfg);
    REQUIRE(o.code == cli::exit_ok);
    const json doc = json::parse(o.out);
    CHECK(doc["converged"].get<bool>());
    const Eigen::MatrixXcd v = io::matrix_from_json(doc["v"], 2, 2, "v");
    CHECK((v - v_true.v).norm() < 1e-6);

    cfg.command = Command::functional;
    const Outcome f = run_config(cfg);
    REQUIRE(f.code == cli::exit_ok);
    const json fdoc = json::parse(f.out);
    CHECK(fdoc.contains("hxc"));
    CHECK(fdoc["f_value"].is_number());
}

TEST_CASE("bogoliubov command reports stability") {
    const std::string stable = write_temp(
        "quad_stable.json",
        R"({"statistics": "boson", "n_basis": 1, "h1": [[1.0, 0.0]], "pairing": [[0.3, 0.0]]})");
    RunConfig cfg;
    cfg.command = Command::bogoliubov;
    cfg.model_path = stable;
    cfg.beta = 1.0;
    const Outcome o = run_config(cfg);
    REQUIRE(o.code == cli::exit_ok);
    const json doc = json::parse(o.out);
    CHECK(doc["stable"].get<bool>());
    CHECK(doc["quasiparticle_energies"][0].get<double>() == Approx(0.8));
    CHECK(doc.contains("thermodynamics"));

    const std::string unstable = write_temp(
        "quad_unstable.json",
        R"({"statistics": "boson", "n_basis": 1, "h1": [[1.0, 0.0]], "pairing": [[0.6, 0.0]]})");
    cfg.model_path = unstable;
    const Outcome u = run_config(cfg);
    REQUIRE(u.code == cli::exit_ok);  // instability is a reported state
    const json udoc = json::parse(u.out);
    CHECK_FALSE(udoc["stable"].get<bool>());
    CHECK_FALSE(udoc.contains("thermodynamics"));
}

TEST_CASE("error channels and exit codes") {
    SECTION("missing file is an I/O error") {
        RunConfig cfg;
        cfg.command = Command::ensemble;
        cfg.model_path = "/tmp/rdmft_cli_test_does_not_exist.json";
        const Outcome o = run_config(cfg);
        CHECK(o.code == cli::exit_io);
        const json err = json::parse(o.err);
        CHECK(err["error"]["kind"] == "parse");
    }
    SECTION("malformed field is an I/O error with the field name") {
        const std::string bad = write_temp(
            "bad_field.json", R"({"statistics": "fermion", "n_basis": 2, "h1": [[1.0, 0.0]]})");
        RunConfig cfg;
        cfg.command = Command::ensemble;
        cfg.model_path = bad;
        const Outcome o = run_config(cfg);
        CHECK(o.code == cli::exit_io);
        CHECK(o.err.find("h1") != std::string::npos);
    }
    SECTION("infeasible bosonic potential is a validation error") {
        const std::string model = write_temp(
            "bose_feasible.json", R"({"statistics": "boson", "n_basis": 1, "h1": [[1.0, 0.0]]})");
        RunConfig cfg;
        cfg.command = Command::sweep;
        cfg.model_path = model;
        cfg.beta = 1.0;
        cfg.mu_range = cli::Range{0.0, 2.0, 3, false};  // mu = 2 makes h1 - mu negative
        const Outcome o = run_config(cfg);
        CHECK(o.code == cli::exit_validation);
        CHECK(o.err.find("infeasible") != std::string::npos);
    }
    SECTION("validate flags a broken spec with exit 1") {
        const std::string model = write_temp(
            "bad_spec.json",
            R"({"statistics": "boson", "n_basis": 1, "h1": [[1.0, 0.0]],
               "w": [[-0.1, 0.0]]})");
        RunConfig cfg;
        cfg.command = Command::validate;
        cfg.model_path = model;
        const Outcome o = run_config(cfg);
        CHECK(o.code == cli::exit_validation);
        const json doc = json::parse(o.out);
        CHECK_FALSE(doc["all_passed"].get<bool>());
    }
}
