#pragma once

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "rdmft/bogoliubov.hpp"
#include "rdmft/ensemble.hpp"
#include "rdmft/functional.hpp"
#include "rdmft/hamiltonian.hpp"
#include "rdmft/representability.hpp"

namespace rdmft::io {

using nlohmann::json;

/// Raised on malformed input documents; carries the offending field.
struct ParseError : std::runtime_error {
    explicit ParseError(const std::string& what) : std::runtime_error(what) {}
};

// Complex arrays are serialized as row-major lists of [re, im] pairs.
inline json to_json(const Eigen::MatrixXcd& m) {
    json out = json::array();
    for (int i = 0; i < m.rows(); ++i)
        for (int j = 0; j < m.cols(); ++j)
            out.push_back({m(i, j).real(), m(i, j).imag()});
    return out;
}

inline json to_json(const Eigen::VectorXcd& v) {
    json out = json::array();
    for (int i = 0; i < v.size(); ++i) out.push_back({v(i).real(), v(i).imag()});
    return out;
}

inline json to_json(const Eigen::VectorXd& v) {
    json out = json::array();
    for (int i = 0; i < v.size(); ++i) out.push_back(v(i));
    return out;
}

inline cplx complex_from_json(const json& j, const std::string& field) {
    if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
        throw ParseError(field + ": expected a [re, im] pair");
    return {j[0].get<double>(), j[1].get<double>()};
}

inline Eigen::MatrixXcd matrix_from_json(const json& j, int rows, int cols,
                                         const std::string& field) {
    if (!j.is_array() || static_cast<int>(j.size()) != rows * cols)
        throw ParseError(field + ": expected " + std::to_string(rows * cols) +
                         " [re, im] pairs, got " + std::to_string(j.size()));
    Eigen::MatrixXcd m(rows, cols);
    int k = 0;
    for (int i = 0; i < rows; ++i)
        for (int c = 0; c < cols; ++c)
            m(i, c) = complex_from_json(j[k++], field + "[" + std::to_string(k - 1) + "]");
    return m;
}

inline Eigen::VectorXcd vector_from_json(const json& j, int n, const std::string& field) {
    const Eigen::MatrixXcd m = matrix_from_json(j, n, 1, field);
    return m.col(0);
}

// ---------------------------------------------------------------------------
// Hamiltonian model schema
// ---------------------------------------------------------------------------

inline json to_json(const HamiltonianSpec& spec) {
    json out;
    out["statistics"] = to_string(spec.statistics);
    out["n_basis"] = spec.n_basis;
    out["h0"] = spec.h0;
    out["h1"] = to_json(spec.h1);
    if (spec.interacting()) {
        json w = json::array();
        for (const cplx& c : spec.w) w.push_back({c.real(), c.imag()});
        out["w"] = std::move(w);
    }
    if (spec.source.size() > 0) out["source"] = to_json(spec.source);
    if (spec.pairing.size() > 0) out["pairing"] = to_json(spec.pairing);
    if (spec.bosonic_truncation) out["bosonic_truncation"] = *spec.bosonic_truncation;
    return out;
}

inline HamiltonianSpec spec_from_json(const json& j) {
    if (!j.is_object()) throw ParseError("model: expected a JSON object");
    for (const char* required : {"statistics", "n_basis", "h1"})
        if (!j.contains(required))
            throw ParseError(std::string("model: missing field '") + required + "'");

    const std::string stats_str = j["statistics"].get<std::string>();
    Statistics stats;
    if (stats_str == "fermion") stats = Statistics::fermion;
    else if (stats_str == "boson") stats = Statistics::boson;
    else throw ParseError("statistics: expected 'fermion' or 'boson', got '" + stats_str + "'");

    const int nb = j["n_basis"].get<int>();
    if (nb < 1) throw ParseError("n_basis: must be a positive integer");

    HamiltonianSpec spec(stats, matrix_from_json(j["h1"], nb, nb, "h1"));
    if (j.contains("h0")) spec.h0 = j["h0"].get<double>();
    if (j.contains("w")) {
        const json& w = j["w"];
        const std::size_t n4 = static_cast<std::size_t>(nb) * nb * nb * nb;
        if (!w.is_array() || w.size() != n4)
            throw ParseError("w: expected " + std::to_string(n4) + " [re, im] pairs");
        std::vector<cplx> tensor(n4);
        for (std::size_t k = 0; k < n4; ++k)
            tensor[k] = complex_from_json(w[k], "w[" + std::to_string(k) + "]");
        spec.set_w(std::move(tensor));
    }
    if (j.contains("source")) spec.source = vector_from_json(j["source"], nb, "source");
    if (j.contains("pairing")) spec.pairing = matrix_from_json(j["pairing"], nb, nb, "pairing");
    if (j.contains("bosonic_truncation"))
        spec.bosonic_truncation = j["bosonic_truncation"].get<int>();
    return spec;
}

// ---------------------------------------------------------------------------
// 1RDM files
// ---------------------------------------------------------------------------

inline json to_json(const OneRDM& gamma) {
    json out;
    out["n_basis"] = gamma.n_basis();
    out["statistics"] = to_string(gamma.statistics);
    out["matrix"] = to_json(gamma.matrix);
    return out;
}

inline OneRDM gamma_from_json(const json& j, Statistics fallback) {
    if (!j.is_object() || !j.contains("n_basis") || !j.contains("matrix"))
        throw ParseError("gamma: expected an object with 'n_basis' and 'matrix'");
    const int nb = j["n_basis"].get<int>();
    Statistics stats = fallback;
    if (j.contains("statistics")) {
        const std::string s = j["statistics"].get<std::string>();
        if (s == "fermion") stats = Statistics::fermion;
        else if (s == "boson") stats = Statistics::boson;
        else throw ParseError("gamma.statistics: expected 'fermion' or 'boson'");
    }
    return {matrix_from_json(j["matrix"], nb, nb, "gamma.matrix"), stats};
}

// ---------------------------------------------------------------------------
// Result documents
// ---------------------------------------------------------------------------

inline json summary(const GibbsState& st) {
    json out;
    out["beta"] = st.beta;
    out["log_z"] = st.log_z;
    out["omega"] = st.omega;
    out["energy"] = st.energy;
    out["entropy"] = st.entropy;
    out["n_mean"] = st.n_mean;
    out["n_variance"] = st.n2_mean - st.n_mean * st.n_mean;
    out["dimension"] = st.dimension;
    out["occupations"] = to_json(st.gamma.occupations());
    out["gamma"] = to_json(st.gamma.matrix);
    return out;
}

inline json to_json(const ValidationReport& rep) {
    json checks = json::array();
    for (const auto& c : rep.checks)
        checks.push_back({{"name", c.name},
                          {"passed", c.passed},
                          {"mandatory", c.mandatory},
                          {"measured", c.measured},
                          {"detail", c.detail}});
    return {{"checks", std::move(checks)}, {"all_passed", rep.all_passed()}};
}

inline json to_json(const InversionResult& inv) {
    json out;
    out["converged"] = inv.converged;
    out["iterations"] = inv.iterations;
    out["gamma_residual"] = inv.gamma_residual;
    out["f_value"] = inv.f_value;
    out["v"] = to_json(inv.v.v);
    out["chemical_potential"] = chemical_potential(inv.v);
    if (inv.ntrunc >= 0) out["bosonic_truncation"] = inv.ntrunc;
    return out;
}

inline json to_json(const BogoliubovSolution& sol) {
    json out;
    out["statistics"] = to_string(sol.statistics);
    out["stable"] = sol.stable;
    out["max_imag"] = sol.max_imag;
    out["quasiparticle_energies"] = to_json(sol.quasiparticle_energies);
    out["ground_constant"] = sol.ground_constant;
    out["shift"] = to_json(sol.shift);
    out["shift_constant"] = sol.shift_constant;
    out["U"] = to_json(sol.U);
    out["V"] = to_json(sol.V);
    return out;
}

inline json to_json(const ColemanEnsemble& ens) {
    json terms = json::array();
    for (const auto& t : ens.terms) terms.push_back({{"weight", t.weight},
                                                     {"configuration", t.configuration}});
    return {{"statistics", to_string(ens.statistics)},
            {"natural_orbital_transform", to_json(ens.natural_orbital_transform)},
            {"terms", std::move(terms)}};
}

inline json load_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open '" + path + "'");
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw ParseError("parse error in '" + path + "': " + e.what());
    }
    return j;
}

}  // namespace rdmft::io
