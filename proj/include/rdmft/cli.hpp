#pragma once

#include <atomic>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "rdmft/io.hpp"
#include "rdmft/random.hpp"
#include "rdmft/rdmft.hpp"

namespace rdmft::cli {

enum class Command { validate, ensemble, sweep, invert, functional, bogoliubov, check };

enum class Format { json, csv };

struct Range {
    double start = 0.0;
    double stop = 0.0;
    int count = 1;
    bool log_scale = false;

    std::vector<double> grid() const {
        std::vector<double> out;
        if (count == 1) {
            out.push_back(start);
            return out;
        }
        for (int k = 0; k < count; ++k) {
            const double t = static_cast<double>(k) / (count - 1);
            out.push_back(log_scale ? start * std::pow(stop / start, t)
                                    : start + t * (stop - start));
        }
        return out;
    }
};

struct RunConfig {
    Command command = Command::validate;
    std::string model_path;
    std::string gamma_path;
    std::string output_path;  // empty: write to the out stream
    Format format = Format::json;
    double beta = 1.0;
    std::optional<Range> beta_range;
    std::optional<Range> mu_range;
    double tolerance = 1e-10;  // bosonic truncation convergence
    std::uint64_t seed = 0;
    int workers = 1;
};

// exit codes
inline constexpr int exit_ok = 0;
inline constexpr int exit_validation = 1;
inline constexpr int exit_numerical = 2;
inline constexpr int exit_io = 3;

/// "A:B:N" or "A:B:N:log"
inline Range parse_range(const std::string& text) {
    Range r;
    std::stringstream ss(text);
    std::string part;
    std::vector<std::string> parts;
    while (std::getline(ss, part, ':')) parts.push_back(part);
    if (parts.size() < 3 || parts.size() > 4)
        throw io::ParseError("range '" + text + "': expected START:STOP:COUNT[:log]");
    try {
        r.start = std::stod(parts[0]);
        r.stop = std::stod(parts[1]);
        r.count = std::stoi(parts[2]);
    } catch (const std::exception&) {
        throw io::ParseError("range '" + text + "': not numeric");
    }
    if (parts.size() == 4) {
        if (parts[3] != "log") throw io::ParseError("range '" + text + "': unknown suffix");
        r.log_scale = true;
        if (r.start <= 0.0 || r.stop <= 0.0)
            throw io::ParseError("range '" + text + "': log scale needs positive bounds");
    }
    if (r.count < 1 || r.start > r.stop)
        throw io::ParseError("range '" + text + "': need count >= 1 and start <= stop");
    return r;
}

namespace detail {

inline std::string format_full(double x) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

inline GibbsState solve_model(const HamiltonianSpec& spec, double beta, double tol,
                              int* ntrunc_out = nullptr) {
    if (spec.statistics == Statistics::fermion) {
        const FockBasis fb = FockBasis::enumerate(OneBodyBasis(spec.n_basis), Statistics::fermion);
        if (ntrunc_out) *ntrunc_out = -1;
        return gibbs(build_operator(spec, fb), beta, fb);
    }
    if (spec.bosonic_truncation) {
        const FockBasis fb = FockBasis::enumerate(OneBodyBasis(spec.n_basis), Statistics::boson,
                                                  *spec.bosonic_truncation);
        if (ntrunc_out) *ntrunc_out = *spec.bosonic_truncation;
        return gibbs(build_operator(spec, fb), beta, fb);
    }
    auto [nt, st] = converge_truncation(spec, beta, tol);
    if (ntrunc_out) *ntrunc_out = nt;
    return st;
}

inline void emit(const RunConfig& cfg, const std::string& text, std::ostream& out) {
    if (cfg.output_path.empty()) {
        out << text;
        if (!text.empty() && text.back() != '\n') out << '\n';
        return;
    }
    std::ofstream file(cfg.output_path);
    if (!file) throw io::ParseError("cannot write '" + cfg.output_path + "'");
    file << text;
    if (!text.empty() && text.back() != '\n') file << '\n';
}

struct SweepRow {
    double beta = 0.0, mu = 0.0;
    GibbsState state;
};

inline std::string sweep_csv(const std::vector<SweepRow>& rows, int nb) {
    std::string out = "beta,mu,log_z,omega,energy,entropy,n_mean,n_variance";
    for (int i = 0; i < nb; ++i) out += ",occ_" + std::to_string(i);
    out += "\n";
    for (const auto& r : rows) {
        const Eigen::VectorXd occ = r.state.gamma.occupations();
        out += format_full(r.beta) + "," + format_full(r.mu) + "," +
               format_full(r.state.log_z) + "," + format_full(r.state.omega) + "," +
               format_full(r.state.energy) + "," + format_full(r.state.entropy) + "," +
               format_full(r.state.n_mean) + "," +
               format_full(r.state.n2_mean - r.state.n_mean * r.state.n_mean);
        for (int i = 0; i < nb; ++i) out += "," + format_full(occ(i));
        out += "\n";
    }
    return out;
}

// -------------------------------------------------------------------------
// invariant audit for the `check` command
// -------------------------------------------------------------------------

struct AuditRow {
    std::string name;
    bool passed = false;
    double margin = 0.0;  // measured slack; negative means violated
};

inline std::vector<AuditRow> run_audit(std::uint64_t seed) {
    std::vector<AuditRow> rows;
    auto record = [&](const std::string& name, double margin, double tol) {
        rows.push_back({name, margin >= -tol, margin});
    };

    {  // canonical anticommutators on a 3-orbital fermionic space
        Rng rng(seed + 1);
        const FockBasis fb = FockBasis::enumerate(OneBodyBasis(3), Statistics::fermion);
        double worst = 0.0;
        const Eigen::MatrixXcd id = Eigen::MatrixXcd::Identity(fb.dimension(), fb.dimension());
        for (int k = 0; k < 3; ++k)
            for (int l = 0; l < 3; ++l) {
                const Eigen::MatrixXcd a = annihilation_matrix(fb, k).dense();
                const Eigen::MatrixXcd c = creation_matrix(fb, l).dense();
                const Eigen::MatrixXcd expected = k == l ? id : Eigen::MatrixXcd::Zero(id.rows(), id.cols());
                worst = std::max(worst, (a * c + c * a - expected).cwiseAbs().maxCoeff());
            }
        record("fermion_anticommutators", 1e-12 - worst, 0.0);
    }
    {  // bosonic commutators below the truncation sector
        const FockBasis fb = FockBasis::enumerate(OneBodyBasis(2), Statistics::boson, 5);
        Eigen::MatrixXcd proj = Eigen::MatrixXcd::Zero(fb.dimension(), fb.dimension());
        for (int k = 0; k < fb.dimension(); ++k)
            if (fb.particle_number(k) < fb.truncation()) proj(k, k) = 1.0;
        double worst = 0.0;
        const Eigen::MatrixXcd id = Eigen::MatrixXcd::Identity(fb.dimension(), fb.dimension());
        for (int k = 0; k < 2; ++k)
            for (int l = 0; l < 2; ++l) {
                const Eigen::MatrixXcd a = annihilation_matrix(fb, k).dense();
                const Eigen::MatrixXcd c = creation_matrix(fb, l).dense();
                const Eigen::MatrixXcd expected = k == l ? id : Eigen::MatrixXcd::Zero(id.rows(), id.cols());
                worst = std::max(worst,
                                 (proj * (a * c - c * a - expected) * proj).cwiseAbs().maxCoeff());
            }
        record("boson_commutators_subtruncation", 1e-12 - worst, 0.0);
    }
    {  // Klein inequality on random density operators
        Rng rng(seed + 2);
        const HamiltonianSpec spec = random_fermionic_spec(rng, 3, 0.3);
        const FockBasis fb = FockBasis::enumerate(OneBodyBasis(3), Statistics::fermion);
        const OperatorMatrix h = build_operator(spec, fb);
        const GibbsState st = gibbs(h, 1.2, fb);
        double worst = 1e300;
        for (int trial = 0; trial < 25; ++trial) {
            const DensityMatrixOperator rho = random_density_matrix(rng, fb.dimension(), 4);
            worst = std::min(worst, grand_potential_of(rho, h, 1.2) - st.omega);
        }
        record("klein_variational_bound", worst, 1e-12);
    }
    {  // strict concavity of Omega[v] at midpoints
        Rng rng(seed + 3);
        const HamiltonianSpec spec = random_fermionic_spec(rng, 3, 0.0);
        const FockBasis fb = FockBasis::enumerate(OneBodyBasis(3), Statistics::fermion);
        auto omega_at = [&](const Eigen::MatrixXcd& v) {
            return gibbs(build_operator(add_potential(spec, Potential(v)), fb), 1.0, fb).omega;
        };
        double worst = 1e300;
        for (int trial = 0; trial < 10; ++trial) {
            const Eigen::MatrixXcd v1 = random_hermitian(rng, 3);
            const Eigen::MatrixXcd v2 = random_hermitian(rng, 3);
            const double mid = omega_at(0.5 * (v1 + v2));
            worst = std::min(worst, mid - 0.5 * (omega_at(v1) + omega_at(v2)));
        }
        record("omega_concavity_margin", worst, 1e-9);
    }
    {  // equilibrium interiority
        Rng rng(seed + 4);
        double worst = 1e300;
        for (int trial = 0; trial < 10; ++trial) {
            const HamiltonianSpec spec = random_fermionic_spec(rng, 3, 0.2);
            const FockBasis fb = FockBasis::enumerate(OneBodyBasis(3), Statistics::fermion);
            const GibbsState st =
                gibbs(build_operator(spec, fb), rng.uniform(0.5, 5.0), fb);
            const Eigen::VectorXd n = st.gamma.occupations();
            worst = std::min({worst, n.minCoeff(), 1.0 - n.maxCoeff()});
        }
        record("equilibrium_interiority", worst, 0.0);
    }
    {  // Mermin inversion round-trip
        Rng rng(seed + 5);
        const HamiltonianSpec spec = random_fermionic_spec(rng, 2, 0.4);
        const Potential v_true(random_hermitian(rng, 2, 0.5));
        const OneRDM gamma = gamma_from_v(spec, v_true, 1.0);
        const InversionResult inv = v_from_gamma(spec, gamma, 1.0);
        record("mermin_round_trip", 1e-6 - (inv.v.v - v_true.v).norm(), 0.0);
    }
    {  // Coleman reconstruction through realize()
        Rng rng(seed + 6);
        const FockBasis fb = FockBasis::enumerate(OneBodyBasis(3), Statistics::fermion);
        double worst = 0.0;
        for (int trial = 0; trial < 10; ++trial) {
            const OneRDM gamma = random_interior_rdm(rng, 3, Statistics::fermion);
            const DensityMatrixOperator rho = realize(coleman_fractional(gamma), fb);
            worst = std::max(worst, (measure_one_rdm(rho, fb).matrix - gamma.matrix).norm());
        }
        record("coleman_reconstruction", 1e-10 - worst, 0.0);
    }
    {  // Takagi / Youla reconstructions
        Rng rng(seed + 7);
        double worst = 0.0;
        for (int trial = 0; trial < 10; ++trial) {
            const Eigen::MatrixXcd s = random_symmetric(rng, 4);
            auto [us, ds] = takagi(s);
            worst = std::max(
                worst,
                (us.transpose() * s * us - Eigen::MatrixXcd(ds.cast<cplx>().asDiagonal())).norm());
            const Eigen::MatrixXcd a = random_antisymmetric(rng, 4);
            auto [ua, da] = youla(a);
            Eigen::MatrixXcd canon = Eigen::MatrixXcd::Zero(4, 4);
            for (int k = 0; k < da.size(); ++k) {
                canon(2 * k, 2 * k + 1) = da(k);
                canon(2 * k + 1, 2 * k) = -da(k);
            }
            worst = std::max(worst, (ua.transpose() * a * ua - canon).norm());
        }
        record("takagi_youla_reconstruction", 1e-10 - worst, 0.0);
    }
    {  // bosonic partition bound
        const HamiltonianSpec spec(Statistics::boson, Eigen::MatrixXcd::Identity(1, 1));
        auto [nt, st] = converge_truncation(spec, 1.0, 1e-10);
        const ZBoundReport rep = verify_z_bound(spec, 1.0, st);
        record("bosonic_z_bound", rep.log_z_bound - rep.log_z, 1e-8);
    }
    return rows;
}

inline std::string audit_csv(const std::vector<AuditRow>& rows) {
    std::string out = "check,passed,margin\n";
    for (const auto& r : rows)
        out += r.name + "," + (r.passed ? "1" : "0") + "," + format_full(r.margin) + "\n";
    return out;
}

inline io::json audit_json(const std::vector<AuditRow>& rows) {
    io::json checks = io::json::array();
    bool all = true;
    for (const auto& r : rows) {
        checks.push_back({{"check", r.name}, {"passed", r.passed}, {"margin", r.margin}});
        all = all && r.passed;
    }
    return {{"checks", std::move(checks)}, {"all_passed", all}};
}

}  // namespace detail

/// Executes one command.  Results go to `out` (or the configured output path),
/// structured errors to `err`.  Returns the process exit status.
inline int run(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    auto fail = [&err](int code, const std::string& kind, const std::string& message) {
        io::json doc;
        doc["error"] = {{"kind", kind}, {"message", message}};
        err << doc.dump() << "\n";
        return code;
    };

    try {
        HamiltonianSpec spec;
        const bool needs_model = cfg.command != Command::check;
        if (needs_model) {
            if (cfg.model_path.empty())
                return fail(exit_io, "usage", "this command requires --model");
            spec = io::spec_from_json(io::load_file(cfg.model_path));
        }

        switch (cfg.command) {
            case Command::validate: {
                const ValidationReport rep = validate_spec(spec);
                detail::emit(cfg, io::to_json(rep).dump(2), out);
                return rep.all_passed() ? exit_ok : exit_validation;
            }

            case Command::ensemble: {
                int ntrunc = -1;
                const GibbsState st = detail::solve_model(spec, cfg.beta, cfg.tolerance, &ntrunc);
                io::json doc = io::summary(st);
                if (ntrunc >= 0) doc["bosonic_truncation"] = ntrunc;
                detail::emit(cfg, doc.dump(2), out);
                return exit_ok;
            }

            case Command::sweep: {
                const std::vector<double> betas =
                    cfg.beta_range ? cfg.beta_range->grid() : std::vector<double>{cfg.beta};
                const std::vector<double> mus =
                    cfg.mu_range ? cfg.mu_range->grid() : std::vector<double>{0.0};
                std::vector<detail::SweepRow> rows(betas.size() * mus.size());
                std::atomic<std::size_t> cursor{0};
                std::atomic<bool> failed{false};
                std::string failure;
                std::mutex failure_mutex;
                auto worker = [&]() {
                    while (true) {
                        const std::size_t k = cursor.fetch_add(1);
                        if (k >= rows.size() || failed.load()) return;
                        const double beta = betas[k / mus.size()];
                        const double mu = mus[k % mus.size()];
                        try {
                            const Potential v(Eigen::MatrixXcd(
                                -mu * Eigen::MatrixXcd::Identity(spec.n_basis, spec.n_basis)));
                            const PotentialCheck pc = validate_potential(spec, v);
                            if (!pc.passed)
                                throw std::invalid_argument(
                                    "infeasible potential at beta=" + std::to_string(beta) +
                                    ", mu=" + std::to_string(mu) +
                                    " (min eigenvalue " + std::to_string(pc.min_eigenvalue) + ")");
                            rows[k].beta = beta;
                            rows[k].mu = mu;
                            rows[k].state = detail::solve_model(add_potential(spec, v), beta,
                                                                cfg.tolerance);
                        } catch (const std::exception& e) {
                            std::lock_guard<std::mutex> lock(failure_mutex);
                            failed.store(true);
                            failure = e.what();
                        }
                    }
                };
                const int nworkers = std::max(1, cfg.workers);
                std::vector<std::thread> pool;
                for (int t = 1; t < nworkers; ++t) pool.emplace_back(worker);
                worker();
                for (auto& t : pool) t.join();
                if (failed.load()) return fail(exit_validation, "validation", failure);

                if (cfg.format == Format::csv) {
                    detail::emit(cfg, detail::sweep_csv(rows, spec.n_basis), out);
                } else {
                    io::json doc = io::json::array();
                    for (const auto& r : rows) {
                        io::json row = io::summary(r.state);
                        row["mu"] = r.mu;
                        doc.push_back(std::move(row));
                    }
                    detail::emit(cfg, doc.dump(2), out);
                }
                return exit_ok;
            }

            case Command::invert:
            case Command::functional: {
                if (cfg.gamma_path.empty())
                    return fail(exit_io, "usage", "this command requires --gamma");
                const OneRDM gamma =
                    io::gamma_from_json(io::load_file(cfg.gamma_path), spec.statistics);
                const InversionResult inv = v_from_gamma(spec, gamma, cfg.beta);
                io::json doc = io::to_json(inv);
                if (cfg.command == Command::functional && spec.interacting()) {
                    const HxcDecomposition dec = hxc_decompose(spec, gamma, cfg.beta, spec.h1);
                    doc["hxc"] = {{"e_hartree", dec.e_hartree},
                                  {"e_exchange", dec.e_exchange},
                                  {"e_correlation", dec.e_correlation},
                                  {"s_reference", dec.s_reference},
                                  {"s_correlation", dec.s_correlation},
                                  {"f_reference", dec.f_reference},
                                  {"f_hxc", dec.f_hxc}};
                }
                detail::emit(cfg, doc.dump(2), out);
                return inv.converged ? exit_ok : exit_numerical;
            }

            case Command::bogoliubov: {
                if (spec.interacting())
                    return fail(exit_validation, "validation",
                                "the quadratic solver requires a spec without a two-body tensor");
                const BogoliubovSolution sol = solve_quadratic(spec.quadratic_part());
                io::json doc = io::to_json(sol);
                if (sol.stable) {
                    const QuadraticThermodynamics td = quadratic_thermodynamics(sol, cfg.beta);
                    doc["thermodynamics"] = {{"beta", cfg.beta},
                                             {"log_z", td.log_z},
                                             {"omega", td.omega},
                                             {"energy", td.energy},
                                             {"entropy", td.entropy}};
                }
                detail::emit(cfg, doc.dump(2), out);
                return exit_ok;
            }

            case Command::check: {
                const std::vector<detail::AuditRow> rows = detail::run_audit(cfg.seed);
                bool all = true;
                for (const auto& r : rows) all = all && r.passed;
                if (cfg.format == Format::csv)
                    detail::emit(cfg, detail::audit_csv(rows), out);
                else
                    detail::emit(cfg, detail::audit_json(rows).dump(2), out);
                return all ? exit_ok : exit_validation;
            }
        }
        return fail(exit_io, "usage", "unknown command");
    } catch (const io::ParseError& e) {
        return fail(exit_io, "parse", e.what());
    } catch (const std::invalid_argument& e) {
        return fail(exit_validation, "validation", e.what());
    } catch (const std::logic_error& e) {
        return fail(exit_numerical, "numerical", e.what());
    } catch (const std::runtime_error& e) {
        return fail(exit_numerical, "numerical", e.what());
    }
}

}  // namespace rdmft::cli
