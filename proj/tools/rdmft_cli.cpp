#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>

#include <rdmft/cli.hpp>

using rdmft::cli::Command;
using rdmft::cli::Format;
using rdmft::cli::RunConfig;

int main(int argc, char** argv) {
    CLI::App app{"Grand-canonical exact diagonalization and 1RDM functional toolkit"};
    app.require_subcommand(1);

    RunConfig cfg;
    std::string beta_range, mu_range, format = "json";

    const std::map<std::string, Command> commands = {
        {"validate", Command::validate},       {"ensemble", Command::ensemble},
        {"sweep", Command::sweep},             {"invert", Command::invert},
        {"functional", Command::functional},   {"bogoliubov", Command::bogoliubov},
        {"check", Command::check}};

    const std::map<std::string, std::string> descriptions = {
        {"validate", "Validate a model file and report hermiticity/stability checks"},
        {"ensemble", "Compute the Gibbs state and its thermodynamics"},
        {"sweep", "Evaluate a (beta, mu) grid; one output row per point"},
        {"invert", "Find the potential generating a target 1RDM"},
        {"functional", "Evaluate the universal functional and its Hxc split"},
        {"bogoliubov", "Solve a quadratic Hamiltonian with source and pairing terms"},
        {"check", "Run the randomized invariant audit"}};

    for (const auto& [name, cmd] : commands) {
        CLI::App* sub = app.add_subcommand(name, descriptions.at(name));
        if (cmd != Command::check)
            sub->add_option("--model", cfg.model_path, "model JSON file")->required();
        sub->add_option("--beta", cfg.beta, "inverse temperature");
        if (cmd == Command::sweep) {
            sub->add_option("--beta-range", beta_range, "A:B:N[:log]");
            sub->add_option("--mu-range", mu_range, "A:B:N");
            sub->add_option("--workers", cfg.workers, "concurrent grid workers");
        }
        if (cmd == Command::invert || cmd == Command::functional)
            sub->add_option("--gamma", cfg.gamma_path, "target 1RDM JSON file")->required();
        sub->add_option("--out", cfg.output_path, "output path (default: stdout)");
        sub->add_option("--format", format, "json|csv");
        sub->add_option("--tol", cfg.tolerance, "bosonic truncation tolerance");
        if (cmd == Command::check) sub->add_option("--seed", cfg.seed, "audit seed");
        sub->callback([&cfg, cmd] { cfg.command = cmd; });
    }

    CLI11_PARSE(app, argc, argv);

    try {
        if (format == "csv") cfg.format = Format::csv;
        else if (format == "json") cfg.format = Format::json;
        else throw rdmft::io::ParseError("--format: expected json or csv");
        if (!beta_range.empty()) cfg.beta_range = rdmft::cli::parse_range(beta_range);
        if (!mu_range.empty()) cfg.mu_range = rdmft::cli::parse_range(mu_range);
    } catch (const rdmft::io::ParseError& e) {
        std::cerr << "{\"error\":{\"kind\":\"usage\",\"message\":\"" << e.what() << "\"}}\n";
        return rdmft::cli::exit_io;
    }

    return rdmft::cli::run(cfg, std::cout, std::cerr);
}
