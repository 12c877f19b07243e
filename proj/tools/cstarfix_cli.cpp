#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include <cstarfix/cstarfix.hpp>

namespace {

cstarfix::RunOptions make_options(const std::optional<double>& tol,
                                  const std::optional<int>& max_iter, std::uint64_t seed,
                                  const std::string& out_dir, const std::string& format) {
    cstarfix::RunOptions opts;
    opts.tol = tol;
    opts.max_iter = max_iter;
    opts.seed = seed;
    opts.out_dir = out_dir;
    opts.format = format;
    return opts;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"fixed points of graph-restricted contractions in matrix-valued metrics"};
    app.require_subcommand(1);

    std::optional<double> tol;
    std::optional<int> max_iter;
    std::uint64_t seed = 0;
    std::string out_dir;
    std::string format = "csv";
    app.add_option("--tol", tol, "override the scenario's convergence tolerance");
    app.add_option("--max-iter", max_iter, "override the scenario's iteration cap");
    app.add_option("--seed", seed, "seed for every randomized check (default 0)");
    app.add_option("--out", out_dir, "directory for traces, solutions, and summaries");
    app.add_option("--format", format, "trace format: csv or jsonl")
        ->check(CLI::IsMember({"csv", "jsonl"}));

    std::string verify_ref;
    CLI::App* verify = app.add_subcommand(
        "verify", "check distance axioms, contraction certificate, or solvability gates");
    verify->fallthrough();
    verify->add_option("scenario", verify_ref, "builtin scenario name or scenario file")
        ->required();

    std::string solve_ref;
    CLI::App* solve =
        app.add_subcommand("solve", "run the iteration and report the fixed-point data");
    solve->fallthrough();
    solve->add_option("scenario", solve_ref, "builtin scenario name or scenario file")
        ->required();

    app.add_subcommand("paper-examples", "replay every bundled scenario and check its outcome")
        ->fallthrough();

    std::string oracle_ref;
    CLI::App* oracle =
        app.add_subcommand("oracle", "solve an operator or integral problem file directly");
    oracle->fallthrough();
    oracle->add_option("problem", oracle_ref, "problem file (json)")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    const cstarfix::RunOptions opts = make_options(tol, max_iter, seed, out_dir, format);
    try {
        if (verify->parsed())
            return cstarfix::run_verify(cstarfix::load_scenario(verify_ref), opts, std::cout).code;
        if (solve->parsed())
            return cstarfix::run_solve(cstarfix::load_scenario(solve_ref), opts, std::cout).code;
        if (oracle->parsed()) {
            cstarfix::run_oracle(oracle_ref, opts, std::cout);
            return 0;
        }
        return cstarfix::run_paper_examples(opts, std::cout);
    } catch (const cstarfix::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const cstarfix::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "unexpected error: " << e.what() << "\n";
        return 2;
    }
}
