// rhp: build, evaluate and validate the multi-cut global parametrix.

#include <CLI11.hpp>

#include "rhp/cli.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Global parametrix of the multi-cut model Riemann-Hilbert problem"};
    app.require_subcommand(1);
    rhp::cli::Args args;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", args.config, "problem config (JSON)")->required();
        sub->add_option("--out", args.out, "output directory (default: config 'output' or .)");
        sub->add_option("--tol", args.tol, "Newton tolerance of the period-map inversion");
        sub->add_option("--seed", args.seed, "seed of the validation sample points");
    };

    auto* build = app.add_subcommand("build", "build M, validate it, write report.json and parametrix.json");
    auto* eval = app.add_subcommand("eval", "evaluate M on a grid, write eval.csv");
    auto* validate = app.add_subcommand("validate", "build and validate M, write report.json");
    auto* sweep = app.add_subcommand("sweep", "uniform boundedness sweep over n, write sweep.csv and sweep.json");
    auto* invert = app.add_subcommand("invert", "solve the period-map inversion, write divisor.csv");
    for (auto* sub : {build, eval, validate, sweep, invert}) add_common(sub);
    eval->add_option("--grid", args.grid, "grid spec: empty | circle:R:K[:CX:CY] | line:X0:Y0:X1:Y1:K | real:X0:X1:K | validate[:M]");
    sweep->add_option("--n-max", args.n_max, "largest n of the sweep");
    sweep->add_option("--eps", args.eps, "endpoint exclusion radius of the test set");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : rhp::cli::config_error;
    }
    for (auto* sub : app.get_subcommands()) args.command = sub->get_name();
    return rhp::cli::run(args);
}
