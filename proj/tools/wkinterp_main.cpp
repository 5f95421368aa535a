#include <CLI11.hpp>

#include <cstdint>

#include "wkinterp/runner.hpp"

namespace {

void add_common_options(CLI::App* cmd, wkinterp::RunConfig& cfg) {
    cmd->add_option("model", cfg.model_path, "model JSON file")->required();
    cmd->add_option("-o,--output-dir", cfg.output_dir, "directory for result files");
    cmd->add_option("--lambda-max", cfg.lambda_max,
                    "frequency truncation override, rad/time (1..4096)");
    cmd->add_option("--n-points", cfg.n_points, "frequency grid size override (odd)");
    cmd->add_option("--time-step", cfg.time_step, "quadrature step on S override");
    cmd->add_option("--tikhonov", cfg.tikhonov, "ridge for the operator solve (default: auto)");
    cmd->add_option("--cache-dir", cfg.cache_dir, "binary cache for assembled operators");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"mean-square optimal interpolation of functionals of stationary processes "
                 "observed with noise outside missing intervals"};
    app.require_subcommand(1);

    wkinterp::RunConfig cfg;

    CLI::App* validate = app.add_subcommand("validate", "check a model's densities and weight");
    add_common_options(validate, cfg);

    CLI::App* estimate = app.add_subcommand(
        "estimate", "spectral characteristic h and mean-square error for a model");
    add_common_options(estimate, cfg);

    CLI::App* simulate = app.add_subcommand(
        "simulate", "Monte Carlo check of the error against seeded replications");
    add_common_options(simulate, cfg);
    simulate->add_option("--seed", cfg.seed, "master seed (default 1)");
    simulate->add_option("--n-replications", cfg.n_replications, "replications (default 10000)");
    simulate->add_flag("--emit-paths", cfg.emit_paths, "also write one path pair as CSV");

    CLI::App* minimax = app.add_subcommand(
        "minimax", "least favorable densities and minimax characteristic over class pairs");
    add_common_options(minimax, cfg);
    minimax->add_option("classes", cfg.class_path, "class pair JSON file")->required();
    minimax->add_option("--tol", cfg.tol, "target gap (default 1e-4)");
    minimax->add_option("--max-iter", cfg.max_iter, "iteration cap (default 500)");

    CLI::App* report = app.add_subcommand(
        "report", "validate + estimate + oracle + short Monte Carlo in one result file");
    add_common_options(report, cfg);
    report->add_option("--seed", cfg.seed, "master seed (default 1)");
    report->add_option("--n-replications", cfg.n_replications, "replications (default 2000)");
    report->add_flag("--emit-paths", cfg.emit_paths, "also write one path pair as CSV");

    CLI11_PARSE(app, argc, argv);

    if (validate->parsed()) cfg.command = wkinterp::Command::Validate;
    if (estimate->parsed()) cfg.command = wkinterp::Command::Estimate;
    if (simulate->parsed()) cfg.command = wkinterp::Command::Simulate;
    if (minimax->parsed()) cfg.command = wkinterp::Command::Minimax;
    if (report->parsed()) cfg.command = wkinterp::Command::Report;

    return wkinterp::run(cfg);
}
