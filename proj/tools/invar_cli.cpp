#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "invar/runner.hpp"

int main(int argc, char** argv) {
    CLI::App app{"invar - data-driven safe control simulator"};
    app.require_subcommand(1);

    std::string path;
    invar::RunOptions opts;

    auto* validate = app.add_subcommand("validate", "check a scenario file and its assumptions");
    validate->add_option("file", path, "scenario file")->required();

    auto* run = app.add_subcommand("run", "run one closed-loop scenario");
    run->add_option("file", path, "scenario file")->required();
    std::string out_dir;
    std::uint64_t seed = 0;
    double horizon = 0.0, dt = 0.0;
    auto* out_opt = run->add_option("--out", out_dir, "output directory");
    auto* seed_opt = run->add_option("--seed", seed, "override RNG seed");
    auto* horizon_opt = run->add_option("--horizon", horizon, "override horizon (s)");
    auto* dt_opt = run->add_option("--dt", dt, "override integration step (s)");
    run->add_flag("--no-safety", opts.no_safety, "run the nominal controller only");
    run->add_flag("--plots", opts.plots, "write plot-shaped CSVs");

    auto* batch = app.add_subcommand("batch", "run every scenario matching a glob");
    std::string pattern;
    int jobs = 1;
    batch->add_option("glob", pattern, "scenario glob, e.g. scenarios/*.cfg")->required();
    batch->add_option("--jobs", jobs, "worker pool size")->default_val(1);
    auto* batch_out = batch->add_option("--out", out_dir, "directory for aggregate.csv and per-run artifacts");

    CLI11_PARSE(app, argc, argv);

    if (validate->parsed()) return invar::cmd_validate(path, std::cout);
    if (run->parsed()) {
        if (*out_opt) opts.out_dir = out_dir;
        if (*seed_opt) opts.seed = seed;
        if (*horizon_opt) opts.horizon = horizon;
        if (*dt_opt) opts.dt = dt;
        return invar::cmd_run(path, opts, std::cout);
    }
    if (batch->parsed()) {
        if (*batch_out) opts.out_dir = out_dir;
        return invar::cmd_batch(pattern, jobs, opts, std::cout);
    }
    return 1;
}
