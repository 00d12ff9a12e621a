#include <iostream>

#include <CLI11.hpp>

#include "illumopt/commands.hpp"

using namespace illumopt;

namespace {

void common_flags(CLI::App* cmd, CommandOptions& o) {
    cmd->add_option("--config", o.config, "JSON run configuration")->check(CLI::ExistingFile);
    cmd->add_option("--out", o.out, "output directory");
    cmd->add_option("--seed", o.seed, "noise seed");
    cmd->add_flag("--quiet", o.quiet, "suppress progress output");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Fluorescence tomography with optimised illumination"};
    app.require_subcommand(1);
    CommandOptions o;

    auto* forward = app.add_subcommand("forward", "synthesise measurements for a laser pattern");
    common_flags(forward, o);
    forward->add_option("--pattern", o.pattern, "pattern CSV (default: configured laser grid)")->check(CLI::ExistingFile);

    auto* recon = app.add_subcommand("reconstruct", "FISTA reconstruction from measurements");
    common_flags(recon, o);
    recon->add_option("--lambda", o.lambda, "regularisation weight");
    recon->add_option("--measurements", o.measurements, "measurement CSV (default: synthesise)")
        ->check(CLI::ExistingFile);
    recon->add_option("--pattern", o.pattern, "pattern the measurements were taken with")->check(CLI::ExistingFile);
    recon->add_flag("--dump-w", o.dump_w, "write W as W.bin");

    auto* opt = app.add_subcommand("optimize", "design the next illumination pattern");
    common_flags(opt, o);
    opt->add_option("--mu", o.mu, "sparsity weight");
    opt->add_option("--mu-sweep", o.mu_sweep, "geometric sweep lo:hi:n");
    opt->add_option("--recon", o.recon, "fluorescence estimate CSV (default: truth)")->check(CLI::ExistingFile);
    opt->add_option("--measurements", o.measurements, "measurement CSV (default: synthesise)")
        ->check(CLI::ExistingFile);
    opt->add_option("--pattern", o.pattern, "current pattern CSV")->check(CLI::ExistingFile);

    auto* loop = app.add_subcommand("loop", "alternate reconstruction and pattern design");
    common_flags(loop, o);
    loop->add_option("--rounds", o.rounds, "maximum number of rounds");
    loop->add_option("--mu", o.mu, "sparsity weight");
    loop->add_option("--lambda", o.lambda, "regularisation weight");

    auto* metrics = app.add_subcommand("metrics", "compare a reconstruction with the truth");
    metrics->add_option("--recon", o.recon, "reconstruction CSV")->required()->check(CLI::ExistingFile);
    metrics->add_option("--truth", o.truth, "truth CSV")->required()->check(CLI::ExistingFile);
    metrics->add_option("--out", o.out, "directory for metrics.json");
    metrics->add_flag("--quiet", o.quiet, "do not print the metrics");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*forward) return cmd_forward(o);
        if (*recon) return cmd_reconstruct(o);
        if (*opt) return cmd_optimize(o);
        if (*loop) return cmd_loop(o);
        if (*metrics) return cmd_metrics(o);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 1;
}
