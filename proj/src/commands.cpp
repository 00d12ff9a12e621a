#include "illumopt/commands.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <iostream>

#include <fmt/format.h>
#include <json.hpp>

#include "illumopt/io.hpp"
#include "illumopt/kernels.hpp"

namespace illumopt {

namespace fs = std::filesystem;

namespace {

std::string prepare_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) throw Error(fmt::format("cannot create output directory '{}'", dir));
    return dir;
}

std::string path_in(const std::string& dir, const std::string& name) { return (fs::path(dir) / name).string(); }

void say(const CommandOptions& opts, const std::string& line) {
    if (!opts.quiet) std::cout << line << '\n';
}

std::string summary_line(const MetricsReport& m) {
    return fmt::format("mse={:.6g} dice={:.4f} vr={:.4f} snr={:.3f} dB", m.mse, m.dice, m.vr, m.snr_db);
}

void write_slices(const std::string& dir, const std::string& stem, const MeshGrid& mesh, const Vec& values,
                  const OutputSettings& out) {
    for (const auto& sl : out.slices) {
        const std::string name = fmt::format("{}_{}{}.pgm", stem, "xyz"[sl.axis], io::num(sl.coord));
        io::write_pgm(path_in(dir, name), io::slice(mesh, values, sl.axis, sl.coord));
    }
}

IlluminationPattern input_pattern(const CommandOptions& opts, const Experiment& exp) {
    if (opts.pattern.empty()) return exp.initial_pattern();
    IlluminationPattern p = io::read_pattern_csv(opts.pattern, exp.mesh(), exp.spec().lasers.p_max);
    p.max_lasers = exp.spec().lasers.max_lasers;
    return p;
}

// Measurements from file when given, otherwise synthesised from the configured truth.
MeasurementSet input_measurements(const CommandOptions& opts, const Experiment& exp, const Mat& phi_e) {
    if (opts.measurements.empty()) return exp.measure(phi_e, exp.spec().seed);
    MeasurementSet m = io::read_measurements_csv(opts.measurements);
    if (m.num_lasers() != phi_e.cols() || m.num_pixels() != exp.gamma().gamma.rows())
        throw Error(fmt::format("{}: {} x {} measurements do not match {} lasers x {} pixels", opts.measurements,
                                m.num_lasers(), m.num_pixels(), phi_e.cols(), exp.gamma().gamma.rows()));
    return m;
}

}  // namespace

RunConfig resolve_config(const CommandOptions& opts) {
    RunConfig cfg = opts.config.empty() ? parse_config_text("") : parse_config(opts.config);
    if (!opts.out.empty()) cfg.output.dir = opts.out;
    if (opts.seed) cfg.phantom.seed = *opts.seed;
    if (opts.rounds) {
        if (*opts.rounds <= 0) throw ConfigError("--rounds", "must be positive");
        cfg.loop.rounds_max = *opts.rounds;
    }
    if (opts.mu) {
        if (!(*opts.mu > 0.0)) throw ConfigError("--mu", "must be positive");
        cfg.loop.design.reweight.mu = *opts.mu;
    }
    if (opts.lambda) {
        if (!(*opts.lambda > 0.0)) throw ConfigError("--lambda", "must be positive");
        cfg.loop.recon.lambda = *opts.lambda;
    }
    return cfg;
}

std::vector<double> MuSweep::values() const {
    std::vector<double> v;
    for (Index i = 0; i < n; ++i) {
        const double t = n == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(n - 1);
        v.push_back(lo * std::pow(hi / lo, t));
    }
    return v;
}

MuSweep parse_mu_sweep(const std::string& text) {
    const auto a = text.find(':');
    const auto b = a == std::string::npos ? a : text.find(':', a + 1);
    if (b == std::string::npos) throw ConfigError("--mu-sweep", "expected lo:hi:n");
    MuSweep s;
    try {
        s.lo = std::stod(text.substr(0, a));
        s.hi = std::stod(text.substr(a + 1, b - a - 1));
        s.n = std::stol(text.substr(b + 1));
    } catch (const std::exception&) {
        throw ConfigError("--mu-sweep", "expected lo:hi:n");
    }
    if (!(s.lo > 0.0 && s.hi >= s.lo)) throw ConfigError("--mu-sweep", "need 0 < lo <= hi");
    if (s.n <= 0) throw ConfigError("--mu-sweep", "n must be positive");
    return s;
}

int cmd_forward(const CommandOptions& opts) {
    const RunConfig cfg = resolve_config(opts);
    const std::string dir = prepare_dir(cfg.output.dir);
    const Experiment exp(cfg.phantom, cfg.loop.design.full_surface);
    const IlluminationPattern pattern = input_pattern(opts, exp);
    const Mat phi_e = exp.system().solve(exp.loads(pattern));
    const MeasurementSet meas = exp.measure(phi_e, cfg.phantom.seed);

    io::write_text(path_in(dir, "config.json"), config_to_json(cfg) + "\n");
    io::write_pattern_csv(path_in(dir, "pattern.csv"), exp.mesh(), pattern);
    io::write_field_csv(path_in(dir, "truth.csv"), exp.mesh(), exp.truth());
    io::write_measurements_csv(path_in(dir, "measurements.csv"), meas);
    io::write_mesh_csv(path_in(dir, "mesh_nodes.csv"), path_in(dir, "mesh_tets.csv"), exp.mesh());
    write_slices(dir, "truth", exp.mesh(), exp.truth(), cfg.output);
    say(opts, fmt::format("forward: {} nodes, {} lasers, {} of {} measurements unmasked -> {}", exp.mesh().num_nodes(),
                          pattern.nnz(), meas.num_unmasked(), meas.y.size(), dir));
    return 0;
}

int cmd_reconstruct(const CommandOptions& opts) {
    const RunConfig cfg = resolve_config(opts);
    const std::string dir = prepare_dir(cfg.output.dir);
    const Experiment exp(cfg.phantom, cfg.loop.design.full_surface);
    const IlluminationPattern pattern = input_pattern(opts, exp);
    const Mat phi_e = exp.system().solve(exp.loads(pattern));
    const MeasurementSet meas = input_measurements(opts, exp, phi_e);
    const SensitivityOperator w(exp.green(), exp.gamma(), phi_e, meas, cfg.phantom.eta);
    const Vec y = measurement_vector(meas, w.row_index());
    const FluorescenceImage img = fista(w, y, cfg.loop.recon);
    const MetricsReport m = evaluate(img.c, exp.truth());

    io::write_field_csv(path_in(dir, "recon.csv"), exp.mesh(), img.c);
    io::write_fista_log(path_in(dir, "fista_log.csv"), img.log);
    io::write_text(path_in(dir, "metrics.json"), io::metrics_json(m) + "\n");
    write_slices(dir, "recon", exp.mesh(), img.c, cfg.output);
    if (opts.dump_w) io::write_matrix_bin(path_in(dir, "W.bin"), w.dense());
    say(opts, fmt::format("reconstruct: {} iterations, objective {:.6g}; {}", img.iterations, img.objective,
                          summary_line(m)));
    return 0;
}

int cmd_optimize(const CommandOptions& opts) {
    const RunConfig cfg = resolve_config(opts);
    const std::string dir = prepare_dir(cfg.output.dir);
    const Experiment exp(cfg.phantom, cfg.loop.design.full_surface);
    const IlluminationPattern pattern = input_pattern(opts, exp);
    const Mat phi_e = exp.system().solve(exp.loads(pattern));
    const MeasurementSet meas = input_measurements(opts, exp, phi_e);
    const Vec c = opts.recon.empty() ? exp.truth() : io::read_field_csv(opts.recon, exp.mesh().num_nodes());
    const DesignProblem problem = design_problem(exp, pattern, phi_e, meas, c, cfg.loop.design);
    const double p_max = cfg.phantom.lasers.p_max;
    const Index max_lasers = cfg.phantom.lasers.max_lasers;

    if (!opts.mu_sweep.empty()) {
        const std::vector<double> mus = parse_mu_sweep(opts.mu_sweep).values();
        std::vector<DesignOutcome> results(mus.size());
        // Independent instances; results land in their own slots.
#pragma omp parallel for schedule(dynamic) num_threads(kernels::thread_count())
        for (std::size_t i = 0; i < mus.size(); ++i) {
            ReweightConfig rc = cfg.loop.design.reweight;
            rc.mu = mus[i];
            results[i] = solve_design(exp, problem, rc, p_max, max_lasers);
        }
        std::string csv = "mu,lasers,residual,all_zero\n";
        for (std::size_t i = 0; i < mus.size(); ++i) {
            csv += fmt::format("{},{},{},{}\n", io::num(mus[i]), results[i].pattern.nnz(),
                               io::num(results[i].residual), results[i].result.all_zero ? 1 : 0);
            say(opts, fmt::format("mu={:.4g}: {} lasers, residual {:.6g}{}", mus[i], results[i].pattern.nnz(),
                                  results[i].residual, results[i].result.all_zero ? " (all zero)" : ""));
        }
        io::write_text(path_in(dir, "mu_sweep.csv"), csv);
        return 0;
    }

    const DesignOutcome next = solve_design(exp, problem, cfg.loop.design.reweight, p_max, max_lasers);
    io::write_pattern_csv(path_in(dir, "pattern_next.csv"), exp.mesh(), next.pattern);
    io::write_text(path_in(dir, "design.json"),
                   fmt::format("{{\"mu\": {}, \"lasers\": {}, \"residual\": {}, \"outer\": {}, \"all_zero\": {}, "
                               "\"laser_bound_exceeded\": {}}}\n",
                               io::num(cfg.loop.design.reweight.mu), next.pattern.nnz(), io::num(next.residual),
                               next.result.outer, next.result.all_zero, next.pattern.exceeds_max_lasers()));
    if (next.result.all_zero) std::cerr << "warning: designed pattern is empty; mu is too large\n";
    if (next.pattern.exceeds_max_lasers())
        std::cerr << fmt::format("warning: {} lasers exceed the bound of {}\n", next.pattern.nnz(), max_lasers);
    say(opts, fmt::format("optimize: {} -> {} lasers, residual {:.6g}", pattern.nnz(), next.pattern.nnz(),
                          next.residual));
    return 0;
}

int cmd_loop(const CommandOptions& opts) {
    const RunConfig cfg = resolve_config(opts);
    const std::string dir = prepare_dir(cfg.output.dir);
    const auto t0 = std::chrono::system_clock::now();
    const Experiment exp(cfg.phantom, cfg.loop.design.full_surface);
    io::write_text(path_in(dir, "config.json"), config_to_json(cfg) + "\n");
    io::write_field_csv(path_in(dir, "truth.csv"), exp.mesh(), exp.truth());
    write_slices(dir, "truth", exp.mesh(), exp.truth(), cfg.output);

    const auto observer = [&](const RoundRecord& rec) {
        const std::string rdir = prepare_dir(path_in(dir, fmt::format("round_{:02d}", rec.round)));
        io::write_pattern_csv(path_in(rdir, "pattern.csv"), exp.mesh(), rec.pattern);
        io::write_pattern_csv(path_in(rdir, "pattern_next.csv"), exp.mesh(), rec.next_pattern);
        io::write_field_csv(path_in(rdir, "recon.csv"), exp.mesh(), rec.recon.c);
        io::write_fista_log(path_in(rdir, "fista_log.csv"), rec.recon.log);
        io::write_text(path_in(rdir, "metrics.json"), io::round_json(rec));
        write_slices(rdir, "recon", exp.mesh(), rec.recon.c, cfg.output);
        say(opts, fmt::format("round {}: {} lasers -> {}; {}; change {:.4g} ({:.1f} s)", rec.round, rec.lasers,
                              rec.next_lasers, summary_line(rec.metrics), rec.pattern_change, rec.seconds));
    };
    const LoopResult res = run_loop(exp, cfg.loop, observer);

    std::string rounds;
    for (const auto& rec : res.records) {
        rounds += fmt::format("{}    {{\"round\": {}, \"lasers\": {}, \"metrics\": {}, \"pattern_change\": {}, "
                              "\"seconds\": {}}}",
                              rounds.empty() ? "" : ",\n", rec.round, rec.lasers, io::metrics_json(rec.metrics),
                              io::num(rec.pattern_change), io::num(rec.seconds));
    }
    const auto best = res.best_updated_round();
    const auto stamp = std::chrono::duration_cast<std::chrono::seconds>(t0.time_since_epoch()).count();
    io::write_text(path_in(dir, "summary.json"),
                   fmt::format("{{\n  \"started_unix\": {},\n  \"rounds\": [\n{}\n  ],\n  \"converged\": {},\n"
                               "  \"best_round\": {},\n  \"error\": {}\n}}\n",
                               stamp, rounds, res.converged, best ? fmt::format("{}", *best) : "null",
                               res.ok() ? "null" : nlohmann::json(res.error).dump()));
    if (!res.ok()) {
        std::cerr << "error: " << res.error << '\n';
        return 1;
    }
    say(opts, fmt::format("loop: {} rounds{}", res.records.size(), res.converged ? ", converged" : ""));
    return 0;
}

int cmd_metrics(const CommandOptions& opts) {
    if (opts.recon.empty() || opts.truth.empty()) throw Error("metrics needs --recon and --truth");
    const Vec truth = io::read_field_csv(opts.truth);
    const Vec x = io::read_field_csv(opts.recon, truth.size());
    const MetricsReport m = evaluate(x, truth);
    const std::string js = io::metrics_json(m);
    if (!opts.out.empty()) io::write_text(path_in(prepare_dir(opts.out), "metrics.json"), js + "\n");
    if (!opts.quiet) std::cout << js << '\n';
    return 0;
}

}  // namespace illumopt
