#include "illumopt/pipeline.hpp"

#include <chrono>
#include <cmath>

#include <fmt/format.h>

namespace illumopt {

namespace {

constexpr double kChangeGuard = 1e-12;

bool inside(const Point3& p, const Inclusion& inc, double tol) {
    for (int a = 0; a < 3; ++a) {
        if (p[a] < inc.min_corner[a] - tol || p[a] > inc.max_corner[a] + tol) return false;
    }
    return true;
}

DetectorPlane make_detector(const MeshGrid& mesh, const DetectorSpec& d) {
    DetectorPlane det = centered_detector(mesh, d.rows, d.cols, d.pitch, d.height);
    det.acceptance_deg = d.acceptance_deg;
    return det;
}

std::vector<Index> candidate_nodes(const MeshGrid& mesh, bool full_surface) {
    return full_surface ? mesh.surface_nodes() : mesh.allowed_nodes();
}

}  // namespace

void PhantomSpec::validate() const {
    for (int a = 0; a < 3; ++a) {
        if (!(dims[a] > 0.0)) throw ConfigError("phantom.dims_mm", "dimensions must be positive");
    }
    if (!(spacing > 0.0)) throw ConfigError("phantom.spacing_mm", "must be positive");
    if (!(mu_a >= 0.0)) throw ConfigError("phantom.mu_a", fmt::format("{} must be non-negative", mu_a));
    if (!(mu_s >= 0.0)) throw ConfigError("phantom.mu_s", fmt::format("{} must be non-negative", mu_s));
    if (!(mu_a + mu_s > 0.0)) throw ConfigError("phantom.mu_s", "mu_a + mu_s must be positive");
    if (!(g > -1.0 && g < 1.0)) throw ConfigError("phantom.g", fmt::format("{} outside (-1, 1)", g));
    if (!(zeta > 0.0)) throw ConfigError("phantom.zeta", "must be positive");
    if (!(eta > 0.0)) throw ConfigError("phantom.eta", "must be positive");
    const double tol = 1e-9 * spacing;
    for (std::size_t i = 0; i < inclusions.size(); ++i) {
        const auto& inc = inclusions[i];
        const std::string key = fmt::format("inclusions[{}]", i);
        if (!(inc.intensity >= 0.0)) throw ConfigError(key + ".intensity", "must be non-negative");
        for (int a = 0; a < 3; ++a) {
            if (inc.min_corner[a] > inc.max_corner[a]) throw ConfigError(key, "min_corner exceeds max_corner");
            if (inc.min_corner[a] < -tol || inc.max_corner[a] > dims[a] + tol)
                throw ConfigError(key, "inclusion extends outside the phantom");
        }
    }
    if (!(lasers.pitch > 0.0)) throw ConfigError("lasers.pitch_mm", "must be positive");
    if (lasers.nx <= 0 || lasers.ny <= 0) throw ConfigError("lasers.nx", "laser counts must be positive");
    if (!(lasers.p_max > 0.0)) throw ConfigError("lasers.p_max", "must be positive");
    if (!(lasers.power > 0.0 && lasers.power <= lasers.p_max))
        throw ConfigError("lasers.power", fmt::format("{} outside (0, p_max]", lasers.power));
    if (lasers.max_lasers < 0) throw ConfigError("lasers.max_lasers", "must be non-negative");
    const double hx = 0.5 * lasers.pitch * static_cast<double>(lasers.nx - 1);
    const double hy = 0.5 * lasers.pitch * static_cast<double>(lasers.ny - 1);
    if (lasers.center_x - hx < -tol || lasers.center_x + hx > dims[0] + tol || lasers.center_y - hy < -tol ||
        lasers.center_y + hy > dims[1] + tol)
        throw ConfigError("lasers.grid_center", "laser grid extends past the top face");
    if (detector.rows <= 0 || detector.cols <= 0) throw ConfigError("detector.rows", "must be positive");
    if (!(detector.pitch > 0.0)) throw ConfigError("detector.pitch_mm", "must be positive");
    if (!(detector.height > 0.0)) throw ConfigError("detector.height_mm", "must be positive");
    if (!(detector.acceptance_deg > 0.0 && detector.acceptance_deg <= 90.0))
        throw ConfigError("detector.acceptance_deg", "must lie in (0, 90]");
    if (noise.kind == NoiseModel::Kind::Gaussian && !(noise.sigma_rel >= 0.0))
        throw ConfigError("noise.sigma_rel", "must be non-negative");
}

std::vector<Inclusion> two_bar_inclusions() {
    return {
        Inclusion{Point3(4, 3, 11), Point3(5, 13, 12), 100.0},
        Inclusion{Point3(10, 3, 11), Point3(11, 13, 12), 100.0},
    };
}

PhantomSpec reference_phantom() {
    PhantomSpec spec;
    spec.inclusions = two_bar_inclusions();
    return spec;
}

Vec ground_truth(const MeshGrid& mesh, const std::vector<Inclusion>& inclusions) {
    Vec c = Vec::Zero(mesh.num_nodes());
    const double tol = 1e-9 * mesh.spacing;
    for (Index i = 0; i < mesh.num_nodes(); ++i) {
        for (const auto& inc : inclusions) {
            if (inside(mesh.nodes[i], inc, tol)) c[i] = std::max(c[i], inc.intensity);
        }
    }
    return c;
}

Experiment::Experiment(PhantomSpec spec, bool full_surface) : spec_(std::move(spec)) {
    spec_.validate();
    mesh_ = make_mesh(spec_.dims, spec_.spacing);
    medium_ = homogeneous_medium(mesh_.num_nodes(), spec_.mu_a, spec_.mu_s, spec_.g, spec_.zeta, spec_.c, spec_.eta);
    system_ = assemble_system(mesh_, medium_);
    gamma_ = build_gamma(mesh_, make_detector(mesh_, spec_.detector));
    if (gamma_.nodes.empty()) throw Error("detector sees no node of the top face");
    green_ = green_rows(system_, gamma_.nodes);
    cache_ = make_design_cache(system_, green_, gamma_, candidate_nodes(mesh_, full_surface), spec_.zeta);
    truth_ = ground_truth(mesh_, spec_.inclusions);
}

IlluminationPattern Experiment::initial_pattern() const {
    const auto& g = spec_.lasers;
    IlluminationPattern p = laser_grid(mesh_, g.center_x, g.center_y, g.pitch, g.nx, g.ny, g.power, g.p_max);
    p.max_lasers = g.max_lasers;
    return p;
}

Mat Experiment::loads(const IlluminationPattern& pattern) const {
    return source_loads(mesh_.num_nodes(), split_pattern(pattern), spec_.zeta);
}

MeasurementSet Experiment::measure(const Mat& phi_e, std::uint64_t seed) const {
    const Mat phi_f = system_.solve(emission_sources(truth_, phi_e, spec_.eta));
    return add_noise(born_measurements(gamma_, phi_e, phi_f), spec_.noise, seed);
}

DesignProblem design_problem(const Experiment& exp, const IlluminationPattern& current, const Mat& phi_e,
                             const MeasurementSet& meas, const Vec& c, const DesignSettings& settings) {
    const DesignMatrix v = assemble_V(exp.design_cache(), exp.gamma(), c, phi_e, exp.spec().eta);
    const auto rows = unmasked_rows(meas);
    if (v.rows != rows) throw Error("design rows do not match the measurement mask");
    DesignProblem out;
    out.support = v.support;
    out.model = normal_equations(v, measurement_vector(meas, rows));
    if (settings.gamma_interior > 0.0)
        out.model = extend_system(std::move(out.model), v.support, exp.mesh(), settings.gamma_interior);
    out.x0.resize(v.num_cols());
    for (Index j = 0; j < v.num_cols(); ++j) out.x0[j] = current.power[v.support[j]];
    return out;
}

DesignOutcome solve_design(const Experiment& exp, const DesignProblem& problem, const ReweightConfig& cfg,
                           double p_max, Index max_lasers) {
    const MeshGrid& mesh = exp.mesh();
    DesignOutcome out;
    out.result = reweighted_l1(problem.model, cfg, p_max, problem.x0);
    out.residual = std::sqrt(std::max(problem.model.residual_sq(out.result.x), 0.0));
    // Columns off the admissible set are only penalised, never emitted.
    Vec values = out.result.x;
    for (std::size_t j = 0; j < problem.support.size(); ++j) {
        if (!mesh.illum_allowed[problem.support[j]]) values[static_cast<Index>(j)] = 0.0;
    }
    out.pattern = pattern_from_support(mesh.num_nodes(), problem.support, values, p_max);
    out.pattern.max_lasers = max_lasers;
    check_feasible(out.pattern, mesh);
    return out;
}

RoundRecord run_round(const Experiment& exp, const IlluminationPattern& pattern, Index round,
                      const LoopSettings& settings, const Vec* c_override) {
    const auto t0 = std::chrono::steady_clock::now();
    const MeshGrid& mesh = exp.mesh();
    const double eta = exp.spec().eta;

    RoundRecord rec;
    rec.round = round;
    rec.pattern = pattern;
    rec.lasers = pattern.nnz();
    try {
        check_feasible(pattern, mesh);
        const Mat phi_e = exp.system().solve(exp.loads(pattern));
        const MeasurementSet meas = exp.measure(phi_e, exp.spec().seed + static_cast<std::uint64_t>(round));
        const auto rows = unmasked_rows(meas);
        const Vec y = measurement_vector(meas, rows);
        rec.measurements = static_cast<Index>(rows.size());

        if (c_override) {
            rec.recon.c = *c_override;
        } else {
            const SensitivityOperator w(exp.green(), exp.gamma(), phi_e, meas, eta);
            rec.recon = fista(w, y, settings.recon);
        }

        const DesignProblem problem = design_problem(exp, pattern, phi_e, meas, rec.recon.c, settings.design);
        DesignOutcome next = solve_design(exp, problem, settings.design.reweight, pattern.p_max, pattern.max_lasers);
        rec.next_pattern = std::move(next.pattern);
        rec.design_all_zero = next.result.all_zero;
        rec.next_lasers = rec.next_pattern.nnz();
        rec.laser_bound_exceeded = rec.next_pattern.exceeds_max_lasers();
        rec.pattern_change =
            (rec.next_pattern.power - pattern.power).norm() / std::max(pattern.power.norm(), kChangeGuard);
        rec.metrics = evaluate(rec.recon.c, exp.truth());
    } catch (const Error& e) {
        throw Error(fmt::format("round {}: {}", round, e.what()));
    }
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return rec;
}

std::optional<std::size_t> LoopResult::best_updated_round() const {
    std::optional<std::size_t> best;
    for (std::size_t i = 1; i < records.size(); ++i) {
        if (!best || records[i].metrics.mse < records[*best].metrics.mse) best = i;
    }
    return best;
}

LoopResult run_loop(const Experiment& exp, const LoopSettings& settings, const RoundObserver& observer,
                    std::optional<IlluminationPattern> initial) {
    if (settings.rounds_max <= 0) throw ConfigError("loop.rounds_max", "must be positive");
    if (!(settings.stop_tol >= 0.0)) throw ConfigError("loop.stop_tol", "must be non-negative");
    settings.recon.validate();
    settings.design.reweight.validate();

    LoopResult out;
    IlluminationPattern pattern = initial ? std::move(*initial) : exp.initial_pattern();
    for (Index r = 0; r < settings.rounds_max; ++r) {
        try {
            out.records.push_back(run_round(exp, pattern, r, settings));
        } catch (const std::exception& e) {
            out.error = e.what();
            return out;
        }
        const RoundRecord& rec = out.records.back();
        if (observer) observer(rec);
        if (rec.pattern_change < settings.stop_tol) {
            out.converged = true;
            break;
        }
        pattern = rec.next_pattern;
    }
    return out;
}

}  // namespace illumopt
