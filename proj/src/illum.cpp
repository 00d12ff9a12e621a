#include "illumopt/illum.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <fmt/format.h>

#include "illumopt/recon.hpp"

namespace illumopt {

std::vector<Index> IlluminationPattern::support() const {
    std::vector<Index> s;
    for (Index i = 0; i < power.size(); ++i)
        if (power[i] != 0.0) s.push_back(i);
    return s;
}

void check_feasible(const IlluminationPattern& pattern, const MeshGrid& mesh) {
    if (pattern.power.size() != mesh.num_nodes()) throw Error("pattern length does not match mesh");
    for (Index i = 0; i < pattern.power.size(); ++i) {
        const double p = pattern.power[i];
        if (!(p >= 0.0 && p <= pattern.p_max))
            throw Error(fmt::format("pattern power {} at node {} outside [0, {}]", p, i, pattern.p_max));
        if (p != 0.0 && !mesh.illum_allowed[static_cast<std::size_t>(i)])
            throw Error(fmt::format("pattern illuminates node {} outside the allowed face", i));
    }
}

IlluminationPattern laser_grid(const MeshGrid& mesh, double center_x, double center_y, double pitch, Index nx,
                               Index ny, double power, double p_max) {
    if (nx <= 0 || ny <= 0) throw Error("laser grid needs at least one laser per axis");
    if (!(pitch > 0.0)) throw Error("laser pitch must be positive");
    if (!(p_max > 0.0)) throw Error("p_max must be positive");
    if (!(power > 0.0 && power <= p_max)) throw Error(fmt::format("laser power {} outside (0, p_max]", power));

    IlluminationPattern pat;
    pat.power = Vec::Zero(mesh.num_nodes());
    pat.p_max = p_max;
    const double tol = 1e-9 * mesh.spacing;
    for (Index i = 0; i < nx; ++i) {
        for (Index j = 0; j < ny; ++j) {
            const double x = center_x + (static_cast<double>(i) - 0.5 * static_cast<double>(nx - 1)) * pitch;
            const double y = center_y + (static_cast<double>(j) - 0.5 * static_cast<double>(ny - 1)) * pitch;
            if (x < -tol || y < -tol || x > mesh.dims[0] + tol || y > mesh.dims[1] + tol)
                throw Error(fmt::format("laser at ({}, {}) falls outside the top face", x, y));
            const Index node = mesh.nearest_top_node(x, y);
            if (pat.power[node] != 0.0) throw Error(fmt::format("two lasers snap to node {}", node));
            pat.power[node] = power;
        }
    }
    return pat;
}

IlluminationPattern pattern_from_support(Index num_nodes, const std::vector<Index>& support, const Vec& values,
                                         double p_max) {
    if (static_cast<Index>(support.size()) != values.size()) throw Error("support and values differ in length");
    IlluminationPattern pat;
    pat.power = Vec::Zero(num_nodes);
    pat.p_max = p_max;
    for (std::size_t j = 0; j < support.size(); ++j) pat.power[support[j]] = values[static_cast<Index>(j)];
    return pat;
}

std::vector<LaserSource> split_pattern(const IlluminationPattern& pattern) {
    std::vector<LaserSource> out;
    for (Index i = 0; i < pattern.power.size(); ++i)
        if (pattern.power[i] != 0.0) out.push_back({i, pattern.power[i]});
    if (out.empty()) throw Error("illumination pattern is empty: no laser to fire");
    return out;
}

double ccd_objective(const QuadraticModel& model, double mu, const Vec& weights, const Vec& x) {
    return 0.5 * model.residual_sq(x) + mu * weights.cwiseProduct(x.cwiseAbs()).sum();
}

namespace {

void check_ccd_inputs(Index n, double mu, const Vec& weights, double p_max, const Vec& x0) {
    if (weights.size() != n || x0.size() != n) throw Error("ccd_solve: weight or start vector has wrong length");
    if (!(mu >= 0.0)) throw Error("ccd_solve: mu must be nonnegative");
    if (!(p_max > 0.0)) throw Error("ccd_solve: p_max must be positive");
    if ((weights.array() < 0.0).any()) throw Error("ccd_solve: weights must be nonnegative");
    if ((x0.array() < 0.0).any() || (x0.array() > p_max).any()) throw Error("ccd_solve: start point infeasible");
}

double coordinate_update(double rho, double diag, double threshold, double p_max) {
    const double mag = std::abs(rho) - threshold;
    const double shrunk = mag > 0.0 ? std::copysign(mag, rho) : 0.0;
    return std::clamp(shrunk / diag, 0.0, p_max);
}

}  // namespace

CcdResult ccd_solve(const QuadraticModel& model, double mu, const Vec& weights, double p_max, const Vec& x0,
                    const CcdOptions& opts) {
    const Index n = model.size();
    check_ccd_inputs(n, mu, weights, p_max, x0);

    CcdResult res;
    res.x = x0;
    Vec q = model.gram * res.x;  // V^T V x
    for (Index sweep = 1; sweep <= opts.max_sweeps; ++sweep) {
        double max_change = 0.0;
        for (Index j = 0; j < n; ++j) {
            const double diag = model.gram(j, j);
            double next = 0.0;
            if (diag > 0.0) {
                const double rho = model.corr[j] - q[j] + diag * res.x[j];
                next = coordinate_update(rho, diag, mu * weights[j], p_max);
            }
            const double delta = next - res.x[j];
            if (delta != 0.0) {
                q.noalias() += delta * model.gram.col(j);
                res.x[j] = next;
                max_change = std::max(max_change, std::abs(delta));
            }
        }
        if (opts.refresh_every > 0 && sweep % opts.refresh_every == 0) q.noalias() = model.gram * res.x;
        res.sweeps = sweep;
        res.objective.push_back(ccd_objective(model, mu, weights, res.x));
        if (max_change < opts.tol * p_max) break;
    }
    return res;
}

CcdResult ccd_solve(const Mat& v, const Vec& y, double mu, const Vec& weights, double p_max, const Vec& x0,
                    const CcdOptions& opts) {
    return ccd_solve(normal_equations(v, y), mu, weights, p_max, x0, opts);
}

namespace reference {

CcdResult ccd_solve(const Mat& v, const Vec& y, double mu, const Vec& weights, double p_max, const Vec& x0,
                    const CcdOptions& opts) {
    const Index n = v.cols();
    check_ccd_inputs(n, mu, weights, p_max, x0);
    const Vec col_sq = v.colwise().squaredNorm().transpose();

    CcdResult res;
    res.x = x0;
    Vec r = y - v * res.x;
    for (Index sweep = 1; sweep <= opts.max_sweeps; ++sweep) {
        double max_change = 0.0;
        for (Index j = 0; j < n; ++j) {
            double next = 0.0;
            if (col_sq[j] > 0.0) {
                // r^(j) = Y - V x + V_j x_j
                const double rho = v.col(j).dot(r) + col_sq[j] * res.x[j];
                next = coordinate_update(rho, col_sq[j], mu * weights[j], p_max);
            }
            const double delta = next - res.x[j];
            if (delta != 0.0) {
                r.noalias() -= delta * v.col(j);
                res.x[j] = next;
                max_change = std::max(max_change, std::abs(delta));
            }
        }
        if (opts.refresh_every > 0 && sweep % opts.refresh_every == 0) r = y - v * res.x;
        res.sweeps = sweep;
        res.objective.push_back(0.5 * (y - v * res.x).squaredNorm() + mu * weights.cwiseProduct(res.x).sum());
        if (max_change < opts.tol * p_max) break;
    }
    return res;
}

}  // namespace reference

void ReweightConfig::validate() const {
    if (!(mu > 0.0)) throw Error(fmt::format("mu = {} must be positive", mu));
    if (!(epsilon > 0.0)) throw Error(fmt::format("epsilon = {} must be positive", epsilon));
    if (outer_iters <= 0) throw Error("outer_iters must be positive");
    if (sweeps <= 0) throw Error("sweeps must be positive");
    if (!(tol >= 0.0)) throw Error("tol must be nonnegative");
}

ReweightResult reweighted_l1(const QuadraticModel& model, const ReweightConfig& cfg, double p_max, const Vec& x_init) {
    cfg.validate();
    constexpr double kDelta = 1e-12;
    const Index n = model.size();

    ReweightResult out;
    out.x = x_init;
    Vec weights = Vec::Ones(n);
    CcdOptions opts;
    opts.max_sweeps = cfg.sweeps;
    opts.tol = cfg.tol;

    for (Index k = 1; k <= cfg.outer_iters; ++k) {
        const Vec prev = out.x;
        out.x = ccd_solve(model, cfg.mu, weights, p_max, prev, opts).x;
        out.outer = k;
        out.nnz_history.push_back(static_cast<Index>((out.x.array() != 0.0).count()));
        if (k == 1 && out.nnz_history.back() == 0) {
            out.all_zero = true;
            break;
        }
        if (k > 1 && (out.x - prev).norm() / std::max(prev.norm(), kDelta) < cfg.tol) break;
        weights = (out.x.array().abs() + cfg.epsilon).inverse().matrix();
    }
    return out;
}

}  // namespace illumopt
