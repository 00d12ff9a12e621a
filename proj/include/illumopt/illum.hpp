#pragma once

#include <vector>

#include "illumopt/design.hpp"
#include "illumopt/forward.hpp"
#include "illumopt/mesh.hpp"

namespace illumopt {

// Node-indexed laser powers with 0 <= power <= p_max and support on allowed nodes.
struct IlluminationPattern {
    Vec power;             // N, W/mm^2
    double p_max = 1.0;
    Index max_lasers = 0;  // target bound on the laser count; 0 = none

    Index nnz() const { return static_cast<Index>((power.array() != 0.0).count()); }
    std::vector<Index> support() const;
    bool exceeds_max_lasers() const { return max_lasers > 0 && nnz() > max_lasers; }
};

// Throws unless 0 <= power <= p_max everywhere and power vanishes off the allowed nodes.
void check_feasible(const IlluminationPattern& pattern, const MeshGrid& mesh);

// Regular nx x ny laser array on the top face, snapped to nodes.
IlluminationPattern laser_grid(const MeshGrid& mesh, double center_x, double center_y, double pitch, Index nx,
                               Index ny, double power, double p_max);

IlluminationPattern pattern_from_support(Index num_nodes, const std::vector<Index>& support, const Vec& values,
                                         double p_max);

// One single-node source per nonzero entry, ascending node order.
std::vector<LaserSource> split_pattern(const IlluminationPattern& pattern);

struct CcdOptions {
    Index max_sweeps = 200;
    double tol = 1e-6;          // stop when max coordinate change < tol * p_max
    Index refresh_every = 50;   // recompute the running product from scratch
};

struct CcdResult {
    Vec x;
    Index sweeps = 0;
    std::vector<double> objective;  // after each sweep
};

// 1/2 |Y - V x|^2 + mu sum h_j |x_j| over 0 <= x <= p_max.
double ccd_objective(const QuadraticModel& model, double mu, const Vec& weights, const Vec& x);

// Cyclic coordinate descent in covariance form: the partial-residual correlation
// V_j^T r^(j) is read off V^T Y - V^T V x + |V_j|^2 x_j.
CcdResult ccd_solve(const QuadraticModel& model, double mu, const Vec& weights, double p_max, const Vec& x0,
                    const CcdOptions& opts = {});
CcdResult ccd_solve(const Mat& v, const Vec& y, double mu, const Vec& weights, double p_max, const Vec& x0,
                    const CcdOptions& opts = {});

namespace reference {
// Plain partial-residual sweeps on the explicit matrix.
CcdResult ccd_solve(const Mat& v, const Vec& y, double mu, const Vec& weights, double p_max, const Vec& x0,
                    const CcdOptions& opts = {});
}  // namespace reference

struct ReweightConfig {
    double mu = 1.5e-8;
    double epsilon = 0.01;   // reweighting stabiliser
    Index outer_iters = 10;
    Index sweeps = 200;
    double tol = 1e-6;

    void validate() const;
};

struct ReweightResult {
    Vec x;
    Index outer = 0;
    std::vector<Index> nnz_history;  // after each outer iteration
    bool all_zero = false;           // first pass already empty: mu too large
};

ReweightResult reweighted_l1(const QuadraticModel& model, const ReweightConfig& cfg, double p_max, const Vec& x_init);

}  // namespace illumopt
