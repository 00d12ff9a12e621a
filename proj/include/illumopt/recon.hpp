#pragma once

#include <vector>

#include "illumopt/linear_map.hpp"

namespace illumopt {

struct ReconConfig {
    double lambda = 1e-4;  // regularization weight
    double alpha = 1.0;    // elastic-net mix: 1 = lasso, 0 = ridge
    Index max_iters = 2000;
    double tol = 1e-8;     // relative objective change

    void validate() const;
};

struct IterationLog {
    Index iter = 0;
    double objective = 0.0;
    Index nnz = 0;
};

struct FluorescenceImage {
    Vec c;                      // nonnegative nodal concentration
    double objective = 0.0;     // J at c
    Index iterations = 0;
    double lipschitz = 0.0;     // largest eigenvalue of W^T W
    std::vector<IterationLog> log;
};

// tau_theta(x)_i = sign(x_i) max(|x_i| - theta, 0)
Vec soft_threshold(const Vec& x, double theta);

// Proximal map of s R with R = lambda (alpha |.|_1 + (1 - alpha)/2 |.|_2^2).
Vec prox_elastic_net(const Vec& z, double s, double lambda, double alpha);

// Largest eigenvalue of A^T A by power iteration (relative change < 1e-8 or 1000 steps).
double lipschitz_constant(const LinearMap& a);

// R(C) for the configured penalty.
double penalty(const Vec& c, const ReconConfig& cfg);
// J(C) = 1/2 |Y - W C|^2 + R(C).
double objective(const LinearMap& w, const Vec& y, const Vec& c, const ReconConfig& cfg);

// FISTA with constant step 1/L over C >= 0, started from zero; returns the best iterate.
FluorescenceImage fista(const LinearMap& w, const Vec& y, const ReconConfig& cfg);
FluorescenceImage fista(const Mat& w, const Vec& y, const ReconConfig& cfg);

}  // namespace illumopt
