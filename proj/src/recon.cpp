#include "illumopt/recon.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

namespace illumopt {

void ReconConfig::validate() const {
    if (!(lambda > 0.0)) throw Error(fmt::format("lambda = {} must be positive", lambda));
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw Error(fmt::format("alpha = {} outside [0, 1]", alpha));
    if (max_iters <= 0) throw Error("max_iters must be positive");
    if (!(tol >= 0.0)) throw Error("tol must be nonnegative");
}

Vec soft_threshold(const Vec& x, double theta) {
    if (!(theta >= 0.0)) throw Error("soft-threshold level must be nonnegative");
    Vec out(x.size());
    for (Index i = 0; i < x.size(); ++i) {
        const double mag = std::abs(x[i]) - theta;
        out[i] = mag > 0.0 ? std::copysign(mag, x[i]) : 0.0;
    }
    return out;
}

Vec prox_elastic_net(const Vec& z, double s, double lambda, double alpha) {
    if (!(s > 0.0)) throw Error("prox step must be positive");
    return soft_threshold(z, alpha * lambda * s) / (1.0 + (1.0 - alpha) * lambda * s);
}

double lipschitz_constant(const LinearMap& a) {
    Vec v = Vec::Ones(a.cols()) / std::sqrt(static_cast<double>(a.cols()));
    Vec av, atav;
    double eig = 0.0;
    for (int it = 0; it < 1000; ++it) {
        a.apply(v, av);
        a.apply_adjoint(av, atav);
        const double next = v.dot(atav);
        const double nrm = atav.norm();
        if (nrm == 0.0) throw Error("power iteration hit the zero vector: operator is zero");
        v = atav / nrm;
        if (it > 0 && std::abs(next - eig) <= 1e-8 * std::abs(next)) {
            eig = next;
            break;
        }
        eig = next;
    }
    // Rayleigh quotient of the final vector.
    a.apply(v, av);
    eig = std::max(eig, av.squaredNorm());
    if (!(eig > 0.0)) throw Error("operator is zero: Lipschitz constant vanishes");
    return eig;
}

double penalty(const Vec& c, const ReconConfig& cfg) {
    return cfg.lambda * (cfg.alpha * c.lpNorm<1>() + 0.5 * (1.0 - cfg.alpha) * c.squaredNorm());
}

double objective(const LinearMap& w, const Vec& y, const Vec& c, const ReconConfig& cfg) {
    Vec wc;
    w.apply(c, wc);
    return 0.5 * (y - wc).squaredNorm() + penalty(c, cfg);
}

FluorescenceImage fista(const LinearMap& w, const Vec& y, const ReconConfig& cfg) {
    cfg.validate();
    if (y.size() != w.rows())
        throw Error(fmt::format("measurement vector has {} entries, operator has {} rows", y.size(), w.rows()));

    FluorescenceImage out;
    const Index n = w.cols();
    out.c = Vec::Zero(n);
    out.objective = 0.5 * y.squaredNorm();
    if (y.squaredNorm() == 0.0) {
        out.log.push_back({0, out.objective, 0});
        return out;
    }

    out.lipschitz = lipschitz_constant(w);
    const double step = 1.0 / out.lipschitz;

    Vec c = Vec::Zero(n);       // extrapolated point
    Vec x_prev = Vec::Zero(n);  // previous prox iterate
    Vec x, wc, grad, resid;
    double p = 1.0;
    double prev_obj = out.objective;
    out.log.push_back({0, prev_obj, 0});

    for (Index k = 1; k <= cfg.max_iters; ++k) {
        w.apply(c, wc);
        resid = y - wc;
        w.apply_adjoint(resid, grad);
        // Prox of R plus the nonnegativity constraint: clip the elastic-net prox at zero.
        x = prox_elastic_net(c + step * grad, step, cfg.lambda, cfg.alpha).cwiseMax(0.0);
        if (!x.allFinite()) throw Error(fmt::format("FISTA produced a non-finite iterate at iteration {}", k));

        const double obj = objective(w, y, x, cfg);
        const Index nnz = static_cast<Index>((x.array() != 0.0).count());
        out.log.push_back({k, obj, nnz});
        out.iterations = k;
        if (obj < out.objective) {
            out.objective = obj;
            out.c = x;
        }

        const double p_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * p * p));
        c = (x + ((p - 1.0) / p_next) * (x - x_prev)).cwiseMax(0.0);
        x_prev = x;
        p = p_next;

        if (std::abs(prev_obj - obj) <= cfg.tol * std::max(std::abs(prev_obj), 1e-300)) break;
        prev_obj = obj;
    }
    return out;
}

FluorescenceImage fista(const Mat& w, const Vec& y, const ReconConfig& cfg) {
    return fista(DenseView(w), y, cfg);
}

}  // namespace illumopt
