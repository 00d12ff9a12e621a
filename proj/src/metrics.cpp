#include "illumopt/metrics.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

namespace illumopt {

namespace {

void check_lengths(const Vec& x, const Vec& truth) {
    if (x.size() != truth.size())
        throw Error(fmt::format("image lengths differ: {} vs {}", x.size(), truth.size()));
    if (x.size() == 0) throw Error("images are empty");
}

}  // namespace

std::vector<Index> roi(const Vec& x) {
    if (!x.allFinite()) throw Error("roi: image is not finite");
    std::vector<Index> out;
    if (x.size() == 0) return out;
    const double cut = x.maxCoeff() / 3.0;
    if (!(x.maxCoeff() > 0.0)) return out;
    for (Index i = 0; i < x.size(); ++i)
        if (x[i] > cut) out.push_back(i);
    return out;
}

double mse(const Vec& x, const Vec& truth) {
    check_lengths(x, truth);
    return (x - truth).squaredNorm() / static_cast<double>(x.size());
}

double dice(const Vec& x, const Vec& truth) {
    check_lengths(x, truth);
    const auto a = roi(x);
    const auto b = roi(truth);
    if (a.empty() && b.empty()) return 1.0;
    if (a.empty() || b.empty()) return 0.0;
    std::vector<Index> both;
    std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(both));
    return 2.0 * static_cast<double>(both.size()) / static_cast<double>(a.size() + b.size());
}

double volume_ratio(const Vec& x, const Vec& truth) {
    check_lengths(x, truth);
    const auto b = roi(truth);
    if (b.empty()) return 0.0;
    return static_cast<double>(roi(x).size()) / static_cast<double>(b.size());
}

double snr_db(const Vec& x, const Vec& truth) {
    check_lengths(x, truth);
    const double err = (x - truth).squaredNorm();
    if (err == 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(truth.squaredNorm() / err);
}

MetricsReport evaluate(const Vec& x, const Vec& truth) {
    MetricsReport r;
    r.mse = mse(x, truth);
    r.dice = dice(x, truth);
    r.vr = volume_ratio(x, truth);
    r.snr_db = snr_db(x, truth);
    r.roi_recon = static_cast<Index>(roi(x).size());
    r.roi_truth = static_cast<Index>(roi(truth).size());
    return r;
}

}  // namespace illumopt
