#pragma once

#include <limits>
#include <vector>

#include "illumopt/types.hpp"

namespace illumopt {

// Entries brighter than a third of the maximum. Empty for an all-zero (or all
// non-positive) image.
std::vector<Index> roi(const Vec& x);

double mse(const Vec& x, const Vec& truth);
// 1 when both ROIs are empty, 0 when exactly one is.
double dice(const Vec& x, const Vec& truth);
// |ROI(x)| / |ROI(truth)|; 0 when the truth ROI is empty.
double volume_ratio(const Vec& x, const Vec& truth);
// 10 log10(sum truth^2 / sum (x - truth)^2); +inf when x == truth.
double snr_db(const Vec& x, const Vec& truth);

struct MetricsReport {
    double mse = 0.0;
    double dice = 0.0;
    double vr = 0.0;
    double snr_db = 0.0;
    Index roi_recon = 0;
    Index roi_truth = 0;
};

MetricsReport evaluate(const Vec& x, const Vec& truth);

}  // namespace illumopt
