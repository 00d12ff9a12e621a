#include "illumopt/kernels.hpp"

#include <cmath>
#include <cstdlib>
#include <numbers>

#include <omp.h>

namespace illumopt::kernels {

namespace {

void local_matrices(const MeshGrid& mesh, const Vec& kappa, const Vec& mu_a, Index t,
                    std::array<double, 16>& ks, std::array<double, 16>& ms) {
    const auto& tet = mesh.tets[t];
    const auto geo = tet_geometry({mesh.nodes[tet[0]], mesh.nodes[tet[1]], mesh.nodes[tet[2]], mesh.nodes[tet[3]]});
    const double v = geo.volume;
    double kappa_mean = 0.0;
    double mu_sum = 0.0;
    for (Index a : tet) {
        kappa_mean += kappa[a];
        mu_sum += mu_a[a];
    }
    kappa_mean *= 0.25;

    // Exact integrals of products of three barycentric functions:
    // all equal V/20, one pair equal V/60, all distinct V/120.
    for (int i = 0; i < 4; ++i) {
        const double mi = mu_a[tet[i]];
        for (int j = 0; j < 4; ++j) {
            const double mj = mu_a[tet[j]];
            ks[4 * i + j] = kappa_mean * v * geo.grads[i].dot(geo.grads[j]);
            if (i == j) {
                ms[4 * i + j] = v * (mi / 20.0 + (mu_sum - mi) / 60.0);
            } else {
                ms[4 * i + j] = v * ((mi + mj) / 60.0 + (mu_sum - mi - mj) / 120.0);
            }
        }
    }
}

double gamma_entry(const GammaInputs& in, std::size_t k, std::size_t i) {
    const Point3 r = in.pixels[k] - in.nodes[i];
    const double d2 = r.squaredNorm();
    const double cos_theta = r.z() / std::sqrt(d2);
    if (cos_theta < in.cos_min || cos_theta <= 0.0) return 0.0;
    return in.areas[i] * cos_theta / (std::numbers::pi * d2);
}

}  // namespace

int thread_count() {
    static const int n = [] {
        if (const char* env = std::getenv("ILLUMOPT_THREADS")) {
            const int v = std::atoi(env);
            if (v > 0) return v;
        }
        return omp_get_max_threads();
    }();
    return n;
}

namespace omp {

void element_matrices(const MeshGrid& mesh, const Vec& kappa, const Vec& mu_a, ElementMatrices& out) {
    const Index nt = mesh.num_tets();
    out.stiffness.resize(nt);
    out.mass.resize(nt);
#pragma omp parallel for schedule(static) num_threads(thread_count())
    for (Index t = 0; t < nt; ++t) local_matrices(mesh, kappa, mu_a, t, out.stiffness[t], out.mass[t]);
}

void gemv(const Mat& a, const Vec& x, Vec& y) {
    constexpr Index block = 256;
    const Index rows = a.rows();
    const Index nblocks = (rows + block - 1) / block;
    y.setZero(rows);
#pragma omp parallel for schedule(static) num_threads(thread_count())
    for (Index b = 0; b < nblocks; ++b) {
        const Index r0 = b * block;
        const Index nr = std::min(block, rows - r0);
        auto seg = y.segment(r0, nr);
        for (Index j = 0; j < a.cols(); ++j) seg.noalias() += x[j] * a.col(j).segment(r0, nr);
    }
}

void gemv_t(const Mat& a, const Vec& y, Vec& x) {
    const Index cols = a.cols();
    x.resize(cols);
#pragma omp parallel for schedule(static) num_threads(thread_count())
    for (Index j = 0; j < cols; ++j) x[j] = a.col(j).dot(y);
}

void gamma_dense(const GammaInputs& in, Mat& gamma) {
    const auto m = static_cast<Index>(in.pixels.size());
    const auto n = static_cast<Index>(in.nodes.size());
    gamma.resize(m, n);
#pragma omp parallel for schedule(static) num_threads(thread_count())
    for (Index k = 0; k < m; ++k)
        for (Index i = 0; i < n; ++i)
            gamma(k, i) = gamma_entry(in, static_cast<std::size_t>(k), static_cast<std::size_t>(i));
}

void born_ratio(const Mat& pf, const Mat& pe, double floor, Mat& y, MaskArray& masked) {
    y.resize(pe.rows(), pe.cols());
    masked.resize(pe.rows(), pe.cols());
#pragma omp parallel for schedule(static) num_threads(thread_count())
    for (Index j = 0; j < pe.cols(); ++j) {
        for (Index i = 0; i < pe.rows(); ++i) {
            const bool m = !(pe(i, j) > floor);
            masked(i, j) = m;
            y(i, j) = m ? 0.0 : pf(i, j) / pe(i, j);
        }
    }
}

}  // namespace omp

namespace serial {

void element_matrices(const MeshGrid& mesh, const Vec& kappa, const Vec& mu_a, ElementMatrices& out) {
    out.stiffness.resize(mesh.tets.size());
    out.mass.resize(mesh.tets.size());
    for (Index t = 0; t < mesh.num_tets(); ++t) local_matrices(mesh, kappa, mu_a, t, out.stiffness[t], out.mass[t]);
}

void gemv(const Mat& a, const Vec& x, Vec& y) {
    y.setZero(a.rows());
    for (Index j = 0; j < a.cols(); ++j)
        for (Index i = 0; i < a.rows(); ++i) y[i] += x[j] * a(i, j);
}

void gemv_t(const Mat& a, const Vec& y, Vec& x) {
    x.resize(a.cols());
    for (Index j = 0; j < a.cols(); ++j) {
        double s = 0.0;
        for (Index i = 0; i < a.rows(); ++i) s += a(i, j) * y[i];
        x[j] = s;
    }
}

void gamma_dense(const GammaInputs& in, Mat& gamma) {
    gamma.resize(static_cast<Index>(in.pixels.size()), static_cast<Index>(in.nodes.size()));
    for (std::size_t k = 0; k < in.pixels.size(); ++k)
        for (std::size_t i = 0; i < in.nodes.size(); ++i)
            gamma(static_cast<Index>(k), static_cast<Index>(i)) = gamma_entry(in, k, i);
}

void born_ratio(const Mat& pf, const Mat& pe, double floor, Mat& y, MaskArray& masked) {
    y.resize(pe.rows(), pe.cols());
    masked.resize(pe.rows(), pe.cols());
    for (Index j = 0; j < pe.cols(); ++j) {
        for (Index i = 0; i < pe.rows(); ++i) {
            masked(i, j) = !(pe(i, j) > floor);
            y(i, j) = masked(i, j) ? 0.0 : pf(i, j) / pe(i, j);
        }
    }
}

}  // namespace serial

}  // namespace illumopt::kernels
