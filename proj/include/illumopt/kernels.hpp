#pragma once

// Data-parallel inner loops. Every kernel exists twice: an OpenMP version used by
// the library and a plain serial version kept as the reference for tests and the
// benchmark. Parallel loops only partition independent outputs, never a reduction,
// so results do not depend on the thread count.

#include <array>
#include <vector>

#include "illumopt/mesh.hpp"
#include "illumopt/types.hpp"

namespace illumopt::kernels {

// Row-major 4x4 local matrices, one per tetrahedron.
struct ElementMatrices {
    std::vector<std::array<double, 16>> stiffness;  // kappa-weighted
    std::vector<std::array<double, 16>> mass;       // mu_a-weighted
};

using MaskArray = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

// Lambertian inverse-square kernel between detector pixels and surface patches.
struct GammaInputs {
    std::vector<Point3> pixels;
    std::vector<Point3> nodes;
    std::vector<double> areas;  // boundary area share per node
    double cos_min = 0.0;       // acceptance cone: cos(theta) >= cos_min
};

// Worker threads used by the OpenMP kernels; honours ILLUMOPT_THREADS.
int thread_count();

namespace omp {
void element_matrices(const MeshGrid& mesh, const Vec& kappa, const Vec& mu_a, ElementMatrices& out);
void gemv(const Mat& a, const Vec& x, Vec& y);
void gemv_t(const Mat& a, const Vec& y, Vec& x);
void gamma_dense(const GammaInputs& in, Mat& gamma);
void born_ratio(const Mat& pf, const Mat& pe, double floor, Mat& y, MaskArray& masked);
}  // namespace omp

namespace serial {
void element_matrices(const MeshGrid& mesh, const Vec& kappa, const Vec& mu_a, ElementMatrices& out);
void gemv(const Mat& a, const Vec& x, Vec& y);
void gemv_t(const Mat& a, const Vec& y, Vec& x);
void gamma_dense(const GammaInputs& in, Mat& gamma);
void born_ratio(const Mat& pf, const Mat& pe, double floor, Mat& y, MaskArray& masked);
}  // namespace serial

}  // namespace illumopt::kernels
