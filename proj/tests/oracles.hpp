#pragma once

// Independent reference computations used by the unit and acceptance tests.
// None of these call into the library code they check.

#include <array>
#include <vector>

#include "illumopt/types.hpp"

namespace oracle {

using illumopt::Index;
using illumopt::Mat;
using illumopt::Point3;
using illumopt::Vec;

struct GridCounts {
    Index nodes = 0;
    Index tets = 0;
    Index surface = 0;
    Index top = 0;
};

// Walks every lattice point and voxel of an n0 x n1 x n2 grid.
GridCounts enumerate_grid(Index n0, Index n1, Index n2);

// Barycentric coordinates from a 4x4 solve.
std::array<double, 4> bary(const std::array<Point3, 4>& v, const Point3& p);

// Collapsed Gauss-Legendre rule on a tetrahedron, exact to degree 7.
struct QuadPoint {
    Point3 x;
    double w;
};
std::vector<QuadPoint> tet_rule(const std::array<Point3, 4>& v);
std::vector<QuadPoint> tri_rule(const Point3& a, const Point3& b, const Point3& c);

// Integral of mu * u_i * u_j with mu linear through nodal values.
Eigen::Matrix4d tet_mass(const std::array<Point3, 4>& v, const Eigen::Vector4d& mu);
// Integral of kappa grad u_i . grad u_j, gradients by finite differences of bary().
Eigen::Matrix4d tet_stiffness(const std::array<Point3, 4>& v, const Eigen::Vector4d& kappa);
Eigen::Matrix3d tri_mass(const Point3& a, const Point3& b, const Point3& c);

// min over x >= 0 of 1/2 |y - A x|^2 + lambda |x|_1, cyclic coordinate descent to stagnation.
Vec nonneg_lasso_cd(const Mat& a, const Vec& y, double lambda, Index max_sweeps = 200000, double tol = 1e-15);

// min over 0 <= x <= p of 1/2 |y - A x|^2 + mu sum h |x|, projected gradient to stagnation.
Vec box_lasso_pg(const Mat& a, const Vec& y, double mu, const Vec& h, double p, Index max_iters = 200000);

// argmin over z of 1/2 (z - v)^2 + s lambda (alpha |z| + (1-alpha)/2 z^2) by grid search and refinement.
double prox_scalar(double v, double s, double lambda, double alpha);

// Largest eigenvalue of A^T A from a dense symmetric eigensolve.
double largest_eig_ata(const Mat& a);

}  // namespace oracle
