#pragma once

#include <vector>

#include "illumopt/jacobian.hpp"

namespace illumopt {

// V restricted to candidate laser nodes, kept in factored form:
//   V[(l,k), j] = H[k, j] / d[k, l]
// where H[k, :] is the emission reaching pixel k per unit laser power at each
// candidate node (given the current fluorophore estimate) and d = Gamma_k . Phi^e_l
// is frozen from the excitation fields of the pattern being improved.
struct DesignMatrix {
    std::vector<Index> support;   // column -> mesh node
    std::vector<Index> pixels;    // active pixel slot -> pixel id
    Mat h;                        // |pixels| x |support|
    Mat inv_d;                    // |pixels| x L, zero where masked
    std::vector<MeasIndex> rows;  // laser-major unmasked rows
    std::vector<std::pair<Index, Index>> slots;  // (pixel slot, laser) per row

    Index num_rows() const { return static_cast<Index>(rows.size()); }
    Index num_cols() const { return static_cast<Index>(support.size()); }
    Eigen::RowVectorXd row(Index r) const;
    Mat dense() const;
};

// Precomputed adjoint pieces shared by every design step on a fixed geometry.
struct DesignCache {
    GreenRows green_f;          // rows of (S^f)^{-1} at nodes seen by the detector
    ReducedTransport transport; // Gamma over those nodes
    GreenRows green_e;          // rows of (S^e)^{-1} at candidate laser nodes
    double zeta = 1.0;          // load = power / (2 zeta)
};

DesignCache make_design_cache(const SystemMatrix& s_e, const SystemMatrix& s_f, const TransportMatrix& gamma,
                              const std::vector<Index>& support, double zeta);

// Same green_f / transport as an existing sensitivity setup, reused for the design step.
DesignCache make_design_cache(const SystemMatrix& s_e, const GreenRows& green_f, const TransportMatrix& gamma,
                              const std::vector<Index>& support, double zeta);

DesignMatrix assemble_V(const DesignCache& cache, const TransportMatrix& gamma, const Vec& c, const Mat& phi_e_prev,
                        double eta, double floor_rel = kDefaultFloorRel);

DesignMatrix assemble_V(const SystemMatrix& s_e, const SystemMatrix& s_f, const TransportMatrix& gamma, const Vec& c,
                        const Mat& phi_e_prev, double eta, const std::vector<Index>& support, double zeta,
                        double floor_rel = kDefaultFloorRel);

// Normal equations of 1/2 |Y - V x|^2: gram = V^T V, corr = V^T Y, yy = |Y|^2.
struct QuadraticModel {
    Mat gram;
    Vec corr;
    double yy = 0.0;

    Index size() const { return corr.size(); }
    double residual_sq(const Vec& x) const;  // |Y - V x|^2
};

QuadraticModel normal_equations(const Mat& v, const Vec& y);
QuadraticModel normal_equations(const DesignMatrix& v, const Vec& y);

struct ExtendedSystem {
    Mat v;
    Vec y;
};

// Appends gamma * s * e_j rows (target 0) for each column whose node may not be
// illuminated, s being the largest column norm of V (1 if V is zero).
ExtendedSystem extend_system(const Mat& v, const Vec& y, const std::vector<Index>& column_nodes,
                             const MeshGrid& mesh, double gamma);
// Same constraint applied to the normal equations: gram_jj += gamma^2 s^2.
QuadraticModel extend_system(QuadraticModel model, const std::vector<Index>& column_nodes, const MeshGrid& mesh,
                             double gamma);

}  // namespace illumopt
