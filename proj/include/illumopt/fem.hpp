#pragma once

#include <memory>
#include <variant>

#include "illumopt/mesh.hpp"
#include "illumopt/types.hpp"

namespace illumopt {

// Nodal optical properties plus the scalar constants of the diffusion model.
struct OpticalMedium {
    Vec mu_a;              // absorption, 1/mm
    Vec mu_s;              // scattering, 1/mm
    double g = 0.0;        // anisotropy, (-1, 1)
    double zeta = 1.0;     // boundary mismatch factor, extrapolation length 2*zeta*kappa
    double c = 2.2e11;     // speed of light in tissue, mm/s (unused at omega = 0)
    double eta = 1.0;      // fluorescence yield
    Vec kappa;             // 1 / (3 (1 - g) (mu_a + mu_s))

    Index size() const { return mu_a.size(); }
};

// Validates the inputs and derives kappa.
OpticalMedium make_medium(Vec mu_a, Vec mu_s, double g, double zeta, double c, double eta);
OpticalMedium homogeneous_medium(Index n, double mu_a, double mu_s, double g = 0.0, double zeta = 1.0,
                                 double c = 2.2e11, double eta = 1.0);

// The three assembled pieces of the steady-state system.
struct SystemParts {
    SpMat stiffness;      // K(kappa)
    SpMat mass;           // C(mu_a)
    SpMat boundary_mass;  // A: integral of u_i u_j over the boundary
};

SystemParts assemble_parts(const MeshGrid& mesh, const OpticalMedium& medium);
// Diagonal matrix of row sums.
SpMat lumped(const SpMat& m);

// Unscaled boundary mass matrix of one triangle: Area/6 on the diagonal, Area/12 off it.
Eigen::Matrix3d triangle_mass(const Point3& a, const Point3& b, const Point3& c);
// Local mass matrix of one tet with nodal absorption mu (exact integrals).
Eigen::Matrix4d tet_mass(const std::array<Point3, 4>& v, const Eigen::Vector4d& mu);

struct SolverOptions {
    Index direct_limit = 50'000;  // direct factorization at or below this size
    double cg_tolerance = 1e-10;
    Index cg_max_iters = 10'000;
    double residual_check = 1e-8;
    // Row-sum lump C and A so S is an M-matrix and nonnegative loads give nonnegative fields.
    bool lump_mass = true;
};

// S = K + C + A / (2 zeta), symmetric positive definite. Immutable once built;
// concurrent solves share the cached factorization.
class SystemMatrix {
public:
    SystemMatrix() = default;
    SystemMatrix(SpMat matrix, SolverOptions options = {});

    const SpMat& matrix() const { return matrix_; }
    Index size() const { return matrix_.rows(); }
    bool direct() const { return factor_ != nullptr; }

    // Solves S X = B column by column.
    Mat solve(const Mat& rhs) const;
    Vec solve(const Vec& rhs) const;

private:
    struct Factor;
    SpMat matrix_;
    SolverOptions options_;
    std::shared_ptr<const Factor> factor_;
};

SystemMatrix assemble_system(const MeshGrid& mesh, const OpticalMedium& medium, SolverOptions options = {});

}  // namespace illumopt
