#include "illumopt/fem.hpp"

#include <cmath>

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCholesky>
#include <fmt/format.h>

#include "illumopt/kernels.hpp"

namespace illumopt {

OpticalMedium make_medium(Vec mu_a, Vec mu_s, double g, double zeta, double c, double eta) {
    if (mu_a.size() != mu_s.size())
        throw Error(fmt::format("mu_a has {} entries but mu_s has {}", mu_a.size(), mu_s.size()));
    if (!((mu_a.array() > 0.0).all() && mu_a.allFinite())) throw Error("mu_a must be positive and finite");
    if (!((mu_s.array() > 0.0).all() && mu_s.allFinite())) throw Error("mu_s must be positive and finite");
    if (!(g > -1.0 && g < 1.0)) throw Error(fmt::format("anisotropy g = {} outside (-1, 1)", g));
    if (!(zeta > 0.0)) throw Error(fmt::format("zeta = {} must be positive", zeta));
    if (!(c > 0.0)) throw Error(fmt::format("c = {} must be positive", c));
    if (!(eta > 0.0)) throw Error(fmt::format("eta = {} must be positive", eta));

    OpticalMedium m;
    m.kappa = (3.0 * (1.0 - g) * (mu_a + mu_s).array()).inverse().matrix();
    m.mu_a = std::move(mu_a);
    m.mu_s = std::move(mu_s);
    m.g = g;
    m.zeta = zeta;
    m.c = c;
    m.eta = eta;
    return m;
}

OpticalMedium homogeneous_medium(Index n, double mu_a, double mu_s, double g, double zeta, double c, double eta) {
    return make_medium(Vec::Constant(n, mu_a), Vec::Constant(n, mu_s), g, zeta, c, eta);
}

Eigen::Matrix3d triangle_mass(const Point3& a, const Point3& b, const Point3& c) {
    const double area = triangle_area(a, b, c);
    Eigen::Matrix3d m = Eigen::Matrix3d::Constant(area / 12.0);
    m.diagonal().setConstant(area / 6.0);
    return m;
}

Eigen::Matrix4d tet_mass(const std::array<Point3, 4>& v, const Eigen::Vector4d& mu) {
    const double vol = tet_geometry(v).volume;
    const double sum = mu.sum();
    Eigen::Matrix4d m;
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j)
            m(i, j) = i == j ? vol * (mu[i] / 20.0 + (sum - mu[i]) / 60.0)
                             : vol * ((mu[i] + mu[j]) / 60.0 + (sum - mu[i] - mu[j]) / 120.0);
    return m;
}

SystemParts assemble_parts(const MeshGrid& mesh, const OpticalMedium& medium) {
    const Index n = mesh.num_nodes();
    if (medium.size() != n || medium.kappa.size() != n)
        throw Error(fmt::format("optical coefficients have {} entries, mesh has {} nodes", medium.size(), n));

    kernels::ElementMatrices local;
    kernels::omp::element_matrices(mesh, medium.kappa, medium.mu_a, local);

    // Scatter in element order so duplicate summation is deterministic.
    std::vector<Eigen::Triplet<double>> kt, mt, at;
    kt.reserve(mesh.tets.size() * 16);
    mt.reserve(mesh.tets.size() * 16);
    for (std::size_t t = 0; t < mesh.tets.size(); ++t) {
        const auto& tet = mesh.tets[t];
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j) {
                kt.emplace_back(tet[i], tet[j], local.stiffness[t][4 * i + j]);
                mt.emplace_back(tet[i], tet[j], local.mass[t][4 * i + j]);
            }
    }
    at.reserve(mesh.surface_tris.size() * 9);
    for (const auto& tri : mesh.surface_tris) {
        const auto& p = tri.nodes;
        const auto m = triangle_mass(mesh.nodes[p[0]], mesh.nodes[p[1]], mesh.nodes[p[2]]);
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) at.emplace_back(p[i], p[j], m(i, j));
    }

    SystemParts parts;
    parts.stiffness.resize(n, n);
    parts.mass.resize(n, n);
    parts.boundary_mass.resize(n, n);
    parts.stiffness.setFromTriplets(kt.begin(), kt.end());
    parts.mass.setFromTriplets(mt.begin(), mt.end());
    parts.boundary_mass.setFromTriplets(at.begin(), at.end());
    return parts;
}

struct SystemMatrix::Factor {
    Eigen::SimplicialLLT<SpMat, Eigen::Lower, Eigen::AMDOrdering<int>> llt;
};

SystemMatrix::SystemMatrix(SpMat matrix, SolverOptions options)
    : matrix_(std::move(matrix)), options_(options) {
    matrix_.makeCompressed();
    if (matrix_.rows() != matrix_.cols()) throw Error("system matrix must be square");
    const SpMat asym = SpMat(matrix_.transpose()) - matrix_;
    const double scale = matrix_.norm();
    if (asym.norm() > 1e-12 * scale) throw Error("system matrix is not symmetric");

    if (size() <= options_.direct_limit) {
        auto f = std::make_shared<Factor>();
        f->llt.compute(matrix_);
        if (f->llt.info() != Eigen::Success)
            throw Error("system matrix is not positive definite (Cholesky failed)");
        factor_ = std::move(f);
    } else {
        if ((matrix_.diagonal().array() <= 0.0).any())
            throw Error("system matrix is not positive definite (non-positive diagonal)");
    }
}

Mat SystemMatrix::solve(const Mat& rhs) const {
    if (rhs.rows() != size())
        throw Error(fmt::format("right-hand side has {} rows, system has {}", rhs.rows(), size()));
    if (!rhs.allFinite()) throw Error("right-hand side is not finite");

    Mat x(rhs.rows(), rhs.cols());
    if (factor_) {
        x = factor_->llt.solve(rhs);
    } else {
        Eigen::ConjugateGradient<SpMat, Eigen::Lower | Eigen::Upper, Eigen::DiagonalPreconditioner<double>> cg;
        cg.setTolerance(options_.cg_tolerance);
        cg.setMaxIterations(options_.cg_max_iters);
        cg.compute(matrix_);
        for (Index j = 0; j < rhs.cols(); ++j) x.col(j) = cg.solve(rhs.col(j));
    }

    for (Index j = 0; j < rhs.cols(); ++j) {
        const double bnorm = rhs.col(j).norm();
        if (bnorm == 0.0) {
            x.col(j).setZero();
            continue;
        }
        const double res = (matrix_ * x.col(j) - rhs.col(j)).norm() / bnorm;
        if (!(res < options_.residual_check))
            throw SolveError(fmt::format("linear solve did not converge: column {} relative residual {:.3e}", j, res),
                             res);
    }
    return x;
}

Vec SystemMatrix::solve(const Vec& rhs) const {
    return solve(Mat(rhs)).col(0);
}

SpMat lumped(const SpMat& m) {
    const Vec d = m * Vec::Ones(m.cols());
    SpMat out(m.rows(), m.cols());
    std::vector<Eigen::Triplet<double>> t;
    t.reserve(static_cast<std::size_t>(d.size()));
    for (Index i = 0; i < d.size(); ++i) t.emplace_back(i, i, d[i]);
    out.setFromTriplets(t.begin(), t.end());
    return out;
}

SystemMatrix assemble_system(const MeshGrid& mesh, const OpticalMedium& medium, SolverOptions options) {
    auto parts = assemble_parts(mesh, medium);
    if (options.lump_mass) {
        parts.mass = lumped(parts.mass);
        parts.boundary_mass = lumped(parts.boundary_mass);
    }
    SpMat s = parts.stiffness + parts.mass + parts.boundary_mass * (1.0 / (2.0 * medium.zeta));
    return SystemMatrix(std::move(s), options);
}

}  // namespace illumopt
