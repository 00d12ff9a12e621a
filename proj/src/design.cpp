#include "illumopt/design.hpp"

#include <fmt/format.h>

namespace illumopt {

Eigen::RowVectorXd DesignMatrix::row(Index r) const {
    const auto [a, l] = slots[static_cast<std::size_t>(r)];
    return inv_d(a, l) * h.row(a);
}

Mat DesignMatrix::dense() const {
    Mat v(num_rows(), num_cols());
    for (Index r = 0; r < num_rows(); ++r) v.row(r) = row(r);
    return v;
}

DesignCache make_design_cache(const SystemMatrix& s_e, const GreenRows& green_f, const TransportMatrix& gamma,
                              const std::vector<Index>& support, double zeta) {
    if (!(zeta > 0.0)) throw Error("zeta must be positive");
    DesignCache cache;
    cache.green_f = green_f;
    cache.transport = reduce_transport(gamma, green_f.nodes);
    cache.green_e = green_rows(s_e, support);
    cache.zeta = zeta;
    return cache;
}

DesignCache make_design_cache(const SystemMatrix& s_e, const SystemMatrix& s_f, const TransportMatrix& gamma,
                              const std::vector<Index>& support, double zeta) {
    return make_design_cache(s_e, green_rows(s_f, gamma.nodes), gamma, support, zeta);
}

DesignMatrix assemble_V(const DesignCache& cache, const TransportMatrix& gamma, const Vec& c, const Mat& phi_e_prev,
                        double eta, double floor_rel) {
    const Index n = phi_e_prev.rows();
    if (c.size() != n || cache.green_f.rows.cols() != n || cache.green_e.rows.cols() != n)
        throw Error("assemble_V: node counts disagree");
    if ((c.array() < 0.0).any()) throw Error("assemble_V: fluorescence estimate has negative entries");

    DesignMatrix v;
    v.support = cache.green_e.nodes;
    v.pixels = cache.transport.pixels;

    // h_k = (S^e)^{-1} (eta g_k .* C) with g_k = (S^f)^{-1} Gamma_k, read only at the
    // support nodes and converted from load to laser power.
    //   H^T = Z_e diag(eta C) Z_f^T Gamma_v^T / (2 zeta)
    const Mat zc = cache.green_e.rows * (cache.green_f.rows.transpose().array().colwise() * (eta * c).array()).matrix();
    v.h = (cache.transport.gamma * zc.transpose()) / (2.0 * cache.zeta);

    // Denominators d = Gamma Phi^e over active pixels.
    const Index nv = static_cast<Index>(cache.green_f.nodes.size());
    Mat phi_v(nv, phi_e_prev.cols());
    for (Index t = 0; t < nv; ++t) phi_v.row(t) = phi_e_prev.row(cache.green_f.nodes[static_cast<std::size_t>(t)]);
    const Mat d_active = cache.transport.gamma * phi_v;
    const Mat d_full = Mat(gamma.gamma * phi_e_prev);
    const double floor = floor_rel * (d_full.size() > 0 ? d_full.maxCoeff() : 0.0);

    std::vector<Index> slot_of_pixel(static_cast<std::size_t>(gamma.gamma.rows()), -1);
    for (std::size_t a = 0; a < v.pixels.size(); ++a) slot_of_pixel[static_cast<std::size_t>(v.pixels[a])] = static_cast<Index>(a);

    v.inv_d = Mat::Zero(static_cast<Index>(v.pixels.size()), phi_e_prev.cols());
    for (Index l = 0; l < phi_e_prev.cols(); ++l) {
        for (Index k = 0; k < gamma.gamma.rows(); ++k) {
            if (!(d_full(k, l) > floor)) continue;
            const Index a = slot_of_pixel[static_cast<std::size_t>(k)];
            v.inv_d(a, l) = 1.0 / d_active(a, l);
            v.rows.push_back({l, k});
            v.slots.emplace_back(a, l);
        }
    }
    return v;
}

DesignMatrix assemble_V(const SystemMatrix& s_e, const SystemMatrix& s_f, const TransportMatrix& gamma, const Vec& c,
                        const Mat& phi_e_prev, double eta, const std::vector<Index>& support, double zeta,
                        double floor_rel) {
    const auto cache = make_design_cache(s_e, s_f, gamma, support, zeta);
    return assemble_V(cache, gamma, c, phi_e_prev, eta, floor_rel);
}

double QuadraticModel::residual_sq(const Vec& x) const {
    return std::max(0.0, yy - 2.0 * corr.dot(x) + x.dot(gram * x));
}

QuadraticModel normal_equations(const Mat& v, const Vec& y) {
    if (v.rows() != y.size()) throw Error("normal_equations: row count mismatch");
    QuadraticModel m;
    m.gram = v.transpose() * v;
    m.corr = v.transpose() * y;
    m.yy = y.squaredNorm();
    return m;
}

QuadraticModel normal_equations(const DesignMatrix& v, const Vec& y) {
    if (v.num_rows() != y.size()) throw Error("normal_equations: row count mismatch");
    // Rows of one pixel share h_k and differ only by 1/d, so V^T V collapses to
    // H^T diag(sum_l 1/d_kl^2) H.
    const Index na = v.h.rows();
    Vec weight = Vec::Zero(na);
    Vec proj = Vec::Zero(na);
    for (Index r = 0; r < v.num_rows(); ++r) {
        const auto [a, l] = v.slots[static_cast<std::size_t>(r)];
        const double s = v.inv_d(a, l);
        weight[a] += s * s;
        proj[a] += s * y[r];
    }
    QuadraticModel m;
    m.gram = v.h.transpose() * weight.asDiagonal() * v.h;
    m.corr = v.h.transpose() * proj;
    m.yy = y.squaredNorm();
    return m;
}

ExtendedSystem extend_system(const Mat& v, const Vec& y, const std::vector<Index>& column_nodes, const MeshGrid& mesh,
                             double gamma) {
    if (!(gamma >= 0.0)) throw Error("interior penalty must be nonnegative");
    if (static_cast<Index>(column_nodes.size()) != v.cols()) throw Error("extend_system: column map size mismatch");
    std::vector<Index> blocked;
    if (gamma > 0.0)
        for (std::size_t j = 0; j < column_nodes.size(); ++j)
            if (!mesh.illum_allowed[static_cast<std::size_t>(column_nodes[j])]) blocked.push_back(static_cast<Index>(j));

    ExtendedSystem out;
    const Index extra = static_cast<Index>(blocked.size());
    out.v = Mat::Zero(v.rows() + extra, v.cols());
    out.v.topRows(v.rows()) = v;
    out.y = Vec::Zero(y.size() + extra);
    out.y.head(y.size()) = y;
    const double scale = v.size() ? v.colwise().norm().maxCoeff() : 0.0;
    const double g = gamma * (scale > 0.0 ? scale : 1.0);
    for (Index e = 0; e < extra; ++e) out.v(v.rows() + e, blocked[static_cast<std::size_t>(e)]) = g;
    return out;
}

QuadraticModel extend_system(QuadraticModel model, const std::vector<Index>& column_nodes, const MeshGrid& mesh,
                             double gamma) {
    if (!(gamma >= 0.0)) throw Error("interior penalty must be nonnegative");
    if (static_cast<Index>(column_nodes.size()) != model.size()) throw Error("extend_system: column map size mismatch");
    const double scale_sq = model.size() ? model.gram.diagonal().maxCoeff() : 0.0;
    const double g2 = gamma * gamma * (scale_sq > 0.0 ? scale_sq : 1.0);
    for (std::size_t j = 0; j < column_nodes.size(); ++j)
        if (!mesh.illum_allowed[static_cast<std::size_t>(column_nodes[j])])
            model.gram(static_cast<Index>(j), static_cast<Index>(j)) += g2;
    return model;
}

}  // namespace illumopt
