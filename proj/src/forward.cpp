#include "illumopt/forward.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include <fmt/format.h>

namespace illumopt {

std::vector<Point3> DetectorPlane::pixel_centers(double top_z) const {
    std::vector<Point3> out;
    out.reserve(static_cast<std::size_t>(num_pixels()));
    const double z = top_z + height;
    for (Index r = 0; r < rows; ++r)
        for (Index c = 0; c < cols; ++c)
            out.emplace_back(center_x + (static_cast<double>(c) + 0.5 - 0.5 * static_cast<double>(cols)) * pitch,
                             center_y + (static_cast<double>(r) + 0.5 - 0.5 * static_cast<double>(rows)) * pitch, z);
    return out;
}

DetectorPlane centered_detector(const MeshGrid& mesh, Index rows, Index cols, double pitch, double height) {
    DetectorPlane det;
    det.rows = rows;
    det.cols = cols;
    det.pitch = pitch;
    det.height = height;
    det.center_x = 0.5 * mesh.dims[0];
    det.center_y = 0.5 * mesh.dims[1];
    return det;
}

Vec top_area_shares(const MeshGrid& mesh) {
    Vec a = Vec::Zero(mesh.num_nodes());
    for (const auto& tri : mesh.surface_tris) {
        if (tri.face != Face::Top) continue;
        const auto& p = tri.nodes;
        const double third = triangle_area(mesh.nodes[p[0]], mesh.nodes[p[1]], mesh.nodes[p[2]]) / 3.0;
        for (Index v : p) a[v] += third;
    }
    return a;
}

TransportMatrix build_gamma(const MeshGrid& mesh, const DetectorPlane& det) {
    if (det.rows <= 0 || det.cols <= 0) throw Error("detector must have at least one pixel");
    if (!(det.pitch > 0.0)) throw Error("detector pitch must be positive");
    if (!(det.height > 0.0)) throw Error("detector plane must lie strictly above the top face");
    if (!(det.acceptance_deg > 0.0 && det.acceptance_deg <= 90.0))
        throw Error("detector acceptance half-angle must be in (0, 90] degrees");

    const Vec area = top_area_shares(mesh);
    kernels::GammaInputs in;
    std::vector<Index> top;
    for (Index i = 0; i < mesh.num_nodes(); ++i) {
        if (area[i] > 0.0) {
            top.push_back(i);
            in.nodes.push_back(mesh.nodes[i]);
            in.areas.push_back(area[i]);
        }
    }
    in.pixels = det.pixel_centers(mesh.dims[2]);
    in.cos_min = std::cos(det.acceptance_deg * std::numbers::pi / 180.0);

    Mat dense;
    kernels::omp::gamma_dense(in, dense);

    TransportMatrix out;
    std::vector<Eigen::Triplet<double>> trip;
    std::vector<bool> used(top.size(), false);
    for (Index k = 0; k < dense.rows(); ++k) {
        bool any = false;
        for (Index t = 0; t < dense.cols(); ++t) {
            if (dense(k, t) != 0.0) {
                trip.emplace_back(k, top[t], dense(k, t));
                used[t] = true;
                any = true;
            }
        }
        if (!any) ++out.zero_rows;
    }
    out.gamma.resize(dense.rows(), mesh.num_nodes());
    out.gamma.setFromTriplets(trip.begin(), trip.end());
    out.gamma.makeCompressed();
    for (std::size_t t = 0; t < top.size(); ++t)
        if (used[t]) out.nodes.push_back(top[t]);
    return out;
}

Mat source_loads(Index num_nodes, const std::vector<LaserSource>& sources, double zeta) {
    if (!(zeta > 0.0)) throw Error("zeta must be positive");
    Mat q = Mat::Zero(num_nodes, static_cast<Index>(sources.size()));
    for (std::size_t l = 0; l < sources.size(); ++l) {
        const auto& s = sources[l];
        if (s.node < 0 || s.node >= num_nodes) throw Error(fmt::format("laser node {} out of range", s.node));
        if (!(s.power >= 0.0)) throw Error(fmt::format("laser power {} must be nonnegative", s.power));
        q(s.node, static_cast<Index>(l)) = s.power / (2.0 * zeta);
    }
    return q;
}

Mat excitation_fields(const SystemMatrix& s_e, const Mat& loads) {
    return s_e.solve(loads);
}

Vec emission_source(const Vec& c, const Vec& phi_e, double eta) {
    if (c.size() != phi_e.size()) throw Error("fluorescence and field lengths differ");
    if ((c.array() < 0.0).any()) throw Error("fluorescence distribution has negative entries");
    return eta * c.cwiseProduct(phi_e);
}

Mat emission_sources(const Vec& c, const Mat& phi_e, double eta) {
    if (c.size() != phi_e.rows()) throw Error("fluorescence and field lengths differ");
    if ((c.array() < 0.0).any()) throw Error("fluorescence distribution has negative entries");
    return eta * (phi_e.array().colwise() * c.array()).matrix();
}

Index MeasurementSet::num_unmasked() const {
    return static_cast<Index>((!masked).count());
}

MeasurementSet born_measurements(const TransportMatrix& gamma, const Mat& phi_e, const Mat& phi_f, double floor_rel) {
    if (phi_e.rows() != gamma.gamma.cols() || phi_f.rows() != gamma.gamma.cols() || phi_e.cols() != phi_f.cols())
        throw Error("field shapes do not match the transport matrix");

    MeasurementSet meas;
    meas.p_e = (gamma.gamma * phi_e).transpose();
    meas.p_f = (gamma.gamma * phi_f).transpose();
    const double pmax = meas.p_e.size() > 0 ? meas.p_e.maxCoeff() : 0.0;
    meas.floor = floor_rel * pmax;
    kernels::omp::born_ratio(meas.p_f, meas.p_e, meas.floor, meas.y, meas.masked);
    if (meas.num_unmasked() == 0)
        throw Error("every measurement is masked: no pixel receives excitation light (check detector geometry)");
    return meas;
}

MeasurementSet add_noise(MeasurementSet meas, const NoiseModel& model, std::uint64_t seed) {
    meas.noise_seed = seed;
    if (model.kind == NoiseModel::Kind::None) return meas;
    if (!(model.sigma_rel >= 0.0)) throw Error("noise sigma_rel must be nonnegative");
    if (model.sigma_rel == 0.0) return meas;

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (Index l = 0; l < meas.y.rows(); ++l)
        for (Index k = 0; k < meas.y.cols(); ++k)
            if (!meas.masked(l, k)) meas.y(l, k) *= 1.0 + model.sigma_rel * normal(rng);
    return meas;
}

MeasurementSet simulate_measurements(const SystemMatrix& s_e, const SystemMatrix& s_f, const TransportMatrix& gamma,
                                     const Vec& c, const Mat& loads, double eta, double floor_rel) {
    const Mat phi_e = excitation_fields(s_e, loads);
    const Mat phi_f = s_f.solve(emission_sources(c, phi_e, eta));
    return born_measurements(gamma, phi_e, phi_f, floor_rel);
}

}  // namespace illumopt
