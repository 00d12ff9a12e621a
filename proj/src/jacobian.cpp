#include "illumopt/jacobian.hpp"

#include <algorithm>
#include <unordered_map>

#include <fmt/format.h>

#include "illumopt/kernels.hpp"

namespace illumopt {

void DenseView::apply(const Vec& x, Vec& y) const {
    kernels::omp::gemv(*a_, x, y);
}

void DenseView::apply_adjoint(const Vec& y, Vec& x) const {
    kernels::omp::gemv_t(*a_, y, x);
}

std::vector<MeasIndex> unmasked_rows(const MeasurementSet& meas) {
    std::vector<MeasIndex> rows;
    rows.reserve(static_cast<std::size_t>(meas.num_unmasked()));
    for (Index l = 0; l < meas.masked.rows(); ++l)
        for (Index k = 0; k < meas.masked.cols(); ++k)
            if (!meas.masked(l, k)) rows.push_back({l, k});
    return rows;
}

Vec measurement_vector(const MeasurementSet& meas, const std::vector<MeasIndex>& rows) {
    Vec y(static_cast<Index>(rows.size()));
    for (std::size_t r = 0; r < rows.size(); ++r) y[static_cast<Index>(r)] = meas.y(rows[r].laser, rows[r].pixel);
    return y;
}

Mat adjoint_detector_fields(const SystemMatrix& s_f, const TransportMatrix& gamma) {
    const Mat rhs = Mat(gamma.gamma.transpose());
    return s_f.solve(rhs);
}

SensitivityMatrix assemble_W(const Mat& g, const Mat& phi_e, const TransportMatrix& gamma, double eta,
                             double floor_rel) {
    const Index n = phi_e.rows();
    if (g.rows() != n || g.cols() != gamma.gamma.rows() || gamma.gamma.cols() != n)
        throw Error("assemble_W: inconsistent shapes");

    const Mat d = Mat(gamma.gamma * phi_e);  // M x L
    const double floor = floor_rel * (d.size() > 0 ? d.maxCoeff() : 0.0);

    SensitivityMatrix out;
    for (Index l = 0; l < phi_e.cols(); ++l)
        for (Index k = 0; k < d.rows(); ++k)
            if (d(k, l) > floor) out.rows.push_back({l, k});

    out.w.resize(static_cast<Index>(out.rows.size()), n);
    for (std::size_t r = 0; r < out.rows.size(); ++r) {
        const auto [l, k] = out.rows[r];
        out.w.row(static_cast<Index>(r)) = (eta / d(k, l)) * g.col(k).cwiseProduct(phi_e.col(l)).transpose();
    }
    return out;
}

GreenRows green_rows(const SystemMatrix& s, std::vector<Index> nodes) {
    Mat e = Mat::Zero(s.size(), static_cast<Index>(nodes.size()));
    for (std::size_t t = 0; t < nodes.size(); ++t) {
        if (nodes[t] < 0 || nodes[t] >= s.size()) throw Error(fmt::format("node {} out of range", nodes[t]));
        e(nodes[t], static_cast<Index>(t)) = 1.0;
    }
    GreenRows out;
    out.rows = s.solve(e).transpose();
    out.nodes = std::move(nodes);
    return out;
}

ReducedTransport reduce_transport(const TransportMatrix& gamma, const std::vector<Index>& nodes) {
    std::unordered_map<Index, Index> slot;
    for (std::size_t t = 0; t < nodes.size(); ++t) slot.emplace(nodes[t], static_cast<Index>(t));

    ReducedTransport out;
    const auto& gm = gamma.gamma;
    for (Index k = 0; k < gm.outerSize(); ++k)
        if (gm.outerIndexPtr()[k + 1] > gm.outerIndexPtr()[k]) out.pixels.push_back(k);

    out.gamma = Mat::Zero(static_cast<Index>(out.pixels.size()), static_cast<Index>(nodes.size()));
    for (std::size_t a = 0; a < out.pixels.size(); ++a) {
        for (SpMatRow::InnerIterator it(gm, out.pixels[a]); it; ++it) {
            auto found = slot.find(it.col());
            if (found == slot.end())
                throw Error(fmt::format("transport matrix references node {} outside the Green-row set", it.col()));
            out.gamma(static_cast<Index>(a), found->second) = it.value();
        }
    }
    return out;
}

SensitivityOperator::SensitivityOperator(const GreenRows& green_f, const TransportMatrix& gamma, const Mat& phi_e,
                                         const MeasurementSet& meas, double eta)
    : z_(green_f.rows), transport_(reduce_transport(gamma, green_f.nodes)), phi_(phi_e) {
    if (z_.cols() != phi_.rows()) throw Error("Green rows and fields disagree on node count");
    if (meas.num_lasers() != phi_.cols() || meas.num_pixels() != gamma.gamma.rows())
        throw Error("measurement set does not match fields and detector");

    const Index na = static_cast<Index>(transport_.pixels.size());
    // d = Gamma_v Z Phi restricted to the nodes Gamma sees, i.e. Gamma Phi.
    Mat phi_v(static_cast<Index>(green_f.nodes.size()), phi_.cols());
    for (std::size_t t = 0; t < green_f.nodes.size(); ++t) phi_v.row(static_cast<Index>(t)) = phi_.row(green_f.nodes[t]);
    const Mat d = transport_.gamma * phi_v;

    std::vector<Index> slot_of_pixel(static_cast<std::size_t>(gamma.gamma.rows()), -1);
    for (Index a = 0; a < na; ++a) slot_of_pixel[static_cast<std::size_t>(transport_.pixels[a])] = a;

    scale_ = Mat::Zero(na, phi_.cols());
    for (Index l = 0; l < meas.num_lasers(); ++l) {
        for (Index k = 0; k < meas.num_pixels(); ++k) {
            if (meas.masked(l, k)) continue;
            const Index a = slot_of_pixel[static_cast<std::size_t>(k)];
            if (a < 0 || !(d(a, l) > 0.0))
                throw Error(fmt::format("unmasked measurement (l={}, k={}) has no excitation signal", l, k));
            scale_(a, l) = eta / d(a, l);
            rows_.push_back({l, k});
            slots_.emplace_back(a, l);
        }
    }
}

void SensitivityOperator::apply(const Vec& x, Vec& y) const {
    // Fluorophore estimates are sparse; only the nonzero columns of Z contribute.
    std::vector<Index> nz;
    for (Index i = 0; i < x.size(); ++i)
        if (x[i] != 0.0) nz.push_back(i);

    Mat u;
    if (static_cast<Index>(nz.size()) * 2 < x.size()) {
        Mat zs(z_.rows(), static_cast<Index>(nz.size()));
        Mat xs(static_cast<Index>(nz.size()), phi_.cols());
        for (std::size_t c = 0; c < nz.size(); ++c) {
            zs.col(static_cast<Index>(c)) = z_.col(nz[c]);
            xs.row(static_cast<Index>(c)) = x[nz[c]] * phi_.row(nz[c]);
        }
        u.noalias() = zs * xs;
    } else {
        u.noalias() = z_ * (phi_.array().colwise() * x.array()).matrix();
    }
    const Mat p = (transport_.gamma * u).cwiseProduct(scale_);
    y.resize(rows());
    for (std::size_t r = 0; r < slots_.size(); ++r) y[static_cast<Index>(r)] = p(slots_[r].first, slots_[r].second);
}

void SensitivityOperator::apply_adjoint(const Vec& y, Vec& x) const {
    Mat r = Mat::Zero(scale_.rows(), scale_.cols());
    for (std::size_t i = 0; i < slots_.size(); ++i) {
        const auto [a, l] = slots_[i];
        r(a, l) = y[static_cast<Index>(i)] * scale_(a, l);
    }
    const Mat b = transport_.gamma.transpose() * r;  // T x L
    Mat e;
    e.noalias() = z_.transpose() * b;                // N x L
    x = e.cwiseProduct(phi_).rowwise().sum();
}

Mat SensitivityOperator::dense() const {
    // Row (l,k) = scale * (Gamma_v Z)_k .* Phi_l
    const Mat gt = transport_.gamma * z_;  // active pixels x N
    Mat w(rows(), cols());
    for (std::size_t r = 0; r < slots_.size(); ++r) {
        const auto [a, l] = slots_[r];
        w.row(static_cast<Index>(r)) = scale_(a, l) * gt.row(a).cwiseProduct(phi_.col(l).transpose());
    }
    return w;
}

}  // namespace illumopt
