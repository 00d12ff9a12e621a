#include <doctest.h>

#include <random>

#include "illumopt/fem.hpp"
#include "illumopt/illum.hpp"
#include "illumopt/jacobian.hpp"

using namespace illumopt;

namespace {

struct Setup {
    MeshGrid mesh;
    SystemMatrix s;
    TransportMatrix gamma;
    Mat phi_e;
    Vec c;

    Setup(double size, unsigned seed) {
        mesh = make_mesh({size, size, size}, 1.0);
        s = assemble_system(mesh, homogeneous_medium(mesh.num_nodes(), 0.01, 1.0));
        gamma = build_gamma(mesh, centered_detector(mesh, 14, 16, 1.0, 6.0));
        std::mt19937 rng(seed);
        std::uniform_real_distribution<double> u(0, 1);
        c = Vec::Zero(mesh.num_nodes());
        for (Index i = 0; i < c.size(); ++i)
            if (u(rng) < 0.1) c[i] = 100 * u(rng);
        const auto pattern = laser_grid(mesh, 0.5 * size, 0.5 * size, 1.0, 2, 3, 1.0, 1.0);
        phi_e = s.solve(source_loads(mesh.num_nodes(), split_pattern(pattern), 1.0));
    }
};

// Straight from the row definition with a dense inverse.
Mat oracle_W(const Setup& st, const MeasurementSet& meas, double eta) {
    const Mat sinv = Mat(st.s.matrix()).inverse();
    const Mat gam(st.gamma.gamma);
    Mat w(meas.num_unmasked(), st.mesh.num_nodes());
    Index r = 0;
    for (Index l = 0; l < meas.num_lasers(); ++l)
        for (Index k = 0; k < meas.num_pixels(); ++k) {
            if (meas.masked(l, k)) continue;
            const Vec g = sinv * gam.row(k).transpose();
            const double d = gam.row(k).dot(st.phi_e.col(l));
            w.row(r++) = (eta * g.cwiseProduct(st.phi_e.col(l)) / d).transpose();
        }
    return w;
}

}  // namespace

TEST_CASE("adjoint detector fields solve against Gamma") {
    Setup st(4.0, 1);
    const Mat g = adjoint_detector_fields(st.s, st.gamma);
    const Mat gam(st.gamma.gamma);
    const Mat dense = Mat(st.s.matrix()).inverse() * gam.transpose();
    CHECK((g - dense).norm() <= 1e-10 * dense.norm());
    for (Index k = 0; k < gam.rows(); ++k)
        if (gam.row(k).norm() == 0) CHECK(g.col(k).norm() == 0.0);
    CHECK((st.s.matrix() * g - gam.transpose()).norm() <= 1e-8 * gam.norm());
}

TEST_CASE("W matches the row-definition oracle, dense and matrix-free") {
    Setup st(4.0, 2);
    const auto meas = born_measurements(st.gamma, st.phi_e, st.s.solve(emission_sources(st.c, st.phi_e, 1.0)));
    const Mat ref = oracle_W(st, meas, 1.0);
    const auto w = assemble_W(adjoint_detector_fields(st.s, st.gamma), st.phi_e, st.gamma, 1.0);
    CHECK(w.rows == unmasked_rows(meas));
    CHECK((w.w - ref).norm() <= 1e-10 * ref.norm());
    CHECK(w.w.minCoeff() >= 0.0);

    const SensitivityOperator op(green_rows(st.s, st.gamma.nodes), st.gamma, st.phi_e, meas, 1.0);
    CHECK(op.row_index() == w.rows);
    CHECK((op.dense() - ref).norm() <= 1e-10 * ref.norm());
}

TEST_CASE("adjoint identity: W C reproduces the forward Born ratios") {
    for (double size : {5.0, 10.0}) {
        for (unsigned seed : {3u, 4u, 5u}) {
            Setup st(size, seed);
            const auto meas = born_measurements(st.gamma, st.phi_e, st.s.solve(emission_sources(st.c, st.phi_e, 1.0)));
            const auto rows = unmasked_rows(meas);
            const Vec y = measurement_vector(meas, rows);
            const SensitivityOperator op(green_rows(st.s, st.gamma.nodes), st.gamma, st.phi_e, meas, 1.0);
            Vec wc;
            op.apply(st.c, wc);
            for (Index r = 0; r < y.size(); ++r) CHECK(std::abs(wc[r] - y[r]) <= 1e-10 * std::abs(y[r]));
        }
    }
}

TEST_CASE("W is linear in eta and vanishes on zero fluorescence") {
    Setup st(4.0, 6);
    const Mat g = adjoint_detector_fields(st.s, st.gamma);
    const auto w1 = assemble_W(g, st.phi_e, st.gamma, 1.0);
    const auto w2 = assemble_W(g, st.phi_e, st.gamma, 2.0);
    CHECK(w2.w == 2.0 * w1.w);
    CHECK((w1.w * Vec::Zero(st.mesh.num_nodes())).norm() == 0.0);
}

TEST_CASE("matrix-free adjoint is the transpose") {
    Setup st(5.0, 7);
    const auto meas = born_measurements(st.gamma, st.phi_e, st.s.solve(emission_sources(st.c, st.phi_e, 1.0)));
    const SensitivityOperator op(green_rows(st.s, st.gamma.nodes), st.gamma, st.phi_e, meas, 0.8);
    std::mt19937 rng(1);
    std::normal_distribution<double> n;
    for (int trial = 0; trial < 3; ++trial) {
        Vec x(op.cols()), y(op.rows());
        for (auto& v : x) v = n(rng);
        for (auto& v : y) v = n(rng);
        // Sparse input exercises the gather path.
        Vec xs = Vec::Zero(op.cols());
        for (Index i = 0; i < xs.size(); i += 17) xs[i] = x[i];
        Vec wx, wxs, wty;
        op.apply(x, wx);
        op.apply(xs, wxs);
        op.apply_adjoint(y, wty);
        CHECK(wx.dot(y) == doctest::Approx(x.dot(wty)).epsilon(1e-12));
        const Mat d = op.dense();
        CHECK((wxs - d * xs).norm() <= 1e-12 * (d * xs).norm());
    }
}

TEST_CASE("masked rows are dropped consistently") {
    Setup st(4.0, 8);
    const auto meas = born_measurements(st.gamma, st.phi_e, st.s.solve(emission_sources(st.c, st.phi_e, 1.0)), 0.05);
    const auto rows = unmasked_rows(meas);
    CHECK(static_cast<Index>(rows.size()) == meas.num_unmasked());
    CHECK(meas.num_unmasked() < meas.y.size());
    const auto w = assemble_W(adjoint_detector_fields(st.s, st.gamma), st.phi_e, st.gamma, 1.0, 0.05);
    CHECK(w.rows == rows);
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const bool ordered = rows[r - 1].laser < rows[r].laser ||
                             (rows[r - 1].laser == rows[r].laser && rows[r - 1].pixel < rows[r].pixel);
        CHECK(ordered);
    }
}
