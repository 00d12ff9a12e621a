#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <random>

#include "illumopt/design.hpp"
#include "illumopt/illum.hpp"
#include "oracles.hpp"

using namespace illumopt;

namespace {

Mat gaussian(Index r, Index c, std::mt19937& rng) {
    std::normal_distribution<double> n;
    Mat a(r, c);
    for (Index i = 0; i < a.size(); ++i) a.data()[i] = n(rng);
    return a;
}

double box_objective(const Mat& v, const Vec& y, double mu, const Vec& h, const Vec& x) {
    return 0.5 * (y - v * x).squaredNorm() + mu * h.cwiseProduct(x.cwiseAbs()).sum();
}

}  // namespace

TEST_CASE("laser grid and feasibility") {
    const MeshGrid m = make_mesh({15, 15, 15}, 1.0);
    const auto centred = laser_grid(m, 7.5, 7.5, 1.0, 10, 10, 1.0, 1.0);
    CHECK(centred.nnz() == 100);
    check_feasible(centred, m);
    for (Index i : centred.support()) CHECK(m.illum_allowed[i]);
    const auto corner = laser_grid(m, 4.5, 4.5, 1.0, 10, 10, 0.5, 1.0);
    CHECK(corner.nnz() == 100);
    CHECK(corner.power.maxCoeff() == 0.5);
    CHECK_THROWS_AS(laser_grid(m, 1.0, 7.5, 1.0, 10, 10, 1.0, 1.0), Error);
    CHECK_THROWS_AS(laser_grid(m, 7.5, 7.5, 0.2, 10, 10, 1.0, 1.0), Error);
    CHECK_THROWS_AS(laser_grid(m, 7.5, 7.5, 1.0, 10, 10, 2.0, 1.0), Error);

    IlluminationPattern bad = centred;
    bad.power[m.node_id(3, 3, 3)] = 0.5;
    CHECK_THROWS_AS(check_feasible(bad, m), Error);
    bad = centred;
    bad.power[centred.support()[0]] = 1.5;
    CHECK_THROWS_AS(check_feasible(bad, m), Error);
    bad.power[centred.support()[0]] = -0.1;
    CHECK_THROWS_AS(check_feasible(bad, m), Error);
}

TEST_CASE("split pattern") {
    IlluminationPattern p;
    p.power = Vec::Zero(10);
    p.power[2] = 0.3;
    p.power[5] = 1.0;
    p.power[9] = 0.7;
    const auto s = split_pattern(p);
    REQUIRE(s.size() == 3);
    Vec sum = Vec::Zero(10);
    for (const auto& src : s) sum[src.node] += src.power;
    CHECK(sum == p.power);
    CHECK(s[0].node == 2);
    CHECK(s[2].node == 9);

    IlluminationPattern one;
    one.power = Vec::Zero(4);
    one.power[1] = one.p_max;
    CHECK(split_pattern(one).size() == 1);
    one.power.setZero();
    CHECK_THROWS_AS(split_pattern(one), Error);
    one.max_lasers = 2;
    one.power << 1, 1, 1, 0;
    CHECK(one.exceeds_max_lasers());
}

TEST_CASE("CCD on an orthonormal design is the clamped soft threshold") {
    std::mt19937 rng(1);
    for (int t = 0; t < 10; ++t) {
        const Mat q = gaussian(40, 15, rng).householderQr().householderQ() * Mat::Identity(40, 15);
        const Vec y = 2.0 * gaussian(40, 1, rng);
        const double theta = 0.4;
        const Vec h = Vec::Ones(15);
        CcdOptions once;
        once.max_sweeps = 1;
        const Vec z = q.transpose() * y;
        Vec expected(15);
        for (Index j = 0; j < 15; ++j) expected[j] = std::clamp(std::max(z[j] - theta, 0.0), 0.0, 1.0);
        const auto a = ccd_solve(q, y, theta, h, 1.0, Vec::Zero(15), once);
        const auto b = reference::ccd_solve(q, y, theta, h, 1.0, Vec::Zero(15), once);
        CHECK((a.x - expected).cwiseAbs().maxCoeff() <= 1e-12);
        CHECK((b.x - expected).cwiseAbs().maxCoeff() <= 1e-12);
    }
}

TEST_CASE("CCD trivial and invalid input") {
    const Mat v = Mat::Identity(3, 3);
    const auto r = ccd_solve(v, Vec::Zero(3), 0.1, Vec::Ones(3), 1.0, Vec::Zero(3));
    CHECK(r.x.norm() == 0.0);
    CHECK_THROWS_AS(ccd_solve(v, Vec::Zero(3), 0.1, Vec::Ones(3), 1.0, Vec::Constant(3, 2.0)), Error);
    CHECK_THROWS_AS(ccd_solve(v, Vec::Zero(3), -0.1, Vec::Ones(3), 1.0, Vec::Zero(3)), Error);
    // A zero column stays at zero.
    Mat z = Mat::Identity(3, 3);
    z.col(1).setZero();
    const auto rz = ccd_solve(z, Vec::Ones(3), 0.0, Vec::Ones(3), 5.0, Vec::Zero(3));
    CHECK(rz.x[1] == 0.0);
    CHECK(rz.x[0] == doctest::Approx(1.0));
}

TEST_CASE("CCD reaches the projected-gradient optimum and decreases monotonically") {
    std::mt19937 rng(2);
    std::uniform_real_distribution<double> u(0.5, 2.0);
    for (int t = 0; t < 3; ++t) {
        const Mat v = gaussian(30, 60, rng);
        const Vec y = 3.0 * gaussian(30, 1, rng);
        Vec h(60);
        for (auto& w : h) w = u(rng);
        const double mu = 0.3, p = 1.5;
        CcdOptions opts;
        opts.max_sweeps = 20000;
        opts.tol = 1e-14;
        const auto r = ccd_solve(v, y, mu, h, p, Vec::Zero(60), opts);
        const Vec ref = oracle::box_lasso_pg(v, y, mu, h, p);
        const double jr = box_objective(v, y, mu, h, ref), jc = box_objective(v, y, mu, h, r.x);
        CHECK(std::abs(jc - jr) <= 1e-8 * jr);
        for (std::size_t s = 1; s < r.objective.size(); ++s) CHECK(r.objective[s] <= r.objective[s - 1] + 1e-12 * std::abs(r.objective[s - 1]));

        const auto rr = reference::ccd_solve(v, y, mu, h, p, Vec::Zero(60), opts);
        CHECK((rr.x - r.x).cwiseAbs().maxCoeff() < 1e-9);
    }
}

TEST_CASE("CCD respects the box under random restarts") {
    std::mt19937 rng(3);
    std::uniform_real_distribution<double> u(0, 1);
    const Mat v = gaussian(20, 30, rng);
    CcdOptions one;
    one.max_sweeps = 1;
    Vec x = Vec::Zero(30);
    for (int s = 0; s < 500; ++s) {
        const Vec y = 5.0 * gaussian(20, 1, rng);
        x = ccd_solve(v, y, u(rng), Vec::Ones(30), 0.7, x, one).x;
        CHECK(x.minCoeff() >= 0.0);
        CHECK(x.maxCoeff() <= 0.7);
    }
}

TEST_CASE("reweighted l1 edge cases") {
    std::mt19937 rng(4);
    const Mat v = gaussian(30, 50, rng);
    Vec truth = Vec::Zero(50);
    truth[3] = 0.8;
    truth[17] = 0.5;
    const QuadraticModel model = normal_equations(v, v * truth);

    ReweightConfig huge;
    huge.mu = 1e9;
    const auto z = reweighted_l1(model, huge, 1.0, Vec::Zero(50));
    CHECK(z.x.norm() == 0.0);
    CHECK(z.all_zero);

    // With a huge epsilon every later pass uses weights ~ 1/epsilon, i.e. plain l1 at mu / epsilon.
    const Mat tall = gaussian(60, 20, rng);
    Vec t2 = Vec::Zero(20);
    t2[4] = 0.9;
    t2[11] = 0.3;
    const QuadraticModel tall_model = normal_equations(tall, tall * t2 + 0.05 * gaussian(60, 1, rng));
    ReweightConfig flat;
    flat.mu = 0.5;
    flat.epsilon = 1e9;
    flat.sweeps = 20000;
    flat.tol = 1e-13;
    const auto rw = reweighted_l1(tall_model, flat, 1.0, Vec::Zero(20));
    CcdOptions opts;
    opts.max_sweeps = 20000;
    opts.tol = 1e-13;
    const auto plain = ccd_solve(tall_model, flat.mu / flat.epsilon, Vec::Ones(20), 1.0, Vec::Zero(20), opts);
    CHECK(rw.nnz_history.size() >= 2);
    CHECK((rw.x - plain.x).cwiseAbs().maxCoeff() < 1e-6);

    ReweightConfig bad;
    bad.epsilon = 0;
    CHECK_THROWS_AS(bad.validate(), Error);
    bad = ReweightConfig{};
    bad.mu = 0;
    CHECK_THROWS_AS(reweighted_l1(model, bad, 1.0, Vec::Zero(50)), Error);
}

TEST_CASE("reweighting prunes and does not grow the support on noiseless data") {
    std::mt19937 rng(5);
    std::uniform_real_distribution<double> u(0.3, 1.0);
    for (int t = 0; t < 5; ++t) {
        const Mat v = gaussian(40, 100, rng) / std::sqrt(40.0);
        Vec truth = Vec::Zero(100);
        std::vector<Index> idx(100);
        std::iota(idx.begin(), idx.end(), 0);
        std::shuffle(idx.begin(), idx.end(), rng);
        for (int k = 0; k < 5; ++k) truth[idx[k]] = u(rng);
        ReweightConfig cfg;
        cfg.mu = 0.01;
        cfg.epsilon = 0.01;
        cfg.sweeps = 5000;
        cfg.tol = 1e-10;
        const auto r = reweighted_l1(normal_equations(v, v * truth), cfg, 1.0, Vec::Zero(100));
        for (std::size_t k = 1; k < r.nnz_history.size(); ++k) CHECK(r.nnz_history[k] <= r.nnz_history[k - 1]);
        CHECK(r.x.minCoeff() >= 0.0);
        CHECK(r.x.maxCoeff() <= 1.0);
    }
}
