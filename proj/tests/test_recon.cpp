#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <random>

#include "illumopt/recon.hpp"
#include "oracles.hpp"

using namespace illumopt;

namespace {

Mat gaussian(Index r, Index c, std::mt19937& rng) {
    std::normal_distribution<double> n;
    Mat a(r, c);
    for (Index i = 0; i < a.size(); ++i) a.data()[i] = n(rng);
    return a;
}

Vec sparse_truth(Index n, Index k, std::mt19937& rng) {
    Vec x = Vec::Zero(n);
    std::uniform_real_distribution<double> u(1.0, 2.0);
    std::vector<Index> idx(static_cast<std::size_t>(n));
    std::iota(idx.begin(), idx.end(), 0);
    std::shuffle(idx.begin(), idx.end(), rng);
    for (Index i = 0; i < k; ++i) x[idx[static_cast<std::size_t>(i)]] = u(rng);
    return x;
}

}  // namespace

TEST_CASE("soft threshold") {
    const Vec out = soft_threshold(Vec(Eigen::Vector3d(2, -0.5, 0)), 1.0);
    CHECK(out == Vec(Eigen::Vector3d(1, 0, 0)));
    std::mt19937 rng(1);
    const Vec x = gaussian(50, 1, rng);
    CHECK(soft_threshold(x, 0.0) == x);
    const Vec t = soft_threshold(x, 0.3);
    for (Index i = 0; i < x.size(); ++i) {
        const double ref = x[i] > 0.3 ? x[i] - 0.3 : (x[i] < -0.3 ? x[i] + 0.3 : 0.0);
        CHECK(t[i] == ref);
    }
    CHECK_THROWS_AS(soft_threshold(x, -1.0), Error);
}

TEST_CASE("elastic-net prox") {
    std::mt19937 rng(2);
    const Vec z = gaussian(20, 1, rng);
    CHECK(prox_elastic_net(z, 0.5, 0.4, 1.0) == soft_threshold(z, 0.2));
    CHECK((prox_elastic_net(z, 1.0, 1.0, 0.0) - z / 2).norm() < 1e-15);
    for (double alpha : {0.0, 0.3, 1.0}) {
        const Vec p = prox_elastic_net(z, 0.7, 0.9, alpha);
        for (Index i = 0; i < 5; ++i) CHECK(p[i] == doctest::Approx(oracle::prox_scalar(z[i], 0.7, 0.9, alpha)).epsilon(1e-8));
    }
    // Nonexpansive.
    for (int t = 0; t < 20; ++t) {
        const Vec a = gaussian(10, 1, rng), b = gaussian(10, 1, rng);
        CHECK((prox_elastic_net(a, 0.3, 2.0, 0.6) - prox_elastic_net(b, 0.3, 2.0, 0.6)).norm() <= (a - b).norm());
    }
}

TEST_CASE("Lipschitz constant") {
    CHECK(lipschitz_constant(DenseView(Mat::Identity(4, 4))) == doctest::Approx(1.0));
    Mat d = Mat::Zero(2, 2);
    d(0, 0) = 3;
    d(1, 1) = 1;
    CHECK(lipschitz_constant(DenseView(d)) == doctest::Approx(9.0));
    std::mt19937 rng(3);
    const Mat a = gaussian(20, 30, rng);
    CHECK(std::abs(lipschitz_constant(DenseView(a)) - oracle::largest_eig_ata(a)) < 1e-6 * oracle::largest_eig_ata(a));
    CHECK_THROWS_AS(lipschitz_constant(DenseView(Mat::Zero(3, 3))), Error);
}

TEST_CASE("FISTA: zero data and bad input") {
    const Mat a = Mat::Identity(3, 3);
    const auto img = fista(a, Vec::Zero(3), ReconConfig{});
    CHECK(img.c.norm() == 0.0);
    CHECK_THROWS_AS(fista(a, Vec::Zero(4), ReconConfig{}), Error);
    ReconConfig bad;
    bad.lambda = 0;
    CHECK_THROWS_AS(fista(a, Vec::Ones(3), bad), Error);
    bad = ReconConfig{};
    bad.alpha = 1.5;
    CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("FISTA matches the coordinate-descent oracle") {
    std::mt19937 rng(4);
    ReconConfig cfg;
    cfg.lambda = 0.1;
    cfg.tol = 1e-14;
    cfg.max_iters = 20000;
    for (int t = 0; t < 3; ++t) {
        const Mat a = gaussian(50, 100, rng);
        const Vec y = gaussian(50, 1, rng);
        const auto img = fista(a, y, cfg);
        const Vec ref = oracle::nonneg_lasso_cd(a, y, cfg.lambda);
        const double j_ref = 0.5 * (y - a * ref).squaredNorm() + cfg.lambda * ref.lpNorm<1>();
        CHECK(std::abs(img.objective - j_ref) <= 1e-6 * j_ref);
        CHECK(img.c.minCoeff() >= 0.0);
        CHECK(img.objective <= 0.5 * y.squaredNorm());
        // One-sided KKT conditions of the nonnegative lasso.
        const Vec g = a.transpose() * (y - a * img.c);
        for (Index j = 0; j < g.size(); ++j) {
            if (img.c[j] > 0)
                CHECK(std::abs(g[j] - cfg.lambda) <= 1e-4 * cfg.lambda + 1e-6);
            else
                CHECK(g[j] <= cfg.lambda * (1 + 1e-4) + 1e-6);
        }
    }
}

TEST_CASE("FISTA recovers a sparse nonnegative signal") {
    std::mt19937 rng(5);
    const Mat a = gaussian(60, 100, rng);
    const Vec truth = sparse_truth(100, 5, rng);
    ReconConfig cfg;
    cfg.lambda = 1e-6;
    cfg.tol = 1e-15;
    cfg.max_iters = 50000;
    const auto img = fista(a, a * truth, cfg);
    for (Index j = 0; j < 100; ++j) {
        CHECK((truth[j] > 0) == (img.c[j] > 1e-3));
        CHECK(std::abs(img.c[j] - truth[j]) < 1e-3);
    }
}

TEST_CASE("FISTA log and best iterate") {
    std::mt19937 rng(6);
    const Mat a = gaussian(30, 40, rng);
    const Vec y = gaussian(30, 1, rng);
    ReconConfig cfg;
    cfg.lambda = 0.05;
    cfg.max_iters = 300;
    cfg.tol = 0;
    const auto img = fista(a, y, cfg);
    CHECK(img.iterations == 300);
    REQUIRE(img.log.size() == 301);
    double best = img.log[0].objective;
    for (const auto& e : img.log) best = std::min(best, e.objective);
    CHECK(img.objective == best);
    CHECK(img.objective == doctest::Approx(objective(DenseView(a), y, img.c, cfg)));
}

TEST_CASE("elastic-net FISTA stays nonnegative and reports its objective") {
    std::mt19937 rng(7);
    const Mat a = gaussian(40, 30, rng);
    const Vec y = a * Vec::Ones(30);
    ReconConfig lasso, enet;
    lasso.lambda = enet.lambda = 1.0;
    enet.alpha = 0.5;
    lasso.tol = enet.tol = 1e-14;
    lasso.max_iters = enet.max_iters = 20000;
    const auto l = fista(a, y, lasso), e = fista(a, y, enet);
    CHECK(e.c.minCoeff() >= 0);
    CHECK(l.c.minCoeff() >= 0);
    CHECK(e.objective == doctest::Approx(objective(DenseView(a), y, e.c, enet)));
}
