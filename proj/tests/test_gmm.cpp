#include <doctest.h>

#include <cmath>
#include <random>

#include "texfv/gmm.hpp"

using namespace texfv;

namespace {

DenseArray planted_two_cluster(std::size_t T, std::mt19937_64& rng) {
    std::normal_distribution<double> n01(0.0, 1.0);
    DenseArray rows({T, 2});
    for (std::size_t t = 0; t < T; ++t) {
        const bool second = t % 2 == 1;
        const double mx = second ? 4.0 : -4.0;
        const double my = second ? -2.0 : 2.0;
        const double sx = second ? 0.5 : 1.0;
        const double sy = second ? 1.5 : 0.7;
        rows.at(t, 0) = static_cast<float>(mx + sx * n01(rng));
        rows.at(t, 1) = static_cast<float>(my + sy * n01(rng));
    }
    return rows;
}

}  // namespace

TEST_CASE("single-gaussian fit recovers sample moments") {
    std::mt19937_64 rng(21);
    std::normal_distribution<double> noise(0.0, 1.0);
    const std::size_t T = 2000;
    DenseArray rows({T, 3});
    const double mu[3] = {1.0, -2.0, 0.5};
    const double sd[3] = {0.8, 1.2, 2.0};
    for (std::size_t t = 0; t < T; ++t)
        for (std::size_t d = 0; d < 3; ++d)
            rows.at(t, d) = static_cast<float>(mu[d] + sd[d] * noise(rng));

    EmConfig cfg;
    cfg.K = 1;
    cfg.rng_seed = 1;
    auto res = fit_em(rows, cfg);
    CHECK(res.gmm.weights[0] == doctest::Approx(1.0).epsilon(1e-12));
    // With K=1 the EM fixed point is the sample mean / biased variance.
    for (std::size_t d = 0; d < 3; ++d) {
        double m = 0.0;
        for (std::size_t t = 0; t < T; ++t) m += rows.at(t, d);
        m /= T;
        double v = 0.0;
        for (std::size_t t = 0; t < T; ++t) {
            const double diff = rows.at(t, d) - m;
            v += diff * diff;
        }
        v /= T;
        CHECK(res.gmm.means.at(0, d) == doctest::Approx(m).epsilon(1e-4));
        CHECK(res.gmm.variances.at(0, d) == doctest::Approx(v).epsilon(1e-3));
    }
}

TEST_CASE("log-likelihood is non-decreasing across iterations") {
    std::mt19937_64 rng(22);
    std::uniform_real_distribution<float> dist(-3.0f, 3.0f);
    for (int trial = 0; trial < 10; ++trial) {
        DenseArray rows({120, 4});
        for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = dist(rng);
        EmConfig cfg;
        cfg.K = 5;
        cfg.rng_seed = static_cast<std::uint64_t>(trial);
        auto res = fit_em(rows, cfg);
        REQUIRE(res.loglik_history.size() >= 1);
        for (std::size_t i = 1; i < res.loglik_history.size(); ++i)
            CHECK(res.loglik_history[i] >= res.loglik_history[i - 1] - 1e-9);
    }
}

TEST_CASE("EM recovers a planted two-component mixture") {
    std::mt19937_64 rng(23);
    DenseArray rows = planted_two_cluster(4000, rng);
    EmConfig cfg;
    cfg.K = 2;
    cfg.rng_seed = 3;
    auto res = fit_em(rows, cfg);
    // Match components to planted means by the sign of the first coordinate.
    std::size_t lo = res.gmm.means.at(0, 0) < res.gmm.means.at(1, 0) ? 0u : 1u;
    std::size_t hi = 1u - lo;
    CHECK(res.gmm.means.at(lo, 0) == doctest::Approx(-4.0).epsilon(0.1));
    CHECK(res.gmm.means.at(lo, 1) == doctest::Approx(2.0).epsilon(0.1));
    CHECK(res.gmm.means.at(hi, 0) == doctest::Approx(4.0).epsilon(0.1));
    CHECK(res.gmm.means.at(hi, 1) == doctest::Approx(-2.0).epsilon(0.1));
    CHECK(res.gmm.weights[0] == doctest::Approx(0.5).epsilon(0.1));
    double wsum = res.gmm.weights[0] + res.gmm.weights[1];
    CHECK(std::abs(wsum - 1.0) < 1e-9);
}

TEST_CASE("responsibilities sum to one and respect proximity") {
    std::mt19937_64 rng(24);
    DenseArray rows = planted_two_cluster(600, rng);
    EmConfig cfg;
    cfg.K = 2;
    cfg.rng_seed = 7;
    auto res = fit_em(rows, cfg);
    std::uniform_real_distribution<float> dist(-5.0f, 5.0f);
    for (int trial = 0; trial < 50; ++trial) {
        float x[2] = {dist(rng), dist(rng)};
        auto gamma = responsibilities(res.gmm, x);
        REQUIRE(gamma.size() == 2);
        CHECK(gamma[0] >= 0.0);
        CHECK(gamma[1] >= 0.0);
        CHECK(gamma[0] + gamma[1] == doctest::Approx(1.0).epsilon(1e-12));
    }
    std::size_t lo = res.gmm.means.at(0, 0) < res.gmm.means.at(1, 0) ? 0u : 1u;
    float left[2] = {-4.0f, 2.0f};
    auto g = responsibilities(res.gmm, left);
    CHECK(g[lo] > 0.99);
}

TEST_CASE("variance floor is enforced") {
    // Duplicate points give zero within-cluster variance without the floor.
    DenseArray rows({8, 1});
    for (std::size_t t = 0; t < 8; ++t) rows.at(t, 0) = t < 4 ? 0.0f : 10.0f;
    EmConfig cfg;
    cfg.K = 2;
    cfg.variance_floor = 1e-4;
    cfg.rng_seed = 5;
    auto res = fit_em(rows, cfg);
    for (std::size_t k = 0; k < 2; ++k)
        CHECK(res.gmm.variances.at(k, 0) >= 1e-4f);
}

TEST_CASE("fit_em validates inputs") {
    DenseArray rows({3, 2});
    EmConfig cfg;
    cfg.K = 5;  // more components than points
    CHECK_THROWS_AS(fit_em(rows, cfg), ValidationError);
    EmConfig zero;
    zero.K = 0;
    CHECK_THROWS_AS(fit_em(rows, zero), ValidationError);
}

TEST_CASE("fit_em is deterministic for a fixed seed") {
    std::mt19937_64 rng(26);
    DenseArray rows = planted_two_cluster(300, rng);
    EmConfig cfg;
    cfg.K = 3;
    cfg.rng_seed = 11;
    auto a = fit_em(rows, cfg);
    auto b = fit_em(rows, cfg);
    REQUIRE(a.gmm.means.size() == b.gmm.means.size());
    for (std::size_t i = 0; i < a.gmm.means.size(); ++i)
        CHECK(a.gmm.means[i] == b.gmm.means[i]);
    for (std::size_t k = 0; k < 3; ++k) CHECK(a.gmm.weights[k] == b.gmm.weights[k]);
}

TEST_CASE("log_likelihood matches a scalar-gaussian hand computation") {
    GaussianMixture gmm;
    gmm.K = 1;
    gmm.D = 1;
    gmm.weights = {1.0};
    gmm.means = DenseArray({1, 1}, {0.0f});
    gmm.variances = DenseArray({1, 1}, {1.0f});
    DenseArray rows({2, 1}, {0.0f, 1.0f});
    const double expected = 2.0 * (-0.5 * std::log(2.0 * M_PI)) - 0.5;
    CHECK(log_likelihood(gmm, rows) == doctest::Approx(expected).epsilon(1e-9));
}
