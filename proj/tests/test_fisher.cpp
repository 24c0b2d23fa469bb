#include <doctest.h>

#include <cmath>
#include <random>

#include "texfv/fisher.hpp"

using namespace texfv;

namespace {

GaussianMixture unit_gmm(std::size_t K, std::size_t D, std::mt19937_64& rng) {
    std::uniform_real_distribution<float> mdist(-2.0f, 2.0f);
    std::uniform_real_distribution<float> vdist(0.3f, 2.0f);
    std::uniform_real_distribution<double> wdist(0.2, 1.0);
    GaussianMixture g;
    g.K = K;
    g.D = D;
    g.means = DenseArray({K, D});
    g.variances = DenseArray({K, D});
    g.weights.resize(K);
    double wsum = 0.0;
    for (std::size_t k = 0; k < K; ++k) {
        g.weights[k] = wdist(rng);
        wsum += g.weights[k];
        for (std::size_t d = 0; d < D; ++d) {
            g.means.at(k, d) = mdist(rng);
            g.variances.at(k, d) = vdist(rng);
        }
    }
    for (auto& w : g.weights) w /= wsum;
    return g;
}

}  // namespace

TEST_CASE("encoding length is K*(2D+1)") {
    std::mt19937_64 rng(31);
    for (auto [K, D] : {std::pair<std::size_t, std::size_t>{1, 1}, {2, 3}, {16, 8}, {5, 64}}) {
        GaussianMixture g = unit_gmm(K, D, rng);
        DenseArray rows({4, D});
        std::uniform_real_distribution<float> dist(-1.0f, 1.0f);
        for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = dist(rng);
        FisherVector fv = encode(g, rows);
        CHECK(fv.values.size() == K * (2 * D + 1));
        CHECK(fv.length() == fv.values.size());
    }
}

TEST_CASE("single-component encoding matches closed forms") {
    // With K=1 every responsibility is 1 and the weight block vanishes;
    // the mean block is the standardized sample mean, the variance block
    // the standardized second moment minus one (over sqrt(2)).
    std::mt19937_64 rng(32);
    std::uniform_real_distribution<float> dist(-2.0f, 2.0f);
    const std::size_t D = 3, T = 17;
    GaussianMixture g = unit_gmm(1, D, rng);
    DenseArray rows({T, D});
    for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = dist(rng);

    FisherVector fv = encode(g, rows);
    CHECK(std::abs(fv.values[0]) < 1e-6);
    for (std::size_t d = 0; d < D; ++d) {
        const double sigma = std::sqrt(static_cast<double>(g.variances.at(0, d)));
        double mu_acc = 0.0, var_acc = 0.0;
        for (std::size_t t = 0; t < T; ++t) {
            const double z = (rows.at(t, d) - g.means.at(0, d)) / sigma;
            mu_acc += z;
            var_acc += z * z - 1.0;
        }
        CHECK(fv.values[1 + d] == doctest::Approx(mu_acc / T).epsilon(1e-5));
        CHECK(fv.values[1 + D + d] ==
              doctest::Approx(var_acc / (T * std::sqrt(2.0))).epsilon(1e-5));
    }
}

TEST_CASE("descriptors exactly at the means give zero mean-block entries") {
    std::mt19937_64 rng(33);
    GaussianMixture g = unit_gmm(2, 2, rng);
    DenseArray rows({2, 2});
    for (std::size_t k = 0; k < 2; ++k)
        for (std::size_t d = 0; d < 2; ++d) rows.at(k, d) = g.means.at(k, d);
    FisherVector fv = encode(g, rows);
    // A point at one mean can still carry responsibility mass for the other
    // component, but the expected weight-block sum over components is zero.
    double wsum = 0.0;
    for (std::size_t k = 0; k < 2; ++k) wsum += fv.values[k] * std::sqrt(g.weights[k]);
    CHECK(std::abs(wsum) < 1e-6);
}

TEST_CASE("power normalization is a signed square root") {
    std::vector<float> v = {4.0f, -9.0f, 0.0f, 0.25f};
    auto p = power_normalize(v);
    CHECK(p[0] == doctest::Approx(2.0f));
    CHECK(p[1] == doctest::Approx(-3.0f));
    CHECK(p[2] == 0.0f);
    CHECK(p[3] == doctest::Approx(0.5f));
}

TEST_CASE("power then L2 normalization yields unit vectors") {
    std::mt19937_64 rng(34);
    std::uniform_real_distribution<double> dist(-5.0, 5.0);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<double> v(37);
        for (auto& x : v) x = dist(rng);
        auto n = l2_normalize(power_normalize(v));
        double norm = 0.0;
        for (double x : n) norm += x * x;
        CHECK(std::abs(std::sqrt(norm) - 1.0) < 1e-10);

        // Single-precision path is unit within float rounding.
        std::vector<float> vf(v.begin(), v.end());
        auto nf = l2_normalize(power_normalize(vf));
        double normf = 0.0;
        for (float x : nf) normf += static_cast<double>(x) * x;
        CHECK(std::abs(std::sqrt(normf) - 1.0) < 1e-6);
    }
}

TEST_CASE("zero vectors pass through both normalizations unchanged") {
    std::vector<float> z(12, 0.0f);
    auto p = power_normalize(z);
    auto n = l2_normalize(p);
    for (float x : n) CHECK(x == 0.0f);
}

TEST_CASE("variant parsing") {
    CHECK(variant_from_string("fv") == Variant::FV);
    CHECK(variant_from_string("fvfc") == Variant::FV_FC);
    CHECK(variant_from_string("FV+FC") == Variant::FV_FC);
    CHECK(variant_from_string("fvae") == Variant::FVAE);
    CHECK(variant_from_string("fcfvae") == Variant::FCFVAE);
    CHECK_THROWS_AS(variant_from_string("nope"), ConfigError);
}

TEST_CASE("fuse concatenates [FV, FC, SSL] and L2-normalizes the extras") {
    FisherVector fv;
    fv.K = 1;
    fv.D = 1;
    fv.values = {0.6f, 0.8f, 0.0f};  // already unit norm
    std::vector<float> ssl = {3.0f, 4.0f};
    std::vector<float> fc = {0.0f, 5.0f};

    FusedDescriptor plain = fuse(fv, std::nullopt, std::nullopt, Variant::FV);
    CHECK(plain.values.size() == 3);
    CHECK(plain.fc_len == 0);
    CHECK(plain.ssl_len == 0);

    FusedDescriptor fvae = fuse(fv, ssl, std::nullopt, Variant::FVAE);
    REQUIRE(fvae.values.size() == 5);
    CHECK(fvae.fv_len == 3);
    CHECK(fvae.ssl_len == 2);
    CHECK(fvae.values[3] == doctest::Approx(0.6f));
    CHECK(fvae.values[4] == doctest::Approx(0.8f));

    FusedDescriptor full = fuse(fv, ssl, fc, Variant::FCFVAE);
    REQUIRE(full.values.size() == 7);
    CHECK(full.fv_len == 3);
    CHECK(full.fc_len == 2);
    CHECK(full.ssl_len == 2);
    CHECK(full.values[3] == doctest::Approx(0.0f));   // FC first
    CHECK(full.values[4] == doctest::Approx(1.0f));
    CHECK(full.values[5] == doctest::Approx(0.6f));   // SSL second
    CHECK(full.values[6] == doctest::Approx(0.8f));

    CHECK_THROWS_AS(fuse(fv, std::nullopt, std::nullopt, Variant::FVAE), ValidationError);
    CHECK_THROWS_AS(fuse(fv, ssl, std::nullopt, Variant::FCFVAE), ValidationError);
}
