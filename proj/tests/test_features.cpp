#include <doctest.h>

#include <cmath>
#include <random>

#include "texfv/features.hpp"

using namespace texfv;

TEST_CASE("feature maps unfold to one descriptor per position") {
    DenseArray map({2, 2, 3});
    for (std::size_t i = 0; i < map.size(); ++i) map[i] = static_cast<float>(i);
    DenseArray rows = map_to_descriptors(map);
    REQUIRE(rows.shape() == std::vector<std::size_t>{6, 2});
    for (std::size_t h = 0; h < 2; ++h)
        for (std::size_t w = 0; w < 3; ++w)
            for (std::size_t c = 0; c < 2; ++c)
                CHECK(rows.at(h * 3 + w, c) == map.at(c, h, w));
}

TEST_CASE("projection model recovers a planted dominant direction") {
    // Points spread along (1,1)/sqrt(2) with tiny orthogonal jitter.
    std::mt19937_64 rng(61);
    std::normal_distribution<float> big(0.0f, 3.0f), small(0.0f, 0.05f);
    DenseArray rows({500, 2});
    for (std::size_t t = 0; t < 500; ++t) {
        const float a = big(rng), b = small(rng);
        rows.at(t, 0) = (a + b) / std::sqrt(2.0f) + 5.0f;
        rows.at(t, 1) = (a - b) / std::sqrt(2.0f) - 2.0f;
    }
    PcaModel pca = fit_pca(rows, 1);
    REQUIRE(pca.mean.size() == 2);
    CHECK(pca.mean[0] == doctest::Approx(5.0f).epsilon(0.1));
    CHECK(pca.mean[1] == doctest::Approx(-2.0f).epsilon(0.1));
    const float c0 = pca.components.at(0, 0), c1 = pca.components.at(1, 0);
    CHECK(std::abs(std::abs(c0) - std::abs(c1)) < 1e-2);
    CHECK(std::sqrt(c0 * c0 + c1 * c1) == doctest::Approx(1.0).epsilon(1e-5));
    REQUIRE(pca.explained_variance.size() == 1);
    CHECK(pca.explained_variance[0] == doctest::Approx(9.0).epsilon(0.15));
}

TEST_CASE("projection preserves pairwise distances when rank is full") {
    std::mt19937_64 rng(62);
    std::uniform_real_distribution<float> dist(-2.0f, 2.0f);
    DenseArray rows({40, 5});
    for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = dist(rng);
    PcaModel pca = fit_pca(rows, 5);
    DenseArray proj = reduce(rows, Reduction::pca, 5, &pca);
    auto dist2 = [](const DenseArray& m, std::size_t a, std::size_t b) {
        double acc = 0.0;
        for (std::size_t d = 0; d < m.extent(1); ++d) {
            const double diff = static_cast<double>(m.at(a, d)) - m.at(b, d);
            acc += diff * diff;
        }
        return acc;
    };
    for (std::size_t a = 0; a < 10; ++a)
        for (std::size_t b = a + 1; b < 10; ++b)
            CHECK(dist2(proj, a, b) == doctest::Approx(dist2(rows, a, b)).epsilon(1e-3));
}

TEST_CASE("pooling reductions collapse contiguous channel groups") {
    DenseArray rows({2, 6}, {1, 2, 3, 4, 5, 6,
                             -1, 0, 1, 2, -3, 4});
    DenseArray avg = reduce(rows, Reduction::avgpool, 2);
    REQUIRE(avg.shape() == std::vector<std::size_t>{2, 2});
    CHECK(avg.at(0, 0) == doctest::Approx(2.0f));
    CHECK(avg.at(0, 1) == doctest::Approx(5.0f));
    CHECK(avg.at(1, 0) == doctest::Approx(0.0f));
    CHECK(avg.at(1, 1) == doctest::Approx(1.0f));

    DenseArray mx = reduce(rows, Reduction::maxpool, 3);
    REQUIRE(mx.shape() == std::vector<std::size_t>{2, 3});
    CHECK(mx.at(0, 0) == 2.0f);
    CHECK(mx.at(0, 2) == 6.0f);
    CHECK(mx.at(1, 1) == 2.0f);

    CHECK_THROWS_AS(reduce(rows, Reduction::avgpool, 4), ValidationError);
    CHECK_THROWS_AS(reduce(rows, Reduction::pca, 2, nullptr), ValidationError);
}

TEST_CASE("aggregation concatenates rows and records provenance") {
    DenseArray a({2, 3});
    DenseArray b({3, 3});
    for (std::size_t i = 0; i < a.size(); ++i) a[i] = 1.0f;
    for (std::size_t i = 0; i < b.size(); ++i) b[i] = 2.0f;
    LocalDescriptorSet set = aggregate({a, b});
    REQUIRE(set.rows.shape() == std::vector<std::size_t>{5, 3});
    REQUIRE(set.tap_of_row.size() == 5);
    CHECK(set.tap_of_row[0] == 0);
    CHECK(set.tap_of_row[1] == 0);
    CHECK(set.tap_of_row[2] == 1);
    CHECK(set.tap_of_row[4] == 1);
    CHECK(set.rows.at(0, 0) == 1.0f);
    CHECK(set.rows.at(4, 2) == 2.0f);

    DenseArray bad({2, 4});
    CHECK_THROWS_AS(aggregate({a, bad}), DimensionError);
    CHECK_THROWS_AS(aggregate({}), ValidationError);
}

TEST_CASE("reduction names parse") {
    CHECK(reduction_from_string("pca") == Reduction::pca);
    CHECK(reduction_from_string("avgpool") == Reduction::avgpool);
    CHECK(reduction_from_string("maxpool") == Reduction::maxpool);
    CHECK_THROWS_AS(reduction_from_string("other"), ConfigError);
}
