#include <doctest.h>

#include <cmath>
#include <random>

#include "texfv/svm.hpp"

using namespace texfv;

TEST_CASE("phi_transform known values") {
    std::vector<float> x = {4.0f, -4.0f, 0.0f, 1.0f, -0.25f};
    auto p = phi_transform(x);
    CHECK(p[0] == doctest::Approx(2.0f));
    CHECK(p[1] == doctest::Approx(-2.0f));
    CHECK(p[2] == 0.0f);
    CHECK(p[3] == doctest::Approx(1.0f));
    CHECK(p[4] == doctest::Approx(-0.5f));
}

TEST_CASE("bhattacharyya kernel equals the dot product of the mapped vectors") {
    std::mt19937_64 rng(41);
    std::uniform_real_distribution<double> dist(-3.0, 3.0);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<double> x(23), y(23);
        for (auto& v : x) v = dist(rng);
        for (auto& v : y) v = dist(rng);
        auto px = phi_transform(x);
        auto py = phi_transform(y);
        double dot = 0.0;
        for (std::size_t i = 0; i < px.size(); ++i) dot += px[i] * py[i];
        CHECK(std::abs(dot - bhattacharyya(x, y)) < 1e-10);

        // Single-precision map agrees within float rounding.
        std::vector<float> xf(x.begin(), x.end()), yf(y.begin(), y.end());
        auto pxf = phi_transform(xf);
        auto pyf = phi_transform(yf);
        double dotf = 0.0;
        for (std::size_t i = 0; i < pxf.size(); ++i)
            dotf += static_cast<double>(pxf[i]) * pyf[i];
        CHECK(std::abs(dotf - bhattacharyya(xf, yf)) < 1e-5);
    }
}

TEST_CASE("kernel diagonal is the L1 norm") {
    std::vector<float> x = {1.0f, -2.0f, 0.5f};
    CHECK(bhattacharyya(x, x) == doctest::Approx(3.5).epsilon(1e-12));
}

TEST_CASE("binary training separates linearly separable data") {
    std::mt19937_64 rng(42);
    std::normal_distribution<float> noise(0.0f, 0.3f);
    const std::size_t N = 60;
    DenseArray feats({N, 2});
    std::vector<int> labels(N);
    for (std::size_t i = 0; i < N; ++i) {
        const bool pos = i % 2 == 0;
        feats.at(i, 0) = (pos ? 2.0f : -2.0f) + noise(rng);
        feats.at(i, 1) = noise(rng);
        labels[i] = pos ? 1 : 0;
    }
    SvmConfig cfg;
    cfg.rng_seed = 1;
    LinearSvmModel model = train_ovr(feats, labels, cfg);
    REQUIRE(model.labels.size() == 2);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < N; ++i) {
        auto p = predict(model, {feats.at(i, 0), feats.at(i, 1)});
        if (p.label == labels[i]) ++correct;
    }
    CHECK(correct == N);
}

TEST_CASE("one-vs-rest handles three classes") {
    std::mt19937_64 rng(43);
    std::normal_distribution<float> noise(0.0f, 0.25f);
    const float centers[3][2] = {{0.0f, 2.0f}, {2.0f, -1.0f}, {-2.0f, -1.0f}};
    const std::size_t per = 40;
    DenseArray feats({3 * per, 2});
    std::vector<int> labels(3 * per);
    for (std::size_t c = 0; c < 3; ++c)
        for (std::size_t i = 0; i < per; ++i) {
            const std::size_t r = c * per + i;
            feats.at(r, 0) = centers[c][0] + noise(rng);
            feats.at(r, 1) = centers[c][1] + noise(rng);
            labels[r] = static_cast<int>(c) + 10;  // non-contiguous labels
        }
    SvmConfig cfg;
    cfg.rng_seed = 2;
    LinearSvmModel model = train_ovr(feats, labels, cfg);
    REQUIRE(model.labels.size() == 3);
    std::size_t correct = 0;
    for (std::size_t r = 0; r < 3 * per; ++r) {
        auto p = predict(model, {feats.at(r, 0), feats.at(r, 1)});
        if (p.label == labels[r]) ++correct;
        REQUIRE(p.scores.size() == 3);
    }
    CHECK(static_cast<double>(correct) / (3 * per) > 0.95);
}

TEST_CASE("dual solution satisfies the box constraints implicitly via margins") {
    // Every support vector must sit on or inside the margin; points with
    // functional margin > 1 contribute nothing, so the primal objective of
    // the learned weights must be near-optimal. We check against a fine
    // random search over rescalings as a weak optimality certificate.
    std::mt19937_64 rng(44);
    std::normal_distribution<float> noise(0.0f, 0.5f);
    const std::size_t N = 80;
    DenseArray feats({N, 2});
    std::vector<int> labels(N);
    for (std::size_t i = 0; i < N; ++i) {
        const bool pos = i < N / 2;
        feats.at(i, 0) = (pos ? 1.0f : -1.0f) + noise(rng);
        feats.at(i, 1) = noise(rng);
        labels[i] = pos ? 1 : -1;
    }
    SvmConfig cfg;
    cfg.C = 1.0f;
    cfg.rng_seed = 3;
    LinearSvmModel model = train_ovr(feats, labels, cfg);
    const auto& w = model.weights[model.labels[0] == 1 ? 0 : 1];
    const float b = model.bias[model.labels[0] == 1 ? 0 : 1];
    auto primal = [&](float scale) {
        double obj = 0.5 * scale * scale *
                     (static_cast<double>(w[0]) * w[0] + static_cast<double>(w[1]) * w[1] +
                      static_cast<double>(b) * b);
        for (std::size_t i = 0; i < N; ++i) {
            const double margin =
                labels[i] * (scale * (w[0] * feats.at(i, 0) + w[1] * feats.at(i, 1) + b));
            obj += cfg.C * std::max(0.0, 1.0 - margin);
        }
        return obj;
    };
    const double at_one = primal(1.0f);
    for (float s : {0.5f, 0.8f, 0.9f, 1.1f, 1.2f, 2.0f})
        CHECK(at_one <= primal(s) + 1e-3);
}

TEST_CASE("prediction ties break toward the smaller class index") {
    LinearSvmModel model;
    model.labels = {0, 1};
    model.weights = {{0.0f}, {0.0f}};
    model.bias = {0.5f, 0.5f};
    auto p = predict(model, {1.0f});
    CHECK(p.label == 0);
}

TEST_CASE("training validates inputs") {
    DenseArray feats({4, 2});
    std::vector<int> one_class = {7, 7, 7, 7};
    SvmConfig cfg;
    CHECK_THROWS_AS(train_ovr(feats, one_class, cfg), ValidationError);
    std::vector<int> short_labels = {0, 1};
    CHECK_THROWS_AS(train_ovr(feats, short_labels, cfg), ValidationError);
}

TEST_CASE("training is deterministic for a fixed seed") {
    std::mt19937_64 rng(45);
    std::uniform_real_distribution<float> dist(-1.0f, 1.0f);
    DenseArray feats({30, 5});
    std::vector<int> labels(30);
    for (std::size_t i = 0; i < feats.size(); ++i) feats[i] = dist(rng);
    for (std::size_t i = 0; i < 30; ++i) labels[i] = static_cast<int>(i % 3);
    SvmConfig cfg;
    cfg.rng_seed = 9;
    auto a = train_ovr(feats, labels, cfg);
    auto b = train_ovr(feats, labels, cfg);
    for (std::size_t c = 0; c < 3; ++c) {
        CHECK(a.bias[c] == b.bias[c]);
        for (std::size_t d = 0; d < 5; ++d) CHECK(a.weights[c][d] == b.weights[c][d]);
    }
}
