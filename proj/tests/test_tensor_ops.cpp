#include <doctest.h>

#include <cmath>
#include <random>

#include "texfv/tensor_ops.hpp"

using namespace texfv;

namespace {

DenseArray random_array(std::vector<std::size_t> shape, std::mt19937_64& rng,
                        float lo = -1.0f, float hi = 1.0f) {
    std::uniform_real_distribution<float> dist(lo, hi);
    DenseArray a(std::move(shape));
    for (std::size_t i = 0; i < a.size(); ++i) a[i] = dist(rng);
    return a;
}

// Independent quadruple-loop reference for conv2d.
DenseArray conv2d_naive(const DenseArray& input, const DenseArray& kernels,
                        const DenseArray& bias, const ConvSpec& spec) {
    const std::size_t C = input.extent(0), H = input.extent(1), W = input.extent(2);
    const std::size_t K = spec.out_channels, m = spec.kernel_size;
    const std::size_t Ho = spec.out_extent(H), Wo = spec.out_extent(W);
    DenseArray out({K, Ho, Wo});
    for (std::size_t k = 0; k < K; ++k)
        for (std::size_t i = 0; i < Ho; ++i)
            for (std::size_t j = 0; j < Wo; ++j) {
                double acc = bias[k];
                for (std::size_t c = 0; c < C; ++c)
                    for (std::size_t a = 0; a < m; ++a)
                        for (std::size_t b = 0; b < m; ++b) {
                            const long h = static_cast<long>(i * spec.stride + a) -
                                           static_cast<long>(spec.padding);
                            const long w = static_cast<long>(j * spec.stride + b) -
                                           static_cast<long>(spec.padding);
                            if (h < 0 || w < 0 || h >= static_cast<long>(H) ||
                                w >= static_cast<long>(W))
                                continue;
                            acc += static_cast<double>(kernels.at(k, c, a, b)) *
                                   input.at(c, static_cast<std::size_t>(h),
                                            static_cast<std::size_t>(w));
                        }
                out.at(k, i, j) = static_cast<float>(acc);
            }
    return out;
}

}  // namespace

TEST_CASE("conv2d identity kernel") {
    std::mt19937_64 rng(1);
    DenseArray input = random_array({2, 4, 4}, rng);
    DenseArray kernels({2, 2, 1, 1});
    kernels.at(0, 0, 0, 0) = 1.0f;
    kernels.at(1, 1, 0, 0) = 1.0f;
    ConvSpec spec{1, 1, 0, 2, 2};
    DenseArray out = conv2d(input, kernels, DenseArray({2}), spec);
    for (std::size_t i = 0; i < input.size(); ++i) CHECK(out[i] == input[i]);
}

TEST_CASE("conv2d all-ones kernel sums entries") {
    DenseArray input({1, 2, 2}, {1, 2, 3, 4});
    DenseArray kernels = DenseArray::full({1, 1, 2, 2}, 1.0f);
    ConvSpec spec{2, 1, 0, 1, 1};
    DenseArray out = conv2d(input, kernels, DenseArray({1}), spec);
    REQUIRE(out.size() == 1);
    CHECK(out[0] == doctest::Approx(10.0f));
}

TEST_CASE("conv2d matches naive oracle on random instances") {
    std::mt19937_64 rng(7);
    std::uniform_int_distribution<std::size_t> ch(1, 4), sp(3, 12), pad(0, 1);
    for (int trial = 0; trial < 30; ++trial) {
        const std::size_t C = ch(rng), K = ch(rng), H = sp(rng), W = sp(rng);
        ConvSpec spec{3, 1, pad(rng), C, K};
        if (H + 2 * spec.padding < 3 || W + 2 * spec.padding < 3) continue;
        DenseArray input = random_array({C, H, W}, rng);
        DenseArray kernels = random_array({K, C, 3, 3}, rng);
        DenseArray bias = random_array({K}, rng);
        DenseArray fast = conv2d(input, kernels, bias, spec);
        DenseArray slow = conv2d_naive(input, kernels, bias, spec);
        REQUIRE(fast.same_shape(slow));
        for (std::size_t i = 0; i < fast.size(); ++i)
            CHECK(fast[i] == doctest::Approx(slow[i]).epsilon(1e-5));
    }
}

TEST_CASE("conv2d is linear in its input") {
    std::mt19937_64 rng(11);
    DenseArray x = random_array({3, 6, 6}, rng);
    DenseArray y = random_array({3, 6, 6}, rng);
    DenseArray kernels = random_array({2, 3, 3, 3}, rng);
    DenseArray zero_bias({2});
    ConvSpec spec{3, 1, 1, 3, 2};
    const float alpha = 0.7f, beta = -1.3f;
    DenseArray combo({3, 6, 6});
    for (std::size_t i = 0; i < x.size(); ++i) combo[i] = alpha * x[i] + beta * y[i];
    DenseArray lhs = conv2d(combo, kernels, zero_bias, spec);
    DenseArray cx = conv2d(x, kernels, zero_bias, spec);
    DenseArray cy = conv2d(y, kernels, zero_bias, spec);
    for (std::size_t i = 0; i < lhs.size(); ++i)
        CHECK(lhs[i] == doctest::Approx(alpha * cx[i] + beta * cy[i]).epsilon(1e-5));
}

TEST_CASE("conv2d rejects mismatched shapes") {
    DenseArray input({2, 4, 4});
    DenseArray kernels({1, 3, 3, 3});
    ConvSpec spec{3, 1, 1, 3, 1};
    CHECK_THROWS_AS(conv2d(input, kernels, DenseArray({1}), spec), DimensionError);
}

TEST_CASE("relu") {
    DenseArray x({3}, {-1.0f, 0.0f, 2.0f});
    DenseArray out = relu(x);
    CHECK(out[0] == 0.0f);
    CHECK(out[1] == 0.0f);
    CHECK(out[2] == 2.0f);

    std::mt19937_64 rng(3);
    std::uniform_real_distribution<float> dist(-2.0f, 2.0f);
    DenseArray r({32});
    for (std::size_t i = 0; i < r.size(); ++i) r[i] = dist(rng);
    DenseArray once = relu(r);
    DenseArray twice = relu(once);
    for (std::size_t i = 0; i < r.size(); ++i) CHECK(once[i] == twice[i]);

    DenseArray neg = DenseArray::full({5}, -3.0f);
    DenseArray clipped = relu(neg);
    for (float v : clipped.values()) CHECK(v == 0.0f);
}

TEST_CASE("maxpool2 basics and oracle") {
    DenseArray x({1, 2, 2}, {1, 2, 3, 4});
    auto r = maxpool2(x);
    CHECK(r.values.size() == 1);
    CHECK(r.values[0] == 4.0f);

    DenseArray c = DenseArray::full({2, 4, 4}, 3.5f);
    auto rc = maxpool2(c);
    CHECK(rc.values.shape() == std::vector<std::size_t>{2, 2, 2});
    for (float v : rc.values.values()) CHECK(v == 3.5f);

    std::mt19937_64 rng(5);
    std::uniform_real_distribution<float> dist(-1.0f, 1.0f);
    DenseArray z({2, 6, 4});
    for (std::size_t i = 0; i < z.size(); ++i) z[i] = dist(rng);
    auto rz = maxpool2(z);
    for (std::size_t ch = 0; ch < 2; ++ch)
        for (std::size_t i = 0; i < 3; ++i)
            for (std::size_t j = 0; j < 2; ++j) {
                float best = -10.0f;
                for (std::size_t di = 0; di < 2; ++di)
                    for (std::size_t dj = 0; dj < 2; ++dj)
                        best = std::max(best, z.at(ch, 2 * i + di, 2 * j + dj));
                CHECK(rz.values.at(ch, i, j) == best);
            }

    CHECK_THROWS_AS(maxpool2(DenseArray({1, 3, 4})), DimensionError);
}

TEST_CASE("upsample2 replication and round trip") {
    DenseArray x({1, 1, 1}, {5.0f});
    DenseArray up = upsample2(x);
    CHECK(up.shape() == std::vector<std::size_t>{1, 2, 2});
    for (float v : up.values()) CHECK(v == 5.0f);

    std::mt19937_64 rng(9);
    std::uniform_real_distribution<float> dist(-1.0f, 1.0f);
    DenseArray z({3, 4, 5});
    for (std::size_t i = 0; i < z.size(); ++i) z[i] = dist(rng);
    DenseArray uz = upsample2(z);
    auto back = maxpool2(uz);
    for (std::size_t i = 0; i < z.size(); ++i) CHECK(back.values[i] == z[i]);

    double sum_z = 0.0, sum_u = 0.0;
    for (float v : z.values()) sum_z += v;
    for (float v : uz.values()) sum_u += v;
    CHECK(sum_u == doctest::Approx(4.0 * sum_z).epsilon(1e-6));
}

TEST_CASE("mse") {
    DenseArray a({2}, {0.0f, 0.0f});
    DenseArray b({2}, {2.0f, 0.0f});
    CHECK(mse(a, a) == 0.0);
    CHECK(mse(a, b) == doctest::Approx(2.0));
    CHECK_THROWS_AS(mse(a, DenseArray({3})), DimensionError);

    std::mt19937_64 rng(13);
    std::uniform_real_distribution<float> dist(-1.0f, 1.0f);
    DenseArray x({40}), y({40});
    for (std::size_t i = 0; i < 40; ++i) { x[i] = dist(rng); y[i] = dist(rng); }
    double acc = 0.0;
    for (std::size_t i = 0; i < 40; ++i)
        acc += (static_cast<double>(x[i]) - y[i]) * (static_cast<double>(x[i]) - y[i]);
    CHECK(mse(x, y) == doctest::Approx(acc / 40.0).epsilon(1e-6));
}

TEST_CASE("eigh identity and diagonal") {
    DenseArray eye({2, 2}, {1, 0, 0, 1});
    auto r = eigh(eye);
    CHECK(r.eigenvalues[0] == doctest::Approx(1.0));
    CHECK(r.eigenvalues[1] == doctest::Approx(1.0));

    DenseArray diag({2, 2}, {3, 0, 0, 1});
    auto rd = eigh(diag);
    CHECK(rd.eigenvalues[0] == doctest::Approx(3.0));
    CHECK(rd.eigenvalues[1] == doctest::Approx(1.0));
    CHECK(std::abs(rd.eigenvectors.at(0, 0)) == doctest::Approx(1.0));
    CHECK(std::abs(rd.eigenvectors.at(1, 1)) == doctest::Approx(1.0));
}

TEST_CASE("eigh reconstruction and orthonormality on random symmetric input") {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<float> dist(-1.0f, 1.0f);
    const std::size_t D = 8;
    DenseArray S({D, D});
    for (std::size_t i = 0; i < D; ++i)
        for (std::size_t j = i; j < D; ++j) {
            const float v = dist(rng);
            S.at(i, j) = v;
            S.at(j, i) = v;
        }
    auto r = eigh(S);
    for (std::size_t i = 0; i + 1 < D; ++i) CHECK(r.eigenvalues[i] >= r.eigenvalues[i + 1]);
    // V Lambda V^T == S
    for (std::size_t i = 0; i < D; ++i)
        for (std::size_t j = 0; j < D; ++j) {
            double acc = 0.0;
            for (std::size_t k = 0; k < D; ++k)
                acc += static_cast<double>(r.eigenvectors.at(i, k)) * r.eigenvalues[k] *
                       r.eigenvectors.at(j, k);
            CHECK(std::abs(acc - S.at(i, j)) < 1e-4);
        }
    // V^T V == I
    for (std::size_t a = 0; a < D; ++a)
        for (std::size_t b = 0; b < D; ++b) {
            double acc = 0.0;
            for (std::size_t k = 0; k < D; ++k)
                acc += static_cast<double>(r.eigenvectors.at(k, a)) * r.eigenvectors.at(k, b);
            CHECK(std::abs(acc - (a == b ? 1.0 : 0.0)) < 1e-6);
        }
}

TEST_CASE("eigh rejects non-symmetric input") {
    DenseArray S({2, 2}, {1.0f, 0.5f, 0.0f, 1.0f});
    CHECK_THROWS_AS(eigh(S), ValidationError);
}

TEST_CASE("pad_reflect_to_multiple") {
    DenseArray x({1, 3, 5});
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = static_cast<float>(i);
    DenseArray p = pad_reflect_to_multiple(x, 4);
    CHECK(p.shape() == std::vector<std::size_t>{1, 4, 8});
    // Reflected row 3 mirrors row 1.
    for (std::size_t j = 0; j < 5; ++j) CHECK(p.at(0, 3, j) == x.at(0, 1, j));
    // Reflected column 5 mirrors column 3.
    for (std::size_t i = 0; i < 3; ++i) CHECK(p.at(0, i, 5) == x.at(0, i, 3));
    DenseArray same = pad_reflect_to_multiple(x, 1);
    CHECK(same.same_shape(x));
}
