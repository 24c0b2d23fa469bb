#include "texfv/tensor_ops.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <string>

namespace texfv {

namespace {

void check_conv_shapes(const DenseArray& input, const DenseArray& kernels,
                       const DenseArray& bias, const ConvSpec& spec) {
    if (input.rank() != 3)
        throw DimensionError("conv2d: input rank " + std::to_string(input.rank()) +
                             ", expected 3 (axis 0..2 = C,H,W)");
    if (kernels.rank() != 4)
        throw DimensionError("conv2d: kernels rank " + std::to_string(kernels.rank()) +
                             ", expected 4 (axis 0..3 = K,C,m,m)");
    if (input.extent(0) != spec.in_channels || kernels.extent(1) != spec.in_channels)
        throw DimensionError("conv2d: channel axis mismatch (input C=" +
                             std::to_string(input.extent(0)) + ", kernel C=" +
                             std::to_string(kernels.extent(1)) + ", spec C=" +
                             std::to_string(spec.in_channels) + ")");
    if (kernels.extent(0) != spec.out_channels)
        throw DimensionError("conv2d: kernel output axis K=" +
                             std::to_string(kernels.extent(0)) + " != spec K=" +
                             std::to_string(spec.out_channels));
    if (kernels.extent(2) != spec.kernel_size || kernels.extent(3) != spec.kernel_size)
        throw DimensionError("conv2d: kernel spatial axes disagree with spec");
    if (bias.size() != spec.out_channels)
        throw DimensionError("conv2d: bias axis length != out_channels");
}

}  // namespace

DenseArray conv2d(const DenseArray& input, const DenseArray& kernels,
                  const DenseArray& bias, const ConvSpec& spec) {
    check_conv_shapes(input, kernels, bias, spec);
    const std::size_t C = input.extent(0), H = input.extent(1), W = input.extent(2);
    const std::size_t K = spec.out_channels, m = spec.kernel_size;
    const std::size_t Ho = spec.out_extent(H), Wo = spec.out_extent(W);
    const std::ptrdiff_t pad = static_cast<std::ptrdiff_t>(spec.padding);

    DenseArray out({K, Ho, Wo});
    for (std::size_t k = 0; k < K; ++k) {
        for (std::size_t i = 0; i < Ho; ++i) {
            for (std::size_t j = 0; j < Wo; ++j) {
                double acc = bias[k];
                const std::ptrdiff_t h0 = static_cast<std::ptrdiff_t>(i * spec.stride) - pad;
                const std::ptrdiff_t w0 = static_cast<std::ptrdiff_t>(j * spec.stride) - pad;
                for (std::size_t c = 0; c < C; ++c) {
                    for (std::size_t a = 0; a < m; ++a) {
                        const std::ptrdiff_t h = h0 + static_cast<std::ptrdiff_t>(a);
                        if (h < 0 || h >= static_cast<std::ptrdiff_t>(H)) continue;
                        for (std::size_t b = 0; b < m; ++b) {
                            const std::ptrdiff_t w = w0 + static_cast<std::ptrdiff_t>(b);
                            if (w < 0 || w >= static_cast<std::ptrdiff_t>(W)) continue;
                            acc += static_cast<double>(kernels.at(k, c, a, b)) *
                                   static_cast<double>(input.at(c, static_cast<std::size_t>(h),
                                                                static_cast<std::size_t>(w)));
                        }
                    }
                }
                out.at(k, i, j) = static_cast<float>(acc);
            }
        }
    }
    return out;
}

ConvGrads conv2d_backward(const DenseArray& input, const DenseArray& kernels,
                          const ConvSpec& spec, const DenseArray& grad_out) {
    const std::size_t C = input.extent(0), H = input.extent(1), W = input.extent(2);
    const std::size_t K = spec.out_channels, m = spec.kernel_size;
    const std::size_t Ho = grad_out.extent(1), Wo = grad_out.extent(2);
    const std::ptrdiff_t pad = static_cast<std::ptrdiff_t>(spec.padding);

    ConvGrads g{DenseArray(input.shape()), DenseArray(kernels.shape()),
                DenseArray({K})};
    for (std::size_t k = 0; k < K; ++k) {
        for (std::size_t i = 0; i < Ho; ++i) {
            for (std::size_t j = 0; j < Wo; ++j) {
                const float go = grad_out.at(k, i, j);
                if (go == 0.0f) continue;
                g.bias[k] += go;
                const std::ptrdiff_t h0 = static_cast<std::ptrdiff_t>(i * spec.stride) - pad;
                const std::ptrdiff_t w0 = static_cast<std::ptrdiff_t>(j * spec.stride) - pad;
                for (std::size_t c = 0; c < C; ++c) {
                    for (std::size_t a = 0; a < m; ++a) {
                        const std::ptrdiff_t h = h0 + static_cast<std::ptrdiff_t>(a);
                        if (h < 0 || h >= static_cast<std::ptrdiff_t>(H)) continue;
                        for (std::size_t b = 0; b < m; ++b) {
                            const std::ptrdiff_t w = w0 + static_cast<std::ptrdiff_t>(b);
                            if (w < 0 || w >= static_cast<std::ptrdiff_t>(W)) continue;
                            const auto hh = static_cast<std::size_t>(h);
                            const auto ww = static_cast<std::size_t>(w);
                            g.kernels.at(k, c, a, b) += go * input.at(c, hh, ww);
                            g.input.at(c, hh, ww) += go * kernels.at(k, c, a, b);
                        }
                    }
                }
            }
        }
    }
    return g;
}

DenseArray relu(const DenseArray& x) {
    DenseArray out(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] > 0.0f ? x[i] : 0.0f;
    return out;
}

DenseArray relu_backward(const DenseArray& out, const DenseArray& grad_out) {
    DenseArray g(out.shape());
    for (std::size_t i = 0; i < out.size(); ++i)
        g[i] = out[i] > 0.0f ? grad_out[i] : 0.0f;
    return g;
}

MaxPoolResult maxpool2(const DenseArray& x) {
    if (x.rank() != 3) throw DimensionError("maxpool2: input rank must be 3");
    const std::size_t C = x.extent(0), H = x.extent(1), W = x.extent(2);
    if (H % 2 != 0)
        throw DimensionError("maxpool2: height " + std::to_string(H) + " is odd");
    if (W % 2 != 0)
        throw DimensionError("maxpool2: width " + std::to_string(W) + " is odd");

    MaxPoolResult r{DenseArray({C, H / 2, W / 2}), {}};
    r.argmax.resize(r.values.size());
    std::size_t o = 0;
    for (std::size_t c = 0; c < C; ++c) {
        for (std::size_t i = 0; i < H; i += 2) {
            for (std::size_t j = 0; j < W; j += 2) {
                std::size_t best = (c * H + i) * W + j;
                float best_v = x[best];
                for (std::size_t di = 0; di < 2; ++di) {
                    for (std::size_t dj = 0; dj < 2; ++dj) {
                        const std::size_t idx = (c * H + i + di) * W + j + dj;
                        if (x[idx] > best_v) { best_v = x[idx]; best = idx; }
                    }
                }
                r.values[o] = best_v;
                r.argmax[o] = static_cast<std::uint32_t>(best);
                ++o;
            }
        }
    }
    return r;
}

DenseArray maxpool2_backward(const MaxPoolResult& pooled, const DenseArray& grad_out,
                             const std::vector<std::size_t>& input_shape) {
    DenseArray g(input_shape);
    for (std::size_t o = 0; o < grad_out.size(); ++o)
        g[pooled.argmax[o]] += grad_out[o];
    return g;
}

DenseArray upsample2(const DenseArray& x) {
    if (x.rank() != 3) throw DimensionError("upsample2: input rank must be 3");
    const std::size_t C = x.extent(0), H = x.extent(1), W = x.extent(2);
    DenseArray out({C, 2 * H, 2 * W});
    for (std::size_t c = 0; c < C; ++c)
        for (std::size_t i = 0; i < H; ++i)
            for (std::size_t j = 0; j < W; ++j) {
                const float v = x.at(c, i, j);
                out.at(c, 2 * i, 2 * j) = v;
                out.at(c, 2 * i, 2 * j + 1) = v;
                out.at(c, 2 * i + 1, 2 * j) = v;
                out.at(c, 2 * i + 1, 2 * j + 1) = v;
            }
    return out;
}

DenseArray upsample2_backward(const DenseArray& grad_out) {
    const std::size_t C = grad_out.extent(0);
    const std::size_t H = grad_out.extent(1) / 2, W = grad_out.extent(2) / 2;
    DenseArray g({C, H, W});
    for (std::size_t c = 0; c < C; ++c)
        for (std::size_t i = 0; i < H; ++i)
            for (std::size_t j = 0; j < W; ++j)
                g.at(c, i, j) = grad_out.at(c, 2 * i, 2 * j) +
                                grad_out.at(c, 2 * i, 2 * j + 1) +
                                grad_out.at(c, 2 * i + 1, 2 * j) +
                                grad_out.at(c, 2 * i + 1, 2 * j + 1);
    return g;
}

double mse(const DenseArray& a, const DenseArray& b) {
    if (!a.same_shape(b)) throw DimensionError("mse: shape mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
        acc += d * d;
    }
    return acc / static_cast<double>(a.size());
}

DenseArray mse_backward(const DenseArray& a, const DenseArray& b) {
    if (!a.same_shape(b)) throw DimensionError("mse_backward: shape mismatch");
    DenseArray g(a.shape());
    const float scale = 2.0f / static_cast<float>(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) g[i] = scale * (a[i] - b[i]);
    return g;
}

EighResult eigh(const DenseArray& symmetric) {
    if (symmetric.rank() != 2 || symmetric.extent(0) != symmetric.extent(1))
        throw DimensionError("eigh: input must be a square matrix");
    const std::size_t D = symmetric.extent(0);
    Eigen::MatrixXd S(D, D);
    double max_abs = 0.0;
    for (std::size_t i = 0; i < D; ++i)
        for (std::size_t j = 0; j < D; ++j) {
            S(i, j) = symmetric.at(i, j);
            max_abs = std::max(max_abs, std::abs(S(i, j)));
        }
    const double sym_tol = 1e-6 * std::max(1.0, max_abs);
    for (std::size_t i = 0; i < D; ++i)
        for (std::size_t j = i + 1; j < D; ++j)
            if (std::abs(S(i, j) - S(j, i)) > sym_tol)
                throw ValidationError("eigh: input not symmetric at (" +
                                      std::to_string(i) + "," + std::to_string(j) + ")");
    // Symmetrize away float round-off before factorizing.
    Eigen::MatrixXd A = 0.5 * (S + S.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(A);
    if (solver.info() != Eigen::Success)
        throw NumericError("eigh: eigendecomposition did not converge");

    EighResult r;
    r.eigenvalues.resize(D);
    r.eigenvectors = DenseArray({D, D});
    // Eigen returns ascending order; flip to descending.
    for (std::size_t i = 0; i < D; ++i) {
        const std::size_t src = D - 1 - i;
        r.eigenvalues[i] = solver.eigenvalues()(static_cast<Eigen::Index>(src));
        for (std::size_t row = 0; row < D; ++row)
            r.eigenvectors.at(row, i) = static_cast<float>(
                solver.eigenvectors()(static_cast<Eigen::Index>(row),
                                      static_cast<Eigen::Index>(src)));
    }
    return r;
}

DenseArray pad_reflect_to_multiple(const DenseArray& x, std::size_t multiple) {
    if (x.rank() != 3) throw DimensionError("pad_reflect_to_multiple: rank must be 3");
    const std::size_t C = x.extent(0), H = x.extent(1), W = x.extent(2);
    const std::size_t Ht = (H + multiple - 1) / multiple * multiple;
    const std::size_t Wt = (W + multiple - 1) / multiple * multiple;
    if (Ht == H && Wt == W) return x;
    if (Ht >= 2 * H || Wt >= 2 * W)
        throw DimensionError("pad_reflect_to_multiple: image too small to reflect-pad");
    DenseArray out({C, Ht, Wt});
    for (std::size_t c = 0; c < C; ++c)
        for (std::size_t i = 0; i < Ht; ++i) {
            const std::size_t si = i < H ? i : 2 * H - 2 - i;
            for (std::size_t j = 0; j < Wt; ++j) {
                const std::size_t sj = j < W ? j : 2 * W - 2 - j;
                out.at(c, i, j) = x.at(c, si, sj);
            }
        }
    return out;
}

}  // namespace texfv
