#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "texfv/dense_array.hpp"

namespace texfv {

/// Geometry of one convolution layer.
struct ConvSpec {
    std::size_t kernel_size = 3;
    std::size_t stride = 1;
    std::size_t padding = 0;
    std::size_t in_channels = 1;
    std::size_t out_channels = 1;

    std::size_t out_extent(std::size_t in) const {
        if (in + 2 * padding < kernel_size)
            throw DimensionError("ConvSpec: input extent smaller than kernel");
        return (in + 2 * padding - kernel_size) / stride + 1;
    }
};

/// Direct 2-D convolution (cross-correlation layout): input [C,H,W],
/// kernels [K,C,m,m], bias [K] -> output [K,H',W'].
DenseArray conv2d(const DenseArray& input, const DenseArray& kernels,
                  const DenseArray& bias, const ConvSpec& spec);

struct ConvGrads {
    DenseArray input;
    DenseArray kernels;
    DenseArray bias;
};

/// Gradients of conv2d with respect to input, kernels and bias.
ConvGrads conv2d_backward(const DenseArray& input, const DenseArray& kernels,
                          const ConvSpec& spec, const DenseArray& grad_out);

DenseArray relu(const DenseArray& x);

/// Gradient mask uses the forward output (zero where the unit was clamped).
DenseArray relu_backward(const DenseArray& out, const DenseArray& grad_out);

struct MaxPoolResult {
    DenseArray values;                 // [C,H/2,W/2]
    std::vector<std::uint32_t> argmax; // flat input index per output element
};

/// 2x2 max pooling with stride 2; extents must be even.
MaxPoolResult maxpool2(const DenseArray& x);

DenseArray maxpool2_backward(const MaxPoolResult& pooled, const DenseArray& grad_out,
                             const std::vector<std::size_t>& input_shape);

/// Nearest-neighbor 2x upsampling.
DenseArray upsample2(const DenseArray& x);

DenseArray upsample2_backward(const DenseArray& grad_out);

/// Mean squared error over all elements; shapes must match.
double mse(const DenseArray& a, const DenseArray& b);

/// d mse(a,b) / d a.
DenseArray mse_backward(const DenseArray& a, const DenseArray& b);

struct EighResult {
    std::vector<double> eigenvalues;  // descending
    DenseArray eigenvectors;          // [D,D], column i pairs with eigenvalue i
};

/// Symmetric eigendecomposition (input must be symmetric within 1e-6).
EighResult eigh(const DenseArray& symmetric);

/// Reflect-pad the spatial extents of [C,H,W] up to multiples of `multiple`.
DenseArray pad_reflect_to_multiple(const DenseArray& x, std::size_t multiple);

}  // namespace texfv
