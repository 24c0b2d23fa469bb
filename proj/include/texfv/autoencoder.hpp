#pragma once

#include <cstdint>
#include <vector>

#include "texfv/dense_array.hpp"
#include "texfv/tensor_ops.hpp"

namespace texfv {

struct AutoencoderConfig {
    std::size_t levels = 3;          // J
    std::size_t base_channels = 16;  // doubles per level
    std::size_t kernel_size = 3;
    bool denoising = false;
    float noise_sigma = 0.1f;
    float learning_rate = 1e-2f;
    std::size_t epochs = 30;
    std::size_t batch_size = 8;
    std::uint64_t rng_seed = 0;
};

struct ConvLayer {
    DenseArray w;  // [K,C,m,m]
    DenseArray b;  // [K]; empty for the bias-free upsample convolution
};

struct EncoderBlock {
    ConvLayer c1, c2;
};

struct DecoderBlock {
    DenseArray up_w;  // upsample convolution, no bias
    ConvLayer c1, c2;
};

/// U-Net style autoencoder: J encoder blocks (two 3x3 conv+ReLU each,
/// then 2x2 max pool), a two-conv bottleneck, J decoder blocks
/// (nearest-neighbor upsample + learnable conv, skip concatenation,
/// two conv+ReLU), and a linear 1x1 reconstruction head.
struct AutoencoderModel {
    AutoencoderConfig config;
    std::size_t in_channels = 1;
    std::vector<EncoderBlock> encoder;
    EncoderBlock bottleneck;
    std::vector<DecoderBlock> decoder;
    ConvLayer head;

    /// Channel count of encoder block i (1-based): base * 2^(i-1).
    std::size_t encoder_channels(std::size_t i) const {
        return config.base_channels << (i - 1);
    }
    std::size_t bottleneck_channels() const {
        return config.base_channels << config.levels;
    }
};

/// Seeded construction; weights uniform in +-sqrt(6/(fan_in+fan_out)), biases zero.
AutoencoderModel make_autoencoder(const AutoencoderConfig& config, std::size_t in_channels);

struct ForwardResult {
    DenseArray reconstruction;
    std::vector<DenseArray> encoder_outputs;  // E_1..E_J (pre-pooling)
    DenseArray bottleneck;
};

ForwardResult forward(const AutoencoderModel& model, const DenseArray& image);

/// Gaussian noise of std sigma added elementwise, result clipped to [0,1].
DenseArray add_noise(const DenseArray& image, float sigma, std::uint64_t rng_seed);

struct TrainResult {
    std::vector<double> loss_history;  // mean reconstruction MSE per epoch
};

/// Minibatch SGD on the reconstruction MSE; mutates the model in place.
TrainResult train(AutoencoderModel& model, const std::vector<DenseArray>& images,
                  const AutoencoderConfig& config);

/// Encoder + bottleneck only; the decoder is never evaluated.
DenseArray bottleneck_features(const AutoencoderModel& model, const DenseArray& image);

/// Global average over spatial positions of the bottleneck map.
std::vector<float> ssl_vector(const AutoencoderModel& model, const DenseArray& image);

// --- exposed for gradient tests ------------------------------------------

/// Flat views over every parameter array of the model, encoder first.
std::vector<DenseArray*> parameter_arrays(AutoencoderModel& model);

struct ModelGrads {
    std::vector<DenseArray> grads;  // aligned with parameter_arrays order
};

/// Loss and analytic parameter gradients for one (input, target) pair.
double loss_and_gradients(const AutoencoderModel& model, const DenseArray& input,
                          const DenseArray& target, ModelGrads& out);

}  // namespace texfv
