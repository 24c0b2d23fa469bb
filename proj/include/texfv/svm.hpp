#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "texfv/dense_array.hpp"

namespace texfv {

/// Explicit feature map of the Bhattacharyya coefficient kernel:
/// phi(x)_i = sign(x_i) * sqrt(|x_i|).
std::vector<float> phi_transform(const std::vector<float>& x);
std::vector<double> phi_transform(const std::vector<double>& x);

/// K(x,y) = sum_i sign(x_i y_i) sqrt(|x_i y_i|).
double bhattacharyya(const std::vector<float>& x, const std::vector<float>& y);
double bhattacharyya(const std::vector<double>& x, const std::vector<double>& y);

/// One-vs-rest linear SVMs; weights include no implicit bias, the bias is
/// trained as an augmented constant-1 feature and stored separately.
struct LinearSvmModel {
    std::vector<std::vector<float>> weights;  // one per class
    std::vector<float> bias;                  // one per class
    std::vector<int> labels;                  // class label per row of weights
    float C = 1.0f;
};

struct SvmConfig {
    float C = 1.0f;
    double epsilon = 1e-4;       // max dual-coordinate violation at the fixed point
    std::size_t max_epochs = 1000;
    std::uint64_t rng_seed = 0;
};

/// Trains one L2-regularized hinge-loss binary SVM per class by dual
/// coordinate descent. features: [N, dim] rows already phi-transformed.
LinearSvmModel train_ovr(const DenseArray& features, const std::vector<int>& labels,
                         const SvmConfig& config);

struct Prediction {
    int label = 0;
    std::vector<float> scores;  // one per class, model label order
};

Prediction predict(const LinearSvmModel& model, const std::vector<float>& feature);

}  // namespace texfv
