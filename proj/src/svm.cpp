#include "texfv/svm.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <numeric>
#include <random>
#include <set>
#include <string>

namespace texfv {

std::vector<double> phi_transform(const std::vector<double>& x) {
    std::vector<double> out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double r = std::sqrt(std::abs(x[i]));
        out[i] = x[i] < 0.0 ? -r : r;
    }
    return out;
}

std::vector<float> phi_transform(const std::vector<float>& x) {
    std::vector<float> out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const float r = std::sqrt(std::abs(x[i]));
        out[i] = x[i] < 0.0f ? -r : r;
    }
    return out;
}

double bhattacharyya(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size())
        throw ValidationError("bhattacharyya: length mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double p = x[i] * y[i];
        const double r = std::sqrt(std::abs(p));
        acc += p < 0.0 ? -r : r;
    }
    return acc;
}

double bhattacharyya(const std::vector<float>& x, const std::vector<float>& y) {
    if (x.size() != y.size())
        throw ValidationError("bhattacharyya: length mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double p = static_cast<double>(x[i]) * static_cast<double>(y[i]);
        acc += (p < 0.0 ? -1.0 : (p > 0.0 ? 1.0 : 0.0)) * std::sqrt(std::abs(p));
    }
    return acc;
}

namespace {

// Dual coordinate descent for min_w 1/2 w.w + C sum max(0, 1 - y_i w.x_i),
// hinge loss (L1), bias handled as an augmented constant feature.
// Follows the shrinking-free variant of the standard liblinear solver.
std::vector<double> solve_binary(const DenseArray& features, const std::vector<int8_t>& y,
                                 double C, double eps, std::size_t max_epochs,
                                 std::mt19937_64& rng) {
    const std::size_t N = features.extent(0), dim = features.extent(1) + 1;
    std::vector<double> w(dim, 0.0), alpha(N, 0.0), qii(N);
    for (std::size_t i = 0; i < N; ++i) {
        double q = 1.0;  // augmented bias feature
        const float* x = features.data() + i * (dim - 1);
        for (std::size_t d = 0; d + 1 < dim; ++d) q += static_cast<double>(x[d]) * x[d];
        qii[i] = q;
    }

    std::vector<std::size_t> order(N);
    std::iota(order.begin(), order.end(), 0);
    double violation = 0.0;
    for (std::size_t epoch = 0; epoch < max_epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        violation = 0.0;
        for (std::size_t i : order) {
            const float* x = features.data() + i * (dim - 1);
            double wx = w[dim - 1];
            for (std::size_t d = 0; d + 1 < dim; ++d) wx += w[d] * x[d];
            const double G = y[i] * wx - 1.0;

            double PG = G;
            if (alpha[i] <= 0.0) PG = std::min(G, 0.0);
            else if (alpha[i] >= C) PG = std::max(G, 0.0);
            violation = std::max(violation, std::abs(PG));
            if (PG == 0.0) continue;

            const double old = alpha[i];
            alpha[i] = std::clamp(old - G / qii[i], 0.0, C);
            const double delta = (alpha[i] - old) * y[i];
            if (delta != 0.0) {
                for (std::size_t d = 0; d + 1 < dim; ++d) w[d] += delta * x[d];
                w[dim - 1] += delta;
            }
        }
        if (violation < eps) return w;
    }
    std::cerr << "train_ovr: epoch cap reached, final violation " << violation << "\n";
    return w;
}

}  // namespace

LinearSvmModel train_ovr(const DenseArray& features, const std::vector<int>& labels,
                         const SvmConfig& config) {
    if (features.rank() != 2) throw ValidationError("train_ovr: features must be rank 2");
    const std::size_t N = features.extent(0), dim = features.extent(1);
    if (labels.size() != N) throw ValidationError("train_ovr: label count mismatch");
    std::set<int> classes(labels.begin(), labels.end());
    if (classes.size() < 2) throw ValidationError("train_ovr: need at least 2 classes");

    LinearSvmModel model;
    model.C = config.C;
    model.labels.assign(classes.begin(), classes.end());
    for (int cls : model.labels) {
        std::vector<int8_t> y(N);
        for (std::size_t i = 0; i < N; ++i) y[i] = labels[i] == cls ? 1 : -1;
        std::mt19937_64 rng(config.rng_seed ^ static_cast<std::uint64_t>(cls + 1) * 0x9e3779b97f4a7c15ull);
        const std::vector<double> w =
            solve_binary(features, y, config.C, config.epsilon, config.max_epochs, rng);
        std::vector<float> wf(dim);
        for (std::size_t d = 0; d < dim; ++d) wf[d] = static_cast<float>(w[d]);
        model.weights.push_back(std::move(wf));
        model.bias.push_back(static_cast<float>(w[dim]));
    }
    return model;
}

Prediction predict(const LinearSvmModel& model, const std::vector<float>& feature) {
    if (model.weights.empty()) throw ValidationError("predict: empty model");
    if (feature.size() != model.weights[0].size())
        throw ValidationError("predict: feature dimension " + std::to_string(feature.size()) +
                              " != model dimension " + std::to_string(model.weights[0].size()));
    Prediction p;
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < model.weights.size(); ++c) {
        double s = model.bias[c];
        for (std::size_t d = 0; d < feature.size(); ++d)
            s += static_cast<double>(model.weights[c][d]) * feature[d];
        p.scores.push_back(static_cast<float>(s));
        if (s > best) {  // ties fall to the smallest class index
            best = s;
            p.label = model.labels[c];
        }
    }
    return p;
}

}  // namespace texfv
