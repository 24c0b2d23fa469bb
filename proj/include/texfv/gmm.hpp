#pragma once

#include <cstdint>
#include <vector>

#include "texfv/dense_array.hpp"

namespace texfv {

/// Diagonal-covariance Gaussian mixture: the visual-word dictionary.
struct GaussianMixture {
    std::size_t K = 0;
    std::size_t D = 0;
    std::vector<double> weights;  // K, simplex (double so the sum-to-one
                                  // invariant holds at 1e-9)
    DenseArray means;            // [K,D]
    DenseArray variances;        // [K,D], floored

    void validate_point_dim(std::size_t d) const {
        if (d != D) throw ValidationError("gmm: descriptor dimension mismatch");
    }
};

struct EmConfig {
    std::size_t K = 16;
    std::size_t max_iters = 100;
    double tol = 1e-5;              // relative log-likelihood change
    double variance_floor = 1e-4;
    std::uint64_t rng_seed = 0;
    enum class Init { kmeans, random } init = Init::kmeans;
};

/// k-means++ seeding plus 10 Lloyd iterations; weights are cluster
/// fractions, variances within-cluster (floored).
GaussianMixture kmeans_init(const DenseArray& rows, std::size_t K, std::uint64_t seed,
                            double variance_floor = 1e-4);

struct EmResult {
    GaussianMixture gmm;
    std::vector<double> loglik_history;  // non-decreasing within 1e-9
};

/// EM over descriptor rows [T,D]; T >= K required.
EmResult fit_em(const DenseArray& rows, const EmConfig& config);

/// Posterior component probabilities for one descriptor (log-space E-step).
std::vector<double> responsibilities(const GaussianMixture& gmm, const float* x);

/// Total log-likelihood of the rows under the mixture (log-sum-exp stabilized).
double log_likelihood(const GaussianMixture& gmm, const DenseArray& rows);

}  // namespace texfv
