#include "texfv/gmm.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <numeric>
#include <random>
#include <string>

namespace texfv {

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;

// Per-component log densities for one point, written into `out` (size K).
void component_logpdf(const GaussianMixture& gmm, const float* x, double* out) {
    const std::size_t K = gmm.K, D = gmm.D;
    for (std::size_t i = 0; i < K; ++i) {
        double quad = 0.0, logdet = 0.0;
        const float* mu = gmm.means.data() + i * D;
        const float* var = gmm.variances.data() + i * D;
        for (std::size_t d = 0; d < D; ++d) {
            const double diff = static_cast<double>(x[d]) - static_cast<double>(mu[d]);
            const double v = var[d];
            quad += diff * diff / v;
            logdet += std::log(v);
        }
        out[i] = -0.5 * (static_cast<double>(D) * kLog2Pi + logdet + quad);
    }
}

// log sum_i w_i exp(lp_i), max-subtracted.
double log_mixture(const GaussianMixture& gmm, const double* lp) {
    double hi = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < gmm.K; ++i)
        hi = std::max(hi, lp[i] + std::log(static_cast<double>(gmm.weights[i])));
    double acc = 0.0;
    for (std::size_t i = 0; i < gmm.K; ++i)
        acc += std::exp(lp[i] + std::log(static_cast<double>(gmm.weights[i])) - hi);
    return hi + std::log(acc);
}

void check_rows(const DenseArray& rows) {
    if (rows.rank() != 2) throw ValidationError("gmm: descriptor matrix must be rank 2");
}

}  // namespace

std::vector<double> responsibilities(const GaussianMixture& gmm, const float* x) {
    std::vector<double> lp(gmm.K);
    component_logpdf(gmm, x, lp.data());
    double hi = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < gmm.K; ++i) {
        lp[i] += std::log(static_cast<double>(gmm.weights[i]));
        hi = std::max(hi, lp[i]);
    }
    double total = 0.0;
    for (auto& v : lp) { v = std::exp(v - hi); total += v; }
    for (auto& v : lp) v /= total;
    return lp;
}

double log_likelihood(const GaussianMixture& gmm, const DenseArray& rows) {
    check_rows(rows);
    gmm.validate_point_dim(rows.extent(1));
    const std::size_t T = rows.extent(0);
    std::vector<double> lp(gmm.K);
    double acc = 0.0;
    for (std::size_t t = 0; t < T; ++t) {
        component_logpdf(gmm, rows.data() + t * gmm.D, lp.data());
        acc += log_mixture(gmm, lp.data());
    }
    return acc;
}

GaussianMixture kmeans_init(const DenseArray& rows, std::size_t K, std::uint64_t seed,
                            double variance_floor) {
    check_rows(rows);
    const std::size_t T = rows.extent(0), D = rows.extent(1);
    if (K == 0) throw ValidationError("kmeans_init: K must be at least 1");
    if (T < K) throw ValidationError("kmeans_init: need at least K points (T=" +
                                     std::to_string(T) + ", K=" + std::to_string(K) + ")");
    std::mt19937_64 rng(seed);

    // k-means++ seeding.
    std::vector<std::vector<double>> centers;
    std::uniform_int_distribution<std::size_t> first(0, T - 1);
    auto point = [&](std::size_t t) {
        std::vector<double> p(D);
        for (std::size_t d = 0; d < D; ++d) p[d] = rows.at(t, d);
        return p;
    };
    centers.push_back(point(first(rng)));
    std::vector<double> dist2(T, std::numeric_limits<double>::infinity());
    while (centers.size() < K) {
        double total = 0.0;
        for (std::size_t t = 0; t < T; ++t) {
            double d2 = 0.0;
            const auto& c = centers.back();
            for (std::size_t d = 0; d < D; ++d) {
                const double diff = rows.at(t, d) - c[d];
                d2 += diff * diff;
            }
            dist2[t] = std::min(dist2[t], d2);
            total += dist2[t];
        }
        if (total <= 0.0) {
            // All remaining mass at existing centers; pick uniformly.
            centers.push_back(point(first(rng)));
            continue;
        }
        std::uniform_real_distribution<double> u(0.0, total);
        double r = u(rng), run = 0.0;
        std::size_t chosen = T - 1;
        for (std::size_t t = 0; t < T; ++t) {
            run += dist2[t];
            if (run >= r) { chosen = t; break; }
        }
        centers.push_back(point(chosen));
    }

    // Lloyd refinement.
    std::vector<std::size_t> assign(T, 0);
    for (int iter = 0; iter < 10; ++iter) {
        for (std::size_t t = 0; t < T; ++t) {
            double best = std::numeric_limits<double>::infinity();
            std::size_t arg = 0;
            for (std::size_t i = 0; i < K; ++i) {
                double d2 = 0.0;
                for (std::size_t d = 0; d < D; ++d) {
                    const double diff = rows.at(t, d) - centers[i][d];
                    d2 += diff * diff;
                }
                if (d2 < best) { best = d2; arg = i; }
            }
            assign[t] = arg;
        }
        std::vector<std::vector<double>> sums(K, std::vector<double>(D, 0.0));
        std::vector<std::size_t> counts(K, 0);
        for (std::size_t t = 0; t < T; ++t) {
            ++counts[assign[t]];
            for (std::size_t d = 0; d < D; ++d) sums[assign[t]][d] += rows.at(t, d);
        }
        for (std::size_t i = 0; i < K; ++i)
            if (counts[i] > 0)
                for (std::size_t d = 0; d < D; ++d)
                    centers[i][d] = sums[i][d] / static_cast<double>(counts[i]);
    }

    GaussianMixture gmm;
    gmm.K = K;
    gmm.D = D;
    gmm.weights.assign(K, 0.0);
    gmm.means = DenseArray({K, D});
    gmm.variances = DenseArray({K, D});
    std::vector<std::size_t> counts(K, 0);
    std::vector<std::vector<double>> sq(K, std::vector<double>(D, 0.0));
    for (std::size_t t = 0; t < T; ++t) {
        const std::size_t i = assign[t];
        ++counts[i];
        for (std::size_t d = 0; d < D; ++d) {
            const double diff = rows.at(t, d) - centers[i][d];
            sq[i][d] += diff * diff;
        }
    }
    for (std::size_t i = 0; i < K; ++i) {
        // Empty clusters get a uniform-ish fallback so EM can recover.
        const double frac = counts[i] > 0
                                ? static_cast<double>(counts[i]) / static_cast<double>(T)
                                : 1.0 / static_cast<double>(T);
        gmm.weights[i] = frac;
        for (std::size_t d = 0; d < D; ++d) {
            gmm.means.at(i, d) = static_cast<float>(centers[i][d]);
            const double v = counts[i] > 0 ? sq[i][d] / static_cast<double>(counts[i]) : 1.0;
            gmm.variances.at(i, d) = static_cast<float>(std::max(v, variance_floor));
        }
    }
    // Renormalize in case of empty-cluster fallbacks.
    double wsum = 0.0;
    for (auto w : gmm.weights) wsum += w;
    for (auto& w : gmm.weights) w /= wsum;
    return gmm;
}

EmResult fit_em(const DenseArray& rows, const EmConfig& config) {
    check_rows(rows);
    const std::size_t T = rows.extent(0), D = rows.extent(1), K = config.K;
    if (K == 0) throw ValidationError("fit_em: K must be at least 1");
    if (T < K) throw ValidationError("fit_em: need at least K descriptors (T=" +
                                     std::to_string(T) + ", K=" + std::to_string(K) + ")");
    std::mt19937_64 rng(config.rng_seed ^ 0x9e3779b97f4a7c15ull);

    // EM statistics and parameters are kept in double during fitting so the
    // monotonicity guarantee survives; the result is narrowed to float once.
    std::vector<double> weights(K), means(K * D), vars(K * D);
    if (config.init == EmConfig::Init::kmeans) {
        GaussianMixture init = kmeans_init(rows, K, config.rng_seed, config.variance_floor);
        for (std::size_t i = 0; i < K; ++i) {
            weights[i] = init.weights[i];
            for (std::size_t d = 0; d < D; ++d) {
                means[i * D + d] = init.means.at(i, d);
                vars[i * D + d] = init.variances.at(i, d);
            }
        }
    } else {
        std::uniform_int_distribution<std::size_t> pick(0, T - 1);
        std::fill(weights.begin(), weights.end(), 1.0 / static_cast<double>(K));
        std::fill(vars.begin(), vars.end(), 1.0);
        for (std::size_t i = 0; i < K; ++i) {
            const std::size_t t = pick(rng);
            for (std::size_t d = 0; d < D; ++d) means[i * D + d] = rows.at(t, d);
        }
    }

    EmResult result;
    std::vector<double> lp(K), gamma(K);
    std::vector<double> nk(K), mean_acc(K * D), var_acc(K * D);
    double prev_ll = -std::numeric_limits<double>::infinity();

    for (std::size_t iter = 0; iter < config.max_iters; ++iter) {
        std::fill(nk.begin(), nk.end(), 0.0);
        std::fill(mean_acc.begin(), mean_acc.end(), 0.0);
        std::fill(var_acc.begin(), var_acc.end(), 0.0);
        double ll = 0.0;

        for (std::size_t t = 0; t < T; ++t) {
            const float* x = rows.data() + t * D;
            double hi = -std::numeric_limits<double>::infinity();
            for (std::size_t i = 0; i < K; ++i) {
                double quad = 0.0, logdet = 0.0;
                for (std::size_t d = 0; d < D; ++d) {
                    const double diff = static_cast<double>(x[d]) - means[i * D + d];
                    quad += diff * diff / vars[i * D + d];
                    logdet += std::log(vars[i * D + d]);
                }
                lp[i] = std::log(weights[i]) -
                        0.5 * (static_cast<double>(D) * kLog2Pi + logdet + quad);
                hi = std::max(hi, lp[i]);
            }
            double total = 0.0;
            for (std::size_t i = 0; i < K; ++i) { gamma[i] = std::exp(lp[i] - hi); total += gamma[i]; }
            ll += hi + std::log(total);
            for (std::size_t i = 0; i < K; ++i) {
                const double g = gamma[i] / total;
                nk[i] += g;
                for (std::size_t d = 0; d < D; ++d) {
                    const double xv = x[d];
                    mean_acc[i * D + d] += g * xv;
                    var_acc[i * D + d] += g * xv * xv;
                }
            }
        }
        result.loglik_history.push_back(ll);

        // M-step.
        for (std::size_t i = 0; i < K; ++i) {
            if (nk[i] < 1e-10) {
                std::uniform_int_distribution<std::size_t> pick(0, T - 1);
                const std::size_t t = pick(rng);
                std::cerr << "fit_em: component " << i << " collapsed at iteration "
                          << iter << ", reseeding to data point " << t << "\n";
                weights[i] = 1.0 / static_cast<double>(T);
                for (std::size_t d = 0; d < D; ++d) {
                    means[i * D + d] = rows.at(t, d);
                    vars[i * D + d] = 1.0;
                }
                continue;
            }
            weights[i] = nk[i] / static_cast<double>(T);
            for (std::size_t d = 0; d < D; ++d) {
                const double mu = mean_acc[i * D + d] / nk[i];
                const double var = var_acc[i * D + d] / nk[i] - mu * mu;
                means[i * D + d] = mu;
                vars[i * D + d] = std::max(var, config.variance_floor);
            }
        }
        double wsum = 0.0;
        for (auto w : weights) wsum += w;
        for (auto& w : weights) w /= wsum;

        if (iter > 0 && std::abs(ll - prev_ll) < config.tol * std::abs(prev_ll)) break;
        prev_ll = ll;
    }

    GaussianMixture gmm;
    gmm.K = K;
    gmm.D = D;
    gmm.weights.resize(K);
    gmm.means = DenseArray({K, D});
    gmm.variances = DenseArray({K, D});
    double wsum = 0.0;
    for (std::size_t i = 0; i < K; ++i) {
        gmm.weights[i] = weights[i];
        wsum += weights[i];
        for (std::size_t d = 0; d < D; ++d) {
            gmm.means.at(i, d) = static_cast<float>(means[i * D + d]);
            gmm.variances.at(i, d) = static_cast<float>(vars[i * D + d]);
        }
    }
    for (auto& w : gmm.weights) w /= wsum;
    result.gmm = std::move(gmm);
    return result;
}

}  // namespace texfv
