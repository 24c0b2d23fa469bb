#include "texfv/features.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "texfv/serialize.hpp"
#include "texfv/tensor_ops.hpp"

namespace texfv {

Reduction reduction_from_string(const std::string& s) {
    if (s == "pca") return Reduction::pca;
    if (s == "avgpool") return Reduction::avgpool;
    if (s == "maxpool") return Reduction::maxpool;
    throw ConfigError("unknown reduction: " + s);
}

DenseArray map_to_descriptors(const DenseArray& map) {
    if (map.rank() != 3) throw DimensionError("map_to_descriptors: rank must be 3");
    const std::size_t C = map.extent(0), H = map.extent(1), W = map.extent(2);
    DenseArray rows({H * W, C});
    for (std::size_t h = 0; h < H; ++h)
        for (std::size_t w = 0; w < W; ++w)
            for (std::size_t c = 0; c < C; ++c)
                rows.at(h * W + w, c) = map.at(c, h, w);
    return rows;
}

PcaModel fit_pca(const DenseArray& rows, std::size_t D) {
    if (rows.rank() != 2) throw ValidationError("fit_pca: rows must be rank 2");
    const std::size_t T = rows.extent(0), Din = rows.extent(1);
    if (D > Din) throw ValidationError("fit_pca: target dimension exceeds input dimension");
    if (T < D) throw ValidationError("fit_pca: need at least D rows");

    PcaModel model;
    model.mean.assign(Din, 0.0f);
    std::vector<double> mean(Din, 0.0);
    for (std::size_t t = 0; t < T; ++t)
        for (std::size_t d = 0; d < Din; ++d) mean[d] += rows.at(t, d);
    for (std::size_t d = 0; d < Din; ++d) {
        mean[d] /= static_cast<double>(T);
        model.mean[d] = static_cast<float>(mean[d]);
    }

    // Covariance (MLE scaling) accumulated in double.
    std::vector<double> cov(Din * Din, 0.0);
    for (std::size_t t = 0; t < T; ++t) {
        const float* x = rows.data() + t * Din;
        for (std::size_t i = 0; i < Din; ++i) {
            const double xi = x[i] - mean[i];
            for (std::size_t j = i; j < Din; ++j)
                cov[i * Din + j] += xi * (x[j] - mean[j]);
        }
    }
    DenseArray S({Din, Din});
    for (std::size_t i = 0; i < Din; ++i)
        for (std::size_t j = i; j < Din; ++j) {
            const float v = static_cast<float>(cov[i * Din + j] / static_cast<double>(T));
            S.at(i, j) = v;
            S.at(j, i) = v;
        }

    EighResult eig = eigh(S);
    model.components = DenseArray({Din, D});
    model.explained_variance.resize(D);
    for (std::size_t k = 0; k < D; ++k) {
        model.explained_variance[k] = static_cast<float>(std::max(eig.eigenvalues[k], 0.0));
        for (std::size_t i = 0; i < Din; ++i)
            model.components.at(i, k) = eig.eigenvectors.at(i, k);
    }
    return model;
}

DenseArray reduce(const DenseArray& rows, Reduction method, std::size_t D,
                  const PcaModel* pca) {
    if (rows.rank() != 2) throw ValidationError("reduce: rows must be rank 2");
    const std::size_t T = rows.extent(0), Din = rows.extent(1);
    if (method == Reduction::pca) {
        if (pca == nullptr) throw ValidationError("reduce: pca model required");
        if (pca->mean.size() != Din || pca->components.extent(1) != D)
            throw ValidationError("reduce: pca model dimensions do not match");
        DenseArray out({T, D});
        for (std::size_t t = 0; t < T; ++t) {
            const float* x = rows.data() + t * Din;
            for (std::size_t k = 0; k < D; ++k) {
                double acc = 0.0;
                for (std::size_t i = 0; i < Din; ++i)
                    acc += (static_cast<double>(x[i]) - pca->mean[i]) *
                           pca->components.at(i, k);
                out.at(t, k) = static_cast<float>(acc);
            }
        }
        return out;
    }
    if (Din % D != 0)
        throw ValidationError("reduce: pooling needs D (" + std::to_string(D) +
                              ") to divide D_in (" + std::to_string(Din) + ")");
    const std::size_t group = Din / D;
    DenseArray out({T, D});
    for (std::size_t t = 0; t < T; ++t) {
        const float* x = rows.data() + t * Din;
        for (std::size_t k = 0; k < D; ++k) {
            if (method == Reduction::avgpool) {
                double acc = 0.0;
                for (std::size_t g = 0; g < group; ++g) acc += x[k * group + g];
                out.at(t, k) = static_cast<float>(acc / static_cast<double>(group));
            } else {
                float best = x[k * group];
                for (std::size_t g = 1; g < group; ++g)
                    best = std::max(best, x[k * group + g]);
                out.at(t, k) = best;
            }
        }
    }
    return out;
}

LocalDescriptorSet aggregate(const std::vector<DenseArray>& tap_outputs) {
    if (tap_outputs.empty()) throw ValidationError("aggregate: no taps");
    const std::size_t D = tap_outputs[0].extent(1);
    std::size_t T = 0;
    for (const auto& m : tap_outputs) {
        if (m.rank() != 2 || m.extent(1) != D)
            throw DimensionError("aggregate: mixed descriptor dimensions");
        T += m.extent(0);
    }
    LocalDescriptorSet set;
    set.rows = DenseArray({T, D});
    set.tap_of_row.reserve(T);
    std::size_t row = 0;
    for (std::size_t tap = 0; tap < tap_outputs.size(); ++tap) {
        const auto& m = tap_outputs[tap];
        std::copy(m.data(), m.data() + m.size(), set.rows.data() + row * D);
        for (std::size_t r = 0; r < m.extent(0); ++r)
            set.tap_of_row.push_back(static_cast<std::uint32_t>(tap));
        row += m.extent(0);
    }
    return set;
}

std::vector<TaggedArray> ingest_feature_file(const std::string& path) {
    std::vector<TaggedArray> records = read_tfv1(path);
    if (records.empty()) throw ValidationError("ingest_feature_file: empty tap list in " + path);
    return records;
}

}  // namespace texfv
