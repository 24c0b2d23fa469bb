#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "texfv/dense_array.hpp"

namespace texfv {

enum class Reduction { pca, avgpool, maxpool };

Reduction reduction_from_string(const std::string& s);

struct TapConfig {
    std::size_t n_layers = 2;   // taps, deepest first (bottleneck, E_J, E_{J-1}, ...)
    Reduction reduction = Reduction::pca;
    std::size_t target_dim = 64;
};

/// Descriptor matrix plus the tap each row came from.
struct LocalDescriptorSet {
    DenseArray rows;                     // [T,D]
    std::vector<std::uint32_t> tap_of_row;
};

struct PcaModel {
    std::vector<float> mean;        // D_in
    DenseArray components;          // [D_in, D], orthonormal columns
    std::vector<float> explained_variance;  // D, descending
};

/// One descriptor per spatial position: [C,H,W] -> [H*W, C], row h*W+w.
DenseArray map_to_descriptors(const DenseArray& map);

/// Covariance eigendecomposition of mean-centered rows; keeps top-D components.
PcaModel fit_pca(const DenseArray& rows, std::size_t D);

/// Project / pool rows [T,D_in] down to [T,D].
DenseArray reduce(const DenseArray& rows, Reduction method, std::size_t D,
                  const PcaModel* pca = nullptr);

/// Row-wise concatenation with tap provenance; all inputs share dimension D.
LocalDescriptorSet aggregate(const std::vector<DenseArray>& tap_outputs);

struct TaggedArray {
    std::uint32_t tap_id = 0;
    DenseArray array;
};

/// Reads tap feature maps from a TFV1 file (externally computed backbones).
std::vector<TaggedArray> ingest_feature_file(const std::string& path);

}  // namespace texfv
