#pragma once

#include <optional>
#include <vector>

#include "texfv/dense_array.hpp"
#include "texfv/gmm.hpp"

namespace texfv {

/// Fisher Vector of a descriptor set: K weight components, then K*D mean
/// components (component-major), then K*D variance components.
struct FisherVector {
    std::vector<float> values;
    std::size_t K = 0;
    std::size_t D = 0;

    std::size_t length() const { return K * (2 * D + 1); }
};

/// Closed-form Fisher Vector of descriptor rows [T,D] under the mixture.
FisherVector encode(const GaussianMixture& gmm, const DenseArray& rows);

/// Elementwise signed square root.
std::vector<float> power_normalize(const std::vector<float>& v);
std::vector<double> power_normalize(const std::vector<double>& v);

/// v / ||v||2; vectors with norm <= 1e-12 pass through unchanged.
std::vector<float> l2_normalize(const std::vector<float>& v);
std::vector<double> l2_normalize(const std::vector<double>& v);

enum class Variant { FV, FV_FC, FVAE, FCFVAE };

Variant variant_from_string(const std::string& s);
std::string variant_name(Variant v);

/// Concatenated descriptor, segments ordered [FV, FC?, SSL?].
struct FusedDescriptor {
    Variant variant = Variant::FV;
    std::vector<float> values;
    std::size_t fv_len = 0;
    std::size_t fc_len = 0;   // 0 when the variant has no FC segment
    std::size_t ssl_len = 0;  // 0 when the variant has no SSL segment
};

/// fv must already be power+L2 normalized; SSL/FC segments are each
/// L2-normalized here before concatenation.
FusedDescriptor fuse(const FisherVector& fv, const std::optional<std::vector<float>>& ssl,
                     const std::optional<std::vector<float>>& fc, Variant variant);

}  // namespace texfv
