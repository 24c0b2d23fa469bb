#include "texfv/fisher.hpp"

#include <cmath>
#include <string>

namespace texfv {

FisherVector encode(const GaussianMixture& gmm, const DenseArray& rows) {
    if (rows.rank() != 2) throw ValidationError("encode: descriptor matrix must be rank 2");
    const std::size_t T = rows.extent(0), D = rows.extent(1), K = gmm.K;
    if (T == 0) throw ValidationError("encode: empty descriptor set");
    gmm.validate_point_dim(D);

    // Accumulate gradient statistics in double; T can reach ~10^5.
    std::vector<double> gw(K, 0.0), gmu(K * D, 0.0), gsig(K * D, 0.0);
    for (std::size_t t = 0; t < T; ++t) {
        const float* x = rows.data() + t * D;
        const std::vector<double> gamma = responsibilities(gmm, x);
        for (std::size_t i = 0; i < K; ++i) {
            gw[i] += gamma[i] - gmm.weights[i];
            for (std::size_t d = 0; d < D; ++d) {
                const double sigma = std::sqrt(static_cast<double>(gmm.variances.at(i, d)));
                const double z = (static_cast<double>(x[d]) - gmm.means.at(i, d)) / sigma;
                gmu[i * D + d] += gamma[i] * z;
                gsig[i * D + d] += gamma[i] * (z * z - 1.0);
            }
        }
    }

    FisherVector fv;
    fv.K = K;
    fv.D = D;
    fv.values.resize(K * (2 * D + 1));
    const double invT = 1.0 / static_cast<double>(T);
    for (std::size_t i = 0; i < K; ++i) {
        const double sw = std::sqrt(gmm.weights[i]);
        fv.values[i] = static_cast<float>(invT / sw * gw[i]);
        for (std::size_t d = 0; d < D; ++d) {
            fv.values[K + i * D + d] = static_cast<float>(invT / sw * gmu[i * D + d]);
            fv.values[K + K * D + i * D + d] =
                static_cast<float>(invT / (std::sqrt(2.0) * sw) * gsig[i * D + d]);
        }
    }
    return fv;
}

std::vector<double> power_normalize(const std::vector<double>& v) {
    std::vector<double> out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        const double r = std::sqrt(std::abs(v[i]));
        out[i] = v[i] < 0.0 ? -r : r;
    }
    return out;
}

std::vector<double> l2_normalize(const std::vector<double>& v) {
    double norm2 = 0.0;
    for (double x : v) norm2 += x * x;
    const double norm = std::sqrt(norm2);
    if (norm <= 1e-12) return v;
    std::vector<double> out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i] / norm;
    return out;
}

std::vector<float> power_normalize(const std::vector<float>& v) {
    std::vector<float> out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        const float r = std::sqrt(std::abs(v[i]));
        out[i] = v[i] < 0.0f ? -r : r;
    }
    return out;
}

std::vector<float> l2_normalize(const std::vector<float>& v) {
    double norm2 = 0.0;
    for (float x : v) norm2 += static_cast<double>(x) * static_cast<double>(x);
    const double norm = std::sqrt(norm2);
    if (norm <= 1e-12) return v;
    std::vector<float> out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i)
        out[i] = static_cast<float>(v[i] / norm);
    return out;
}

Variant variant_from_string(const std::string& s) {
    if (s == "fv" || s == "FV") return Variant::FV;
    if (s == "fvfc" || s == "FV+FC" || s == "fv+fc") return Variant::FV_FC;
    if (s == "fvae" || s == "FVAE") return Variant::FVAE;
    if (s == "fcfvae" || s == "FCFVAE") return Variant::FCFVAE;
    throw ConfigError("unknown variant: " + s);
}

std::string variant_name(Variant v) {
    switch (v) {
        case Variant::FV: return "FV";
        case Variant::FV_FC: return "FV+FC";
        case Variant::FVAE: return "FVAE";
        case Variant::FCFVAE: return "FCFVAE";
    }
    return "?";
}

FusedDescriptor fuse(const FisherVector& fv, const std::optional<std::vector<float>>& ssl,
                     const std::optional<std::vector<float>>& fc, Variant variant) {
    const bool wants_fc = variant == Variant::FV_FC || variant == Variant::FCFVAE;
    const bool wants_ssl = variant == Variant::FVAE || variant == Variant::FCFVAE;
    if (wants_fc && !fc)
        throw ValidationError("fuse: variant " + variant_name(variant) + " needs an FC vector");
    if (wants_ssl && !ssl)
        throw ValidationError("fuse: variant " + variant_name(variant) + " needs an SSL vector");

    FusedDescriptor out;
    out.variant = variant;
    out.fv_len = fv.values.size();
    out.values = fv.values;
    if (wants_fc) {
        const std::vector<float> seg = l2_normalize(*fc);
        out.fc_len = seg.size();
        out.values.insert(out.values.end(), seg.begin(), seg.end());
    }
    if (wants_ssl) {
        const std::vector<float> seg = l2_normalize(*ssl);
        out.ssl_len = seg.size();
        out.values.insert(out.values.end(), seg.begin(), seg.end());
    }
    return out;
}

}  // namespace texfv
