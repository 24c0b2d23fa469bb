#include "texfv/model_io.hpp"

#include <cstring>

namespace texfv {

namespace {

TaggedArray scalar_record(std::uint32_t id, std::vector<float> values) {
    const std::size_t n = values.size();
    return TaggedArray{id, DenseArray({n}, std::move(values))};
}

// Doubles carried bit-exactly through the f32-element TFV1 encoding:
// each double occupies two consecutive f32 slots (raw bytes, not a cast).
DenseArray pack_doubles(const std::vector<double>& v) {
    DenseArray out({v.size() * 2});
    std::memcpy(out.data(), v.data(), v.size() * sizeof(double));
    return out;
}

std::vector<double> unpack_doubles(const DenseArray& a) {
    if (a.size() % 2 != 0) throw FormatError("bundle: bad packed-double record length");
    std::vector<double> v(a.size() / 2);
    std::memcpy(v.data(), a.data(), v.size() * sizeof(double));
    return v;
}

const DenseArray& expect(const std::vector<TaggedArray>& records, std::size_t idx,
                         const char* section) {
    if (idx >= records.size())
        throw FormatError(std::string("bundle: section '") + section +
                          "' is missing record " + std::to_string(idx));
    return records[idx].array;
}

}  // namespace

std::vector<TaggedArray> autoencoder_to_records(const AutoencoderModel& model) {
    std::vector<TaggedArray> records;
    records.push_back(scalar_record(
        0, {static_cast<float>(model.config.levels),
            static_cast<float>(model.config.base_channels),
            static_cast<float>(model.in_channels),
            static_cast<float>(model.config.kernel_size),
            model.config.denoising ? 1.0f : 0.0f, model.config.noise_sigma}));
    auto params = parameter_arrays(const_cast<AutoencoderModel&>(model));
    std::uint32_t id = 1;
    for (const auto* p : params) records.push_back({id++, *p});
    return records;
}

AutoencoderModel autoencoder_from_records(const std::vector<TaggedArray>& records) {
    const DenseArray& meta = expect(records, 0, "ae");
    if (meta.size() < 6) throw FormatError("bundle: ae meta record too short");
    AutoencoderConfig config;
    config.levels = static_cast<std::size_t>(meta[0]);
    config.base_channels = static_cast<std::size_t>(meta[1]);
    config.kernel_size = static_cast<std::size_t>(meta[3]);
    config.denoising = meta[4] != 0.0f;
    config.noise_sigma = meta[5];
    AutoencoderModel model = make_autoencoder(config, static_cast<std::size_t>(meta[2]));
    auto params = parameter_arrays(model);
    if (records.size() != params.size() + 1)
        throw FormatError("bundle: ae section has " + std::to_string(records.size()) +
                          " records, expected " + std::to_string(params.size() + 1));
    for (std::size_t i = 0; i < params.size(); ++i) {
        const DenseArray& src = records[i + 1].array;
        if (!src.same_shape(*params[i]))
            throw FormatError("bundle: ae parameter " + std::to_string(i) + " shape mismatch");
        *params[i] = src;
    }
    return model;
}

std::vector<TaggedArray> pca_to_records(const PcaModel& model) {
    std::vector<TaggedArray> records;
    records.push_back(scalar_record(0, model.mean));
    records.push_back({1, model.components});
    records.push_back(scalar_record(2, model.explained_variance));
    return records;
}

PcaModel pca_from_records(const std::vector<TaggedArray>& records) {
    PcaModel model;
    model.mean = expect(records, 0, "pca").values();
    model.components = expect(records, 1, "pca");
    model.explained_variance = expect(records, 2, "pca").values();
    if (model.components.rank() != 2 || model.components.extent(0) != model.mean.size())
        throw FormatError("bundle: pca record shapes inconsistent");
    return model;
}

std::vector<TaggedArray> gmm_to_records(const GaussianMixture& gmm) {
    std::vector<TaggedArray> records;
    records.push_back(scalar_record(
        0, {static_cast<float>(gmm.K), static_cast<float>(gmm.D)}));
    records.push_back({1, pack_doubles(gmm.weights)});
    records.push_back({2, gmm.means});
    records.push_back({3, gmm.variances});
    return records;
}

GaussianMixture gmm_from_records(const std::vector<TaggedArray>& records) {
    const DenseArray& meta = expect(records, 0, "gmm");
    if (meta.size() < 2) throw FormatError("bundle: gmm meta record too short");
    GaussianMixture gmm;
    gmm.K = static_cast<std::size_t>(meta[0]);
    gmm.D = static_cast<std::size_t>(meta[1]);
    gmm.weights = unpack_doubles(expect(records, 1, "gmm"));
    gmm.means = expect(records, 2, "gmm");
    gmm.variances = expect(records, 3, "gmm");
    if (gmm.weights.size() != gmm.K || gmm.means.size() != gmm.K * gmm.D ||
        !gmm.means.same_shape(gmm.variances))
        throw FormatError("bundle: gmm record shapes inconsistent");
    return gmm;
}

std::vector<TaggedArray> svm_to_records(const LinearSvmModel& model) {
    const std::size_t n = model.weights.size();
    const std::size_t dim = n > 0 ? model.weights[0].size() : 0;
    std::vector<TaggedArray> records;
    records.push_back(scalar_record(
        0, {static_cast<float>(n), static_cast<float>(dim), model.C}));
    std::vector<float> labels(n);
    for (std::size_t i = 0; i < n; ++i) labels[i] = static_cast<float>(model.labels[i]);
    records.push_back(scalar_record(1, std::move(labels)));
    DenseArray w({n, dim});
    for (std::size_t i = 0; i < n; ++i)
        std::memcpy(w.data() + i * dim, model.weights[i].data(), dim * sizeof(float));
    records.push_back({2, std::move(w)});
    records.push_back(scalar_record(3, model.bias));
    return records;
}

LinearSvmModel svm_from_records(const std::vector<TaggedArray>& records) {
    const DenseArray& meta = expect(records, 0, "svm");
    if (meta.size() < 3) throw FormatError("bundle: svm meta record too short");
    const std::size_t n = static_cast<std::size_t>(meta[0]);
    const std::size_t dim = static_cast<std::size_t>(meta[1]);
    LinearSvmModel model;
    model.C = meta[2];
    const DenseArray& labels = expect(records, 1, "svm");
    const DenseArray& w = expect(records, 2, "svm");
    const DenseArray& bias = expect(records, 3, "svm");
    if (labels.size() != n || bias.size() != n || w.size() != n * dim)
        throw FormatError("bundle: svm record shapes inconsistent");
    for (std::size_t i = 0; i < n; ++i) {
        model.labels.push_back(static_cast<int>(labels[i]));
        model.weights.emplace_back(w.data() + i * dim, w.data() + (i + 1) * dim);
        model.bias.push_back(bias[i]);
    }
    return model;
}

}  // namespace texfv
