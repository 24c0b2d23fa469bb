#include "texfv/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "texfv/serialize.hpp"
#include "texfv/tensor_ops.hpp"

namespace texfv {

namespace {

constexpr std::uint32_t kFcTapId = 0xFFFFFFFFu;

std::size_t to_size(const std::string& key, const std::string& v) {
    try {
        return static_cast<std::size_t>(std::stoull(v));
    } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "': expected integer, got '" + v + "'");
    }
}

double to_double(const std::string& key, const std::string& v) {
    try {
        return std::stod(v);
    } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "': expected number, got '" + v + "'");
    }
}

bool to_bool(const std::string& key, const std::string& v) {
    if (v == "1" || v == "true" || v == "yes") return true;
    if (v == "0" || v == "false" || v == "no") return false;
    throw ConfigError("config key '" + key + "': expected boolean, got '" + v + "'");
}

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

}  // namespace

void apply_override(PipelineConfig& cfg, const std::string& key, const std::string& value) {
    try {
        if (key == "dataset.root") cfg.dataset.root = value;
        else if (key == "dataset.width") cfg.dataset.resize_width = to_size(key, value);
        else if (key == "dataset.resize_mode") {
            if (value == "fixed_width") cfg.dataset.resize_mode = ResizeMode::fixed_width_keep_aspect;
            else if (value == "square") cfg.dataset.resize_mode = ResizeMode::square;
            else throw ConfigError("dataset.resize_mode: expected fixed_width or square");
        }
        else if (key == "dataset.color") {
            if (value == "rgb") cfg.dataset.color = ColorMode::rgb;
            else if (value == "gray") cfg.dataset.color = ColorMode::gray;
            else throw ConfigError("dataset.color: expected rgb or gray");
        }
        else if (key == "dataset.group_regex") cfg.dataset.group_regex = value;
        else if (key == "protocol.kind") cfg.protocol.kind = split_kind_from_string(value);
        else if (key == "protocol.rounds") cfg.protocol.rounds = to_size(key, value);
        else if (key == "protocol.seed") cfg.protocol.rng_seed = to_size(key, value);
        else if (key == "protocol.split_dir") cfg.protocol.split_dir = value;
        else if (key == "ae.levels") cfg.ae.levels = to_size(key, value);
        else if (key == "ae.base_channels") cfg.ae.base_channels = to_size(key, value);
        else if (key == "ae.kernel_size") cfg.ae.kernel_size = to_size(key, value);
        else if (key == "ae.denoising") cfg.ae.denoising = to_bool(key, value);
        else if (key == "ae.noise_sigma") cfg.ae.noise_sigma = static_cast<float>(to_double(key, value));
        else if (key == "ae.lr") cfg.ae.learning_rate = static_cast<float>(to_double(key, value));
        else if (key == "ae.epochs") cfg.ae.epochs = to_size(key, value);
        else if (key == "ae.batch") cfg.ae.batch_size = to_size(key, value);
        else if (key == "ae.seed") cfg.ae.rng_seed = to_size(key, value);
        else if (key == "features.layers") cfg.taps.n_layers = to_size(key, value);
        else if (key == "features.reduction") cfg.taps.reduction = reduction_from_string(value);
        else if (key == "features.dim") cfg.taps.target_dim = to_size(key, value);
        else if (key == "features.dir") cfg.features_dir = value;
        else if (key == "gmm.k") cfg.gmm.K = to_size(key, value);
        else if (key == "gmm.max_iters") cfg.gmm.max_iters = to_size(key, value);
        else if (key == "gmm.tol") cfg.gmm.tol = to_double(key, value);
        else if (key == "gmm.variance_floor") cfg.gmm.variance_floor = to_double(key, value);
        else if (key == "gmm.seed") cfg.gmm.rng_seed = to_size(key, value);
        else if (key == "gmm.init") {
            if (value == "kmeans") cfg.gmm.init = EmConfig::Init::kmeans;
            else if (value == "random") cfg.gmm.init = EmConfig::Init::random;
            else throw ConfigError("gmm.init: expected kmeans or random");
        }
        else if (key == "svm.c") cfg.svm.C = static_cast<float>(to_double(key, value));
        else if (key == "svm.epsilon") cfg.svm.epsilon = to_double(key, value);
        else if (key == "svm.max_epochs") cfg.svm.max_epochs = to_size(key, value);
        else if (key == "svm.seed") cfg.svm.rng_seed = to_size(key, value);
        else if (key == "variant") cfg.variant = variant_from_string(value);
        else if (key == "backbone") {
            if (value == "builtin") cfg.backbone = Backbone::builtin;
            else if (value == "external") cfg.backbone = Backbone::external;
            else throw ConfigError("backbone: expected builtin or external");
        }
        else if (key == "pretrain.transductive") cfg.transductive_pretrain = to_bool(key, value);
        else throw ConfigError("unknown config key '" + key + "'");
    } catch (const ValidationError& e) {
        throw ConfigError(std::string("config key '") + key + "': " + e.what());
    }
}

PipelineConfig parse_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);
    PipelineConfig cfg;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(path + ":" + std::to_string(lineno) + ": expected key = value");
        apply_override(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    return cfg;
}

std::vector<DenseArray> builtin_tap_maps(const AutoencoderModel& model,
                                         const DenseArray& image, std::size_t n_layers) {
    const std::size_t J = model.config.levels;
    if (n_layers < 1 || n_layers > J + 1)
        throw ValidationError("features.layers must be in [1, levels+1]");
    ForwardResult fr = forward(model, image);
    std::vector<DenseArray> taps;
    taps.push_back(std::move(fr.bottleneck));
    for (std::size_t i = 1; i < n_layers; ++i)
        taps.push_back(std::move(fr.encoder_outputs[J - i]));
    return taps;
}

namespace {

struct ImageFeatures {
    std::vector<DenseArray> tap_rows;  // per tap, [T_i, C_tap] descriptor rows
    std::vector<float> ssl;
    std::vector<float> fc;
};

// Encoder-only pass mirroring builtin_tap_maps without the decoder cost.
std::vector<DenseArray> encoder_tap_maps(const AutoencoderModel& model,
                                         const DenseArray& image, std::size_t n_layers) {
    const std::size_t J = model.config.levels;
    if (n_layers < 1 || n_layers > J + 1)
        throw ValidationError("features.layers must be in [1, levels+1]");
    std::vector<DenseArray> enc_outputs;
    DenseArray cur = image;
    for (std::size_t i = 0; i < J; ++i) {
        DenseArray t = relu(conv2d(cur, model.encoder[i].c1.w, model.encoder[i].c1.b,
                                   ConvSpec{model.config.kernel_size, 1,
                                            (model.config.kernel_size - 1) / 2,
                                            cur.extent(0), model.encoder[i].c1.w.extent(0)}));
        DenseArray e = relu(conv2d(t, model.encoder[i].c2.w, model.encoder[i].c2.b,
                                   ConvSpec{model.config.kernel_size, 1,
                                            (model.config.kernel_size - 1) / 2,
                                            t.extent(0), model.encoder[i].c2.w.extent(0)}));
        cur = maxpool2(e).values;
        enc_outputs.push_back(std::move(e));
    }
    DenseArray t = relu(conv2d(cur, model.bottleneck.c1.w, model.bottleneck.c1.b,
                               ConvSpec{model.config.kernel_size, 1,
                                        (model.config.kernel_size - 1) / 2,
                                        cur.extent(0), model.bottleneck.c1.w.extent(0)}));
    DenseArray b = relu(conv2d(t, model.bottleneck.c2.w, model.bottleneck.c2.b,
                               ConvSpec{model.config.kernel_size, 1,
                                        (model.config.kernel_size - 1) / 2,
                                        t.extent(0), model.bottleneck.c2.w.extent(0)}));
    std::vector<DenseArray> taps;
    taps.push_back(std::move(b));
    for (std::size_t i = 1; i < n_layers; ++i)
        taps.push_back(std::move(enc_outputs[J - i]));
    return taps;
}

std::vector<float> spatial_mean(const DenseArray& map) {
    const std::size_t C = map.extent(0), hw = map.extent(1) * map.extent(2);
    std::vector<float> v(C);
    for (std::size_t c = 0; c < C; ++c) {
        double acc = 0.0;
        for (std::size_t i = 0; i < hw; ++i) acc += map[c * hw + i];
        v[c] = static_cast<float>(acc / static_cast<double>(hw));
    }
    return v;
}

// phi applies only to segments that are not already power-normalized
// (the FV segment is; SSL/FC are not).
std::vector<float> phi_adjust(const FusedDescriptor& fused) {
    std::vector<float> out = fused.values;
    for (std::size_t i = fused.fv_len; i < out.size(); ++i) {
        const float r = std::sqrt(std::abs(out[i]));
        out[i] = out[i] < 0.0f ? -r : r;
    }
    return out;
}

}  // namespace

EvalReport run_pipeline(const PipelineConfig& cfg) {
    return run_pipeline(cfg, {}, nullptr);
}

EvalReport run_pipeline(const PipelineConfig& cfg,
                        const std::function<void(std::size_t, const Split&)>& on_round,
                        RoundArtifacts* last_round) {
    Dataset ds = load_dataset(cfg.dataset);
    const std::vector<Split> splits = make_splits(ds.records, cfg.protocol);
    const std::size_t n_classes = ds.class_names.size();
    const std::size_t n_images = ds.records.size();
    const std::size_t pad_multiple = std::size_t{1} << cfg.ae.levels;

    std::vector<DenseArray> padded;
    padded.reserve(n_images);
    for (const auto& rec : ds.records)
        padded.push_back(pad_reflect_to_multiple(rec.image, pad_multiple));

    const bool wants_fc = cfg.variant == Variant::FV_FC || cfg.variant == Variant::FCFVAE;
    const bool wants_ssl = cfg.variant == Variant::FVAE || cfg.variant == Variant::FCFVAE;

    EvalReport report;
    report.variant = variant_name(cfg.variant);

    for (std::size_t round = 0; round < splits.size(); ++round) {
        const Split& split = splits[round];
        if (on_round) on_round(round, split);
        try {
            // Stage 1: self-supervised pretraining (train split only, unless
            // the transductive flag widens it).
            AutoencoderConfig ae_cfg = cfg.ae;
            ae_cfg.rng_seed = cfg.ae.rng_seed + round;
            AutoencoderModel model = make_autoencoder(ae_cfg, padded[0].extent(0));
            if (cfg.backbone == Backbone::builtin && ae_cfg.epochs > 0) {
                std::vector<DenseArray> train_images;
                if (cfg.transductive_pretrain) train_images = padded;
                else
                    for (std::size_t i : split.train) train_images.push_back(padded[i]);
                train(model, train_images, ae_cfg);
            }

            // Stage 2: local descriptors per image.
            std::vector<ImageFeatures> feats(n_images);
            std::size_t n_taps = 0;
            for (std::size_t i = 0; i < n_images; ++i) {
                std::vector<DenseArray> maps;
                if (cfg.backbone == Backbone::builtin) {
                    maps = encoder_tap_maps(model, padded[i], cfg.taps.n_layers);
                    if (wants_ssl || wants_fc) feats[i].ssl = spatial_mean(maps[0]);
                    if (wants_fc) feats[i].fc = feats[i].ssl;  // no supervised head
                } else {
                    namespace fs = std::filesystem;
                    std::ostringstream name;
                    name << "img_" << std::setw(5) << std::setfill('0') << i << ".tfv";
                    const std::string path = (fs::path(cfg.features_dir) / name.str()).string();
                    for (auto& rec : ingest_feature_file(path)) {
                        if (rec.tap_id == kFcTapId) {
                            feats[i].fc = rec.array.values();
                            continue;
                        }
                        maps.push_back(std::move(rec.array));
                    }
                    if (maps.empty())
                        throw ValidationError("external feature file has no tap maps: " + path);
                    if (wants_fc && feats[i].fc.empty())
                        throw UnsupportedError("variant needs an FC vector but " + path +
                                               " has no FC record");
                    if (wants_ssl) feats[i].ssl = spatial_mean(maps[0]);
                }
                for (auto& m : maps) feats[i].tap_rows.push_back(map_to_descriptors(m));
                n_taps = feats[i].tap_rows.size();
            }

            // Effective shared dimension: smallest tap width, capped by config.
            std::size_t d_eff = cfg.taps.target_dim;
            for (std::size_t tap = 0; tap < n_taps; ++tap)
                d_eff = std::min(d_eff, feats[0].tap_rows[tap].extent(1));

            // Stage 3: per-tap reduction models fitted on the train split.
            std::vector<std::optional<PcaModel>> pca_per_tap(n_taps);
            for (std::size_t tap = 0; tap < n_taps; ++tap) {
                const std::size_t c_tap = feats[0].tap_rows[tap].extent(1);
                if (c_tap <= d_eff || cfg.taps.reduction != Reduction::pca) continue;
                std::size_t total = 0;
                for (std::size_t i : split.train) total += feats[i].tap_rows[tap].extent(0);
                DenseArray pool({total, c_tap});
                std::size_t row = 0;
                for (std::size_t i : split.train) {
                    const DenseArray& r = feats[i].tap_rows[tap];
                    std::copy(r.data(), r.data() + r.size(), pool.data() + row * c_tap);
                    row += r.extent(0);
                }
                pca_per_tap[tap] = fit_pca(pool, d_eff);
            }

            auto descriptors_of = [&](std::size_t i) {
                std::vector<DenseArray> reduced;
                for (std::size_t tap = 0; tap < n_taps; ++tap) {
                    const DenseArray& rows = feats[i].tap_rows[tap];
                    if (rows.extent(1) <= d_eff) reduced.push_back(rows);
                    else
                        reduced.push_back(reduce(rows, cfg.taps.reduction, d_eff,
                                                 pca_per_tap[tap] ? &*pca_per_tap[tap] : nullptr));
                }
                return aggregate(reduced);
            };

            // Stage 4: GMM on train descriptors.
            std::size_t train_rows = 0;
            for (std::size_t i : split.train) {
                for (std::size_t tap = 0; tap < n_taps; ++tap)
                    train_rows += feats[i].tap_rows[tap].extent(0);
            }
            DenseArray train_pool({train_rows, d_eff});
            std::size_t row = 0;
            std::vector<LocalDescriptorSet> per_image(n_images);
            for (std::size_t i = 0; i < n_images; ++i) per_image[i] = descriptors_of(i);
            for (std::size_t i : split.train) {
                const DenseArray& r = per_image[i].rows;
                std::copy(r.data(), r.data() + r.size(), train_pool.data() + row * d_eff);
                row += r.extent(0);
            }
            EmConfig gmm_cfg = cfg.gmm;
            gmm_cfg.rng_seed = cfg.gmm.rng_seed + round;
            EmResult em = fit_em(train_pool, gmm_cfg);

            // Stage 5: encode, fuse, classify.
            const std::size_t dim_probe = [&] {
                FisherVector fv = encode(em.gmm, per_image[0].rows);
                fv.values = l2_normalize(power_normalize(fv.values));
                FusedDescriptor fd = fuse(fv,
                                          wants_ssl ? std::optional(feats[0].ssl) : std::nullopt,
                                          wants_fc ? std::optional(feats[0].fc) : std::nullopt,
                                          cfg.variant);
                return fd.values.size();
            }();

            DenseArray all_features({n_images, dim_probe});
            for (std::size_t i = 0; i < n_images; ++i) {
                FisherVector fv = encode(em.gmm, per_image[i].rows);
                fv.values = l2_normalize(power_normalize(fv.values));
                FusedDescriptor fd = fuse(fv,
                                          wants_ssl ? std::optional(feats[i].ssl) : std::nullopt,
                                          wants_fc ? std::optional(feats[i].fc) : std::nullopt,
                                          cfg.variant);
                const std::vector<float> x = phi_adjust(fd);
                std::copy(x.begin(), x.end(), all_features.data() + i * dim_probe);
            }

            DenseArray train_features({split.train.size(), dim_probe});
            std::vector<int> train_labels;
            for (std::size_t k = 0; k < split.train.size(); ++k) {
                const std::size_t i = split.train[k];
                std::copy(all_features.data() + i * dim_probe,
                          all_features.data() + (i + 1) * dim_probe,
                          train_features.data() + k * dim_probe);
                train_labels.push_back(ds.records[i].label);
            }
            SvmConfig svm_cfg = cfg.svm;
            svm_cfg.rng_seed = cfg.svm.rng_seed + round;
            LinearSvmModel svm = train_ovr(train_features, train_labels, svm_cfg);

            std::vector<int> truth, predicted;
            for (std::size_t i : split.test) {
                std::vector<float> x(all_features.data() + i * dim_probe,
                                     all_features.data() + (i + 1) * dim_probe);
                truth.push_back(ds.records[i].label);
                predicted.push_back(predict(svm, x).label);
            }
            report.rounds.push_back(compute_metrics(truth, predicted, n_classes));

            if (last_round != nullptr && round + 1 == splits.size())
                *last_round = RoundArtifacts{std::move(model), std::move(pca_per_tap),
                                             std::move(em.gmm), std::move(svm)};
        } catch (const ValidationError& e) {
            throw ValidationError("round " + std::to_string(round) + ": " + e.what());
        } catch (const FormatError& e) {
            throw FormatError("round " + std::to_string(round) + ": " + e.what());
        } catch (const DataError& e) {
            throw DataError("round " + std::to_string(round) + ": " + e.what());
        } catch (const UnsupportedError& e) {
            throw UnsupportedError("round " + std::to_string(round) + ": " + e.what());
        } catch (const NumericError& e) {
            throw NumericError("round " + std::to_string(round) + ": " + e.what());
        }
    }
    report.aggregate();
    return report;
}

}  // namespace texfv
