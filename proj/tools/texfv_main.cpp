#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>

#include "texfv/model_io.hpp"
#include "texfv/pipeline.hpp"
#include "texfv/serialize.hpp"
#include "texfv/tensor_ops.hpp"

namespace fs = std::filesystem;
using namespace texfv;

namespace {

struct CommonOpts {
    std::string config_path;
    std::string out_path;
    std::string bundle_path;
    std::string features_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> variant;
    std::vector<std::string> overrides;
};

PipelineConfig load_config(const CommonOpts& opts) {
    if (opts.config_path.empty()) throw ConfigError("--config is required");
    PipelineConfig cfg = parse_config(opts.config_path);
    if (opts.seed) {
        cfg.ae.rng_seed = *opts.seed;
        cfg.gmm.rng_seed = *opts.seed;
        cfg.svm.rng_seed = *opts.seed;
        cfg.protocol.rng_seed = *opts.seed;
    }
    if (opts.variant) cfg.variant = variant_from_string(*opts.variant);
    for (const std::string& kv : opts.overrides) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos)
            throw ConfigError("--set expects key=value, got '" + kv + "'");
        apply_override(cfg, kv.substr(0, eq), kv.substr(eq + 1));
    }
    return cfg;
}

std::string image_feature_name(std::size_t index) {
    std::ostringstream name;
    name << "img_" << std::setw(5) << std::setfill('0') << index << ".tfv";
    return name.str();
}

void write_labels(const std::string& dir, const Dataset& ds) {
    std::ofstream out(fs::path(dir) / "labels.tsv");
    for (const auto& rec : ds.records)
        out << rec.path << "\t" << rec.label << "\t" << rec.group_id << "\n";
}

std::vector<int> read_labels(const std::string& dir) {
    std::ifstream in(fs::path(dir) / "labels.tsv");
    if (!in) throw DataError("missing labels.tsv in " + dir);
    std::vector<int> labels;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto a = line.find('\t');
        const auto b = line.find('\t', a + 1);
        labels.push_back(std::stoi(line.substr(a + 1, b - a - 1)));
    }
    return labels;
}

// Stage commands operate on the whole dataset; protocol evaluation is the
// `pipeline` command's job.
int cmd_pretrain(const CommonOpts& opts) {
    PipelineConfig cfg = load_config(opts);
    Dataset ds = load_dataset(cfg.dataset);
    std::vector<DenseArray> images;
    for (const auto& rec : ds.records)
        images.push_back(pad_reflect_to_multiple(rec.image, std::size_t{1} << cfg.ae.levels));
    AutoencoderModel model = make_autoencoder(cfg.ae, images[0].extent(0));
    TrainResult tr = train(model, images, cfg.ae);
    for (std::size_t e = 0; e < tr.loss_history.size(); ++e)
        std::cout << "epoch " << e << " loss " << tr.loss_history[e] << "\n";
    Bundle bundle;
    bundle.sections.emplace_back("ae", autoencoder_to_records(model));
    write_bundle(opts.out_path.empty() ? "model.tfvb" : opts.out_path, bundle);
    return 0;
}

int cmd_features(const CommonOpts& opts) {
    PipelineConfig cfg = load_config(opts);
    Bundle bundle = read_bundle(opts.bundle_path);
    AutoencoderModel model = autoencoder_from_records(bundle.section("ae"));
    Dataset ds = load_dataset(cfg.dataset);
    const std::string dir = opts.out_path.empty() ? "features" : opts.out_path;
    fs::create_directories(dir);
    for (std::size_t i = 0; i < ds.records.size(); ++i) {
        DenseArray padded =
            pad_reflect_to_multiple(ds.records[i].image, std::size_t{1} << cfg.ae.levels);
        std::vector<TaggedArray> records;
        std::uint32_t tap = 0;
        for (auto& map : builtin_tap_maps(model, padded, cfg.taps.n_layers))
            records.push_back({tap++, std::move(map)});
        write_tfv1((fs::path(dir) / image_feature_name(i)).string(), records);
    }
    write_labels(dir, ds);
    std::cout << "wrote " << ds.records.size() << " feature files to " << dir << "\n";
    return 0;
}

// Descriptor rows for every image in a feature directory, reduced to a
// common dimension (PCA models fitted here when needed).
struct FeatureSet {
    std::vector<DenseArray> per_image_rows;
    std::vector<std::optional<PcaModel>> pca_per_tap;
    std::size_t d_eff = 0;
};

FeatureSet reduce_feature_dir(const std::string& dir, std::size_t count,
                              const TapConfig& taps) {
    std::vector<std::vector<DenseArray>> tap_rows(count);
    std::size_t n_taps = 0;
    for (std::size_t i = 0; i < count; ++i) {
        for (auto& rec : ingest_feature_file((fs::path(dir) / image_feature_name(i)).string()))
            if (rec.tap_id != 0xFFFFFFFFu)
                tap_rows[i].push_back(map_to_descriptors(rec.array));
        n_taps = tap_rows[i].size();
    }
    FeatureSet set;
    set.d_eff = taps.target_dim;
    for (std::size_t tap = 0; tap < n_taps; ++tap)
        set.d_eff = std::min(set.d_eff, tap_rows[0][tap].extent(1));
    set.pca_per_tap.resize(n_taps);
    for (std::size_t tap = 0; tap < n_taps; ++tap) {
        const std::size_t c_tap = tap_rows[0][tap].extent(1);
        if (c_tap <= set.d_eff || taps.reduction != Reduction::pca) continue;
        std::size_t total = 0;
        for (const auto& rows : tap_rows) total += rows[tap].extent(0);
        DenseArray pool({total, c_tap});
        std::size_t row = 0;
        for (const auto& rows : tap_rows) {
            std::copy(rows[tap].data(), rows[tap].data() + rows[tap].size(),
                      pool.data() + row * c_tap);
            row += rows[tap].extent(0);
        }
        set.pca_per_tap[tap] = fit_pca(pool, set.d_eff);
    }
    for (std::size_t i = 0; i < count; ++i) {
        std::vector<DenseArray> reduced;
        for (std::size_t tap = 0; tap < n_taps; ++tap) {
            if (tap_rows[i][tap].extent(1) <= set.d_eff) reduced.push_back(tap_rows[i][tap]);
            else
                reduced.push_back(reduce(tap_rows[i][tap], taps.reduction, set.d_eff,
                                         set.pca_per_tap[tap] ? &*set.pca_per_tap[tap] : nullptr));
        }
        set.per_image_rows.push_back(aggregate(reduced).rows);
    }
    return set;
}

int cmd_gmm(const CommonOpts& opts) {
    PipelineConfig cfg = load_config(opts);
    const std::string dir = opts.features_path;
    const std::vector<int> labels = read_labels(dir);
    FeatureSet set = reduce_feature_dir(dir, labels.size(), cfg.taps);
    std::size_t total = 0;
    for (const auto& rows : set.per_image_rows) total += rows.extent(0);
    DenseArray pool({total, set.d_eff});
    std::size_t row = 0;
    for (const auto& rows : set.per_image_rows) {
        std::copy(rows.data(), rows.data() + rows.size(), pool.data() + row * set.d_eff);
        row += rows.extent(0);
    }
    EmResult em = fit_em(pool, cfg.gmm);
    std::cout << "EM iterations " << em.loglik_history.size() << ", final loglik "
              << em.loglik_history.back() << "\n";
    Bundle bundle = opts.bundle_path.empty() ? Bundle{} : read_bundle(opts.bundle_path);
    bundle.sections.emplace_back("gmm", gmm_to_records(em.gmm));
    for (std::size_t tap = 0; tap < set.pca_per_tap.size(); ++tap)
        if (set.pca_per_tap[tap])
            bundle.sections.emplace_back("pca" + std::to_string(tap),
                                         pca_to_records(*set.pca_per_tap[tap]));
    write_bundle(opts.out_path.empty() ? "model.tfvb" : opts.out_path, bundle);
    return 0;
}

int cmd_encode(const CommonOpts& opts) {
    PipelineConfig cfg = load_config(opts);
    Bundle bundle = read_bundle(opts.bundle_path);
    GaussianMixture gmm = gmm_from_records(bundle.section("gmm"));
    const std::string dir = opts.features_path;
    const std::vector<int> labels = read_labels(dir);

    // Reuse persisted PCA models instead of refitting.
    FeatureSet set;
    set.d_eff = gmm.D;
    std::vector<TaggedArray> out_records;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        std::vector<DenseArray> reduced;
        std::vector<float> ssl;
        std::vector<float> fc;
        std::size_t tap = 0;
        for (auto& rec : ingest_feature_file((fs::path(dir) / image_feature_name(i)).string())) {
            if (rec.tap_id == 0xFFFFFFFFu) {
                fc = rec.array.values();
                continue;
            }
            if (tap == 0) {
                const std::size_t C = rec.array.extent(0);
                const std::size_t hw = rec.array.extent(1) * rec.array.extent(2);
                ssl.resize(C);
                for (std::size_t c = 0; c < C; ++c) {
                    double acc = 0.0;
                    for (std::size_t k = 0; k < hw; ++k) acc += rec.array[c * hw + k];
                    ssl[c] = static_cast<float>(acc / static_cast<double>(hw));
                }
            }
            DenseArray rows = map_to_descriptors(rec.array);
            if (rows.extent(1) > gmm.D) {
                const std::string section = "pca" + std::to_string(tap);
                if (cfg.taps.reduction == Reduction::pca && bundle.has(section)) {
                    PcaModel pca = pca_from_records(bundle.section(section));
                    rows = reduce(rows, Reduction::pca, gmm.D, &pca);
                } else {
                    rows = reduce(rows, cfg.taps.reduction, gmm.D);
                }
            }
            reduced.push_back(std::move(rows));
            ++tap;
        }
        FisherVector fv = encode(gmm, aggregate(reduced).rows);
        fv.values = l2_normalize(power_normalize(fv.values));
        if (fc.empty()) fc = ssl;
        FusedDescriptor fd = fuse(fv, ssl, fc, cfg.variant);
        // phi on the non-FV tail; the FV segment is already power-normalized.
        for (std::size_t k = fd.fv_len; k < fd.values.size(); ++k) {
            const float r = std::sqrt(std::abs(fd.values[k]));
            fd.values[k] = fd.values[k] < 0.0f ? -r : r;
        }
        out_records.push_back({static_cast<std::uint32_t>(i),
                               DenseArray({fd.values.size()}, fd.values)});
    }
    const std::string out = opts.out_path.empty() ? "encoded" : opts.out_path;
    fs::create_directories(out);
    write_tfv1((fs::path(out) / "vectors.tfv").string(), out_records);
    fs::copy_file(fs::path(dir) / "labels.tsv", fs::path(out) / "labels.tsv",
                  fs::copy_options::overwrite_existing);
    std::cout << "wrote " << out_records.size() << " descriptors to " << out << "\n";
    return 0;
}

int cmd_train(const CommonOpts& opts) {
    PipelineConfig cfg = load_config(opts);
    const std::vector<int> labels = read_labels(opts.features_path);
    std::vector<TaggedArray> vectors = read_tfv1((fs::path(opts.features_path) / "vectors.tfv").string());
    if (vectors.size() != labels.size())
        throw DataError("vector/label count mismatch");
    const std::size_t dim = vectors[0].array.size();
    DenseArray features({vectors.size(), dim});
    for (std::size_t i = 0; i < vectors.size(); ++i)
        std::copy(vectors[i].array.data(), vectors[i].array.data() + dim,
                  features.data() + i * dim);
    LinearSvmModel svm = train_ovr(features, labels, cfg.svm);
    Bundle bundle = opts.bundle_path.empty() ? Bundle{} : read_bundle(opts.bundle_path);
    bundle.sections.emplace_back("svm", svm_to_records(svm));
    write_bundle(opts.out_path.empty() ? "model.tfvb" : opts.out_path, bundle);
    return 0;
}

int cmd_eval(const CommonOpts& opts) {
    PipelineConfig cfg = load_config(opts);
    (void)cfg;
    Bundle bundle = read_bundle(opts.bundle_path);
    LinearSvmModel svm = svm_from_records(bundle.section("svm"));
    const std::vector<int> labels = read_labels(opts.features_path);
    std::vector<TaggedArray> vectors = read_tfv1((fs::path(opts.features_path) / "vectors.tfv").string());
    std::vector<int> predicted;
    std::size_t n_classes = 0;
    for (int l : labels) n_classes = std::max<std::size_t>(n_classes, static_cast<std::size_t>(l) + 1);
    for (const auto& rec : vectors)
        predicted.push_back(predict(svm, rec.array.values()).label);
    RoundMetrics m = compute_metrics(labels, predicted, n_classes);
    std::ostringstream text;
    text << "accuracy\t" << m.accuracy << "\nprecision\t" << m.macro_precision
         << "\nrecall\t" << m.macro_recall << "\nf1\t" << m.macro_f1 << "\n";
    if (!opts.out_path.empty()) {
        std::ofstream out(opts.out_path);
        out << text.str();
    }
    std::cout << text.str();
    return 0;
}

int cmd_pipeline(const CommonOpts& opts) {
    PipelineConfig cfg = load_config(opts);
    EvalReport report = run_pipeline(cfg);
    const std::string text = report.to_text();
    if (!opts.out_path.empty()) {
        std::ofstream out(opts.out_path);
        out << text;
    }
    std::cout << text;
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"texture recognition pipeline: autoencoder pretraining, Fisher "
                 "Vector encoding, one-vs-rest SVM"};
    app.require_subcommand(1);

    CommonOpts opts;
    int (*handler)(const CommonOpts&) = nullptr;
    auto add = [&](const char* name, const char* desc, int (*fn)(const CommonOpts&),
                   bool needs_bundle, bool needs_features) {
        CLI::App* sub = app.add_subcommand(name, desc);
        sub->add_option("--config", opts.config_path, "pipeline config file")->required();
        sub->add_option("--seed", opts.seed, "override all stage seeds");
        sub->add_option("--out", opts.out_path, "output path");
        sub->add_option("--variant", opts.variant, "fv|fvfc|fvae|fcfvae");
        sub->add_option("--set", opts.overrides, "config override key=value (repeatable)");
        if (needs_bundle)
            sub->add_option("--bundle", opts.bundle_path, "model bundle path");
        if (needs_features)
            sub->add_option("--features", opts.features_path, "feature directory")->required();
        sub->callback([&handler, fn] { handler = fn; });
        return sub;
    };
    add("pretrain", "train the autoencoder on a dataset and save the bundle",
        cmd_pretrain, false, false);
    add("features", "extract tap feature maps per image into TFV1 files",
        cmd_features, true, false);
    add("gmm", "fit PCA + GMM on a feature directory", cmd_gmm, true, true);
    add("encode", "encode fused descriptors from a feature directory", cmd_encode, true, true);
    add("train", "train the one-vs-rest SVM on encoded vectors", cmd_train, true, true);
    add("eval", "evaluate a trained SVM on encoded vectors", cmd_eval, true, true);
    add("pipeline", "run the full protocol evaluation", cmd_pipeline, false, false);

    try {
        app.parse(argc, argv);
        return handler ? handler(opts) : 2;
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const NumericError& e) {
        std::cerr << "numeric failure: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 3;
    }
}
