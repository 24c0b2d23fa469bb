#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>

#include "texfv/autoencoder.hpp"
#include "texfv/dataset.hpp"
#include "texfv/features.hpp"
#include "texfv/fisher.hpp"
#include "texfv/gmm.hpp"
#include "texfv/metrics.hpp"
#include "texfv/splits.hpp"
#include "texfv/svm.hpp"

namespace texfv {

enum class Backbone { builtin, external };

struct PipelineConfig {
    DatasetSpec dataset;
    SplitProtocol protocol;
    AutoencoderConfig ae;
    TapConfig taps;
    EmConfig gmm;
    SvmConfig svm;
    Variant variant = Variant::FVAE;
    Backbone backbone = Backbone::builtin;
    std::string features_dir;          // external backbone: img_<index>.tfv files
    bool transductive_pretrain = false;  // pretrain AE on train+test instead of train only
};

/// Flat `key = value` config file; '#' starts a comment. Unknown keys are
/// rejected. See README for the key list.
PipelineConfig parse_config(const std::string& path);

/// Applies overrides of the form key=value on top of a parsed config.
void apply_override(PipelineConfig& cfg, const std::string& key, const std::string& value);

/// Feature maps tapped from the encoder for one image, deepest first.
std::vector<DenseArray> builtin_tap_maps(const AutoencoderModel& model,
                                         const DenseArray& image, std::size_t n_layers);

struct RoundArtifacts {
    AutoencoderModel ae;
    std::vector<std::optional<PcaModel>> pca_per_tap;
    GaussianMixture gmm;
    LinearSvmModel svm;
};

/// Full protocol evaluation; deterministic given the config seeds.
EvalReport run_pipeline(const PipelineConfig& cfg);

/// Hook for leakage tests: receives the train index set each round right
/// before any fitting happens.
EvalReport run_pipeline(const PipelineConfig& cfg,
                        const std::function<void(std::size_t round, const Split&)>& on_round,
                        RoundArtifacts* last_round = nullptr);

}  // namespace texfv
