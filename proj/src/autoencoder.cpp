#include "texfv/autoencoder.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

namespace texfv {

namespace {

ConvSpec same_spec(std::size_t in_ch, std::size_t out_ch, std::size_t m) {
    return ConvSpec{m, 1, (m - 1) / 2, in_ch, out_ch};
}

DenseArray glorot_uniform(std::size_t out_ch, std::size_t in_ch, std::size_t m,
                          std::mt19937_64& rng) {
    const double fan_in = static_cast<double>(in_ch * m * m);
    const double fan_out = static_cast<double>(out_ch * m * m);
    const double limit = std::sqrt(6.0 / (fan_in + fan_out));
    std::uniform_real_distribution<double> dist(-limit, limit);
    DenseArray w({out_ch, in_ch, m, m});
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = static_cast<float>(dist(rng));
    return w;
}

ConvLayer make_layer(std::size_t in_ch, std::size_t out_ch, std::size_t m,
                     std::mt19937_64& rng) {
    return ConvLayer{glorot_uniform(out_ch, in_ch, m, rng), DenseArray({out_ch})};
}

struct ConvRec {
    DenseArray in;
    DenseArray out;  // post-activation (or linear output for bias-free/head convs)
};

struct BlockTrace {
    ConvRec a, b;
};

struct DecTrace {
    DenseArray up_in;  // after nearest-neighbor upsampling
    ConvRec up;
    DenseArray concat;
    BlockTrace blk;
};

struct Trace {
    std::vector<BlockTrace> enc;
    std::vector<MaxPoolResult> pools;
    BlockTrace bott;
    std::vector<DecTrace> dec;
    ConvRec head;
};

ConvRec conv_relu(const DenseArray& x, const ConvLayer& layer, std::size_t m) {
    ConvSpec spec = same_spec(x.extent(0), layer.w.extent(0), m);
    ConvRec rec{x, {}};
    rec.out = relu(conv2d(x, layer.w, layer.b, spec));
    return rec;
}

BlockTrace run_block(const DenseArray& x, const EncoderBlock& blk, std::size_t m) {
    BlockTrace t;
    t.a = conv_relu(x, blk.c1, m);
    t.b = conv_relu(t.a.out, blk.c2, m);
    return t;
}

DenseArray concat_channels(const DenseArray& a, const DenseArray& b) {
    DenseArray out({a.extent(0) + b.extent(0), a.extent(1), a.extent(2)});
    std::copy(a.data(), a.data() + a.size(), out.data());
    std::copy(b.data(), b.data() + b.size(), out.data() + a.size());
    return out;
}

void check_input(const AutoencoderModel& model, const DenseArray& image) {
    if (image.rank() != 3)
        throw DimensionError("autoencoder: image rank must be 3 (C,H,W)");
    if (image.extent(0) != model.in_channels)
        throw DimensionError("autoencoder: image has " + std::to_string(image.extent(0)) +
                             " channels, model expects " + std::to_string(model.in_channels));
    const std::size_t mult = std::size_t{1} << model.config.levels;
    if (image.extent(1) % mult != 0 || image.extent(2) % mult != 0)
        throw DimensionError("autoencoder: spatial extents must be multiples of 2^J = " +
                             std::to_string(mult));
}

Trace forward_trace(const AutoencoderModel& model, const DenseArray& image) {
    check_input(model, image);
    const std::size_t J = model.config.levels, m = model.config.kernel_size;
    Trace t;
    const DenseArray* cur = &image;
    for (std::size_t i = 0; i < J; ++i) {
        t.enc.push_back(run_block(*cur, model.encoder[i], m));
        t.pools.push_back(maxpool2(t.enc.back().b.out));
        cur = &t.pools.back().values;
    }
    t.bott = run_block(*cur, model.bottleneck, m);
    cur = &t.bott.b.out;
    for (std::size_t i = 0; i < J; ++i) {
        DecTrace d;
        d.up_in = upsample2(*cur);
        const DecoderBlock& blk = model.decoder[i];
        ConvSpec up_spec = same_spec(d.up_in.extent(0), blk.up_w.extent(0), m);
        d.up.in = d.up_in;
        d.up.out = conv2d(d.up_in, blk.up_w, DenseArray({blk.up_w.extent(0)}), up_spec);
        d.concat = concat_channels(t.enc[J - 1 - i].b.out, d.up.out);
        d.blk.a = conv_relu(d.concat, blk.c1, m);
        d.blk.b = conv_relu(d.blk.a.out, blk.c2, m);
        t.dec.push_back(std::move(d));
        cur = &t.dec.back().blk.b.out;
    }
    ConvSpec head_spec{1, 1, 0, model.head.w.extent(1), model.head.w.extent(0)};
    t.head.in = *cur;
    t.head.out = conv2d(*cur, model.head.w, model.head.b, head_spec);
    return t;
}

// Backward through one conv+ReLU; accumulates parameter grads, returns input grad.
DenseArray back_conv_relu(const ConvRec& rec, const ConvLayer& layer, std::size_t m,
                          const DenseArray& grad_out, DenseArray& gw, DenseArray& gb) {
    DenseArray d = relu_backward(rec.out, grad_out);
    ConvSpec spec = same_spec(rec.in.extent(0), layer.w.extent(0), m);
    ConvGrads g = conv2d_backward(rec.in, layer.w, spec, d);
    for (std::size_t i = 0; i < gw.size(); ++i) gw[i] += g.kernels[i];
    for (std::size_t i = 0; i < gb.size(); ++i) gb[i] += g.bias[i];
    return std::move(g.input);
}

}  // namespace

AutoencoderModel make_autoencoder(const AutoencoderConfig& config, std::size_t in_channels) {
    if (config.levels < 1 || config.base_channels < 1)
        throw ValidationError("autoencoder config: levels and base_channels must be >= 1");
    if (config.kernel_size % 2 == 0)
        throw ValidationError("autoencoder config: kernel_size must be odd");
    std::mt19937_64 rng(config.rng_seed);
    const std::size_t J = config.levels, m = config.kernel_size;

    AutoencoderModel model;
    model.config = config;
    model.in_channels = in_channels;
    std::size_t prev = in_channels;
    for (std::size_t i = 1; i <= J; ++i) {
        const std::size_t ch = model.encoder_channels(i);
        model.encoder.push_back({make_layer(prev, ch, m, rng), make_layer(ch, ch, m, rng)});
        prev = ch;
    }
    const std::size_t bch = model.bottleneck_channels();
    model.bottleneck = {make_layer(prev, bch, m, rng), make_layer(bch, bch, m, rng)};
    prev = bch;
    for (std::size_t i = 1; i <= J; ++i) {
        const std::size_t skip = model.encoder_channels(J - i + 1);
        DecoderBlock blk;
        blk.up_w = glorot_uniform(skip, prev, m, rng);
        blk.c1 = make_layer(2 * skip, skip, m, rng);
        blk.c2 = make_layer(skip, skip, m, rng);
        model.decoder.push_back(std::move(blk));
        prev = skip;
    }
    model.head = {glorot_uniform(in_channels, prev, 1, rng), DenseArray({in_channels})};
    return model;
}

ForwardResult forward(const AutoencoderModel& model, const DenseArray& image) {
    Trace t = forward_trace(model, image);
    ForwardResult r;
    r.reconstruction = std::move(t.head.out);
    for (auto& blk : t.enc) r.encoder_outputs.push_back(std::move(blk.b.out));
    r.bottleneck = std::move(t.bott.b.out);
    return r;
}

DenseArray add_noise(const DenseArray& image, float sigma, std::uint64_t rng_seed) {
    if (sigma < 0.0f) throw ValidationError("add_noise: sigma must be non-negative");
    if (sigma == 0.0f) return image;
    std::mt19937_64 rng(rng_seed);
    std::normal_distribution<float> noise(0.0f, sigma);
    DenseArray out(image.shape());
    for (std::size_t i = 0; i < image.size(); ++i)
        out[i] = std::clamp(image[i] + noise(rng), 0.0f, 1.0f);
    return out;
}

std::vector<DenseArray*> parameter_arrays(AutoencoderModel& model) {
    std::vector<DenseArray*> p;
    for (auto& blk : model.encoder) {
        p.push_back(&blk.c1.w); p.push_back(&blk.c1.b);
        p.push_back(&blk.c2.w); p.push_back(&blk.c2.b);
    }
    p.push_back(&model.bottleneck.c1.w); p.push_back(&model.bottleneck.c1.b);
    p.push_back(&model.bottleneck.c2.w); p.push_back(&model.bottleneck.c2.b);
    for (auto& blk : model.decoder) {
        p.push_back(&blk.up_w);
        p.push_back(&blk.c1.w); p.push_back(&blk.c1.b);
        p.push_back(&blk.c2.w); p.push_back(&blk.c2.b);
    }
    p.push_back(&model.head.w); p.push_back(&model.head.b);
    return p;
}

double loss_and_gradients(const AutoencoderModel& model, const DenseArray& input,
                          const DenseArray& target, ModelGrads& out) {
    const std::size_t J = model.config.levels, m = model.config.kernel_size;
    Trace t = forward_trace(model, input);
    const double loss = mse(t.head.out, target);

    auto params = parameter_arrays(const_cast<AutoencoderModel&>(model));
    if (out.grads.size() != params.size()) {
        out.grads.clear();
        for (auto* p : params) out.grads.emplace_back(p->shape());
    }
    // Grad slots in parameter_arrays order.
    auto grad_of = [&](const DenseArray* p) -> DenseArray& {
        for (std::size_t i = 0; i < params.size(); ++i)
            if (params[i] == p) return out.grads[i];
        throw NumericError("loss_and_gradients: parameter not registered");
    };

    // Head (linear 1x1).
    ConvSpec head_spec{1, 1, 0, model.head.w.extent(1), model.head.w.extent(0)};
    ConvGrads hg = conv2d_backward(t.head.in, model.head.w, head_spec,
                                   mse_backward(t.head.out, target));
    {
        DenseArray& gw = grad_of(&model.head.w);
        DenseArray& gb = grad_of(&model.head.b);
        for (std::size_t i = 0; i < gw.size(); ++i) gw[i] += hg.kernels[i];
        for (std::size_t i = 0; i < gb.size(); ++i) gb[i] += hg.bias[i];
    }
    DenseArray d = std::move(hg.input);

    // Decoder, deepest stage last in forward order, so walk in reverse.
    std::vector<DenseArray> skip_grads(J);  // index i-1 holds grad for E_i
    for (std::size_t i = J; i-- > 0;) {
        const DecoderBlock& blk = model.decoder[i];
        const DecTrace& dt = t.dec[i];
        d = back_conv_relu(dt.blk.b, blk.c2, m, d, grad_of(&blk.c2.w), grad_of(&blk.c2.b));
        d = back_conv_relu(dt.blk.a, blk.c1, m, d, grad_of(&blk.c1.w), grad_of(&blk.c1.b));
        // Split the concat gradient: [skip E_{J-i}, upsampled path].
        const std::size_t skip_ch = model.encoder_channels(J - i);
        const std::size_t hw = d.extent(1) * d.extent(2);
        DenseArray d_skip({skip_ch, d.extent(1), d.extent(2)});
        DenseArray d_up({d.extent(0) - skip_ch, d.extent(1), d.extent(2)});
        std::copy(d.data(), d.data() + skip_ch * hw, d_skip.data());
        std::copy(d.data() + skip_ch * hw, d.data() + d.size(), d_up.data());
        skip_grads[J - 1 - i] = std::move(d_skip);

        ConvSpec up_spec = same_spec(dt.up_in.extent(0), blk.up_w.extent(0), m);
        ConvGrads ug = conv2d_backward(dt.up_in, blk.up_w, up_spec, d_up);
        DenseArray& guw = grad_of(&blk.up_w);
        for (std::size_t k = 0; k < guw.size(); ++k) guw[k] += ug.kernels[k];
        d = upsample2_backward(ug.input);
    }

    // Bottleneck.
    d = back_conv_relu(t.bott.b, model.bottleneck.c2, m, d,
                       grad_of(&model.bottleneck.c2.w), grad_of(&model.bottleneck.c2.b));
    d = back_conv_relu(t.bott.a, model.bottleneck.c1, m, d,
                       grad_of(&model.bottleneck.c1.w), grad_of(&model.bottleneck.c1.b));

    // Encoder, reversed; d currently holds the gradient at D_J.
    for (std::size_t i = J; i-- > 0;) {
        DenseArray d_e = maxpool2_backward(t.pools[i], d, t.enc[i].b.out.shape());
        const DenseArray& sk = skip_grads[i];
        for (std::size_t k = 0; k < d_e.size(); ++k) d_e[k] += sk[k];
        const EncoderBlock& blk = model.encoder[i];
        d_e = back_conv_relu(t.enc[i].b, blk.c2, m, d_e, grad_of(&blk.c2.w), grad_of(&blk.c2.b));
        d = back_conv_relu(t.enc[i].a, blk.c1, m, d_e, grad_of(&blk.c1.w), grad_of(&blk.c1.b));
    }
    return loss;
}

TrainResult train(AutoencoderModel& model, const std::vector<DenseArray>& images,
                  const AutoencoderConfig& config) {
    if (images.empty()) throw ValidationError("train: empty dataset");
    std::mt19937_64 rng(config.rng_seed);

    auto params = parameter_arrays(model);
    TrainResult result;
    std::vector<std::size_t> order(images.size());
    std::iota(order.begin(), order.end(), 0);

    ModelGrads grads, batch_grads;
    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
            const std::size_t end = std::min(order.size(), start + config.batch_size);
            if (batch_grads.grads.empty())
                for (auto* p : params) batch_grads.grads.emplace_back(p->shape());
            for (auto& g : batch_grads.grads) std::fill(g.values().begin(), g.values().end(), 0.0f);

            for (std::size_t s = start; s < end; ++s) {
                const DenseArray& target = images[order[s]];
                DenseArray input = target;
                if (config.denoising)
                    input = add_noise(target, config.noise_sigma, rng());
                for (auto& g : grads.grads) std::fill(g.values().begin(), g.values().end(), 0.0f);
                const double loss = loss_and_gradients(model, input, target, grads);
                if (!std::isfinite(loss))
                    throw NumericError("train: non-finite loss at epoch " +
                                       std::to_string(epoch));
                epoch_loss += loss;
                for (std::size_t i = 0; i < params.size(); ++i)
                    for (std::size_t k = 0; k < grads.grads[i].size(); ++k)
                        batch_grads.grads[i][k] += grads.grads[i][k];
            }
            const float scale = config.learning_rate / static_cast<float>(end - start);
            for (std::size_t i = 0; i < params.size(); ++i)
                for (std::size_t k = 0; k < params[i]->size(); ++k)
                    (*params[i])[k] -= scale * batch_grads.grads[i][k];
        }
        result.loss_history.push_back(epoch_loss / static_cast<double>(images.size()));
    }
    return result;
}

DenseArray bottleneck_features(const AutoencoderModel& model, const DenseArray& image) {
    check_input(model, image);
    const std::size_t m = model.config.kernel_size;
    const DenseArray* cur = &image;
    DenseArray pooled;
    BlockTrace t;
    for (std::size_t i = 0; i < model.config.levels; ++i) {
        t = run_block(*cur, model.encoder[i], m);
        pooled = maxpool2(t.b.out).values;
        cur = &pooled;
    }
    t = run_block(*cur, model.bottleneck, m);
    return std::move(t.b.out);
}

std::vector<float> ssl_vector(const AutoencoderModel& model, const DenseArray& image) {
    DenseArray b = bottleneck_features(model, image);
    const std::size_t C = b.extent(0), hw = b.extent(1) * b.extent(2);
    std::vector<float> v(C);
    for (std::size_t c = 0; c < C; ++c) {
        double acc = 0.0;
        for (std::size_t i = 0; i < hw; ++i) acc += b[c * hw + i];
        v[c] = static_cast<float>(acc / static_cast<double>(hw));
    }
    return v;
}

}  // namespace texfv
