#pragma once

// The forecasting network: prompt projection, prompt-aware gating fusion
// (PGF), input projection + sinusoidal positional encoding, a pre-norm
// Transformer encoder over the history window, and an autoregressive MLP
// decoder that emits per-horizon coordinate deltas.
//
// Fusion happens in feature space (d_feat) before the input projection: the
// gate g_t = sigmoid(W_g [x_t; p_mean] + b_g) blends x_t against the
// projected prompt mean, reusing the same gate for both terms, so every fused
// component is a convex combination of its two sources.

#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

#include "tyfo/embed.hpp"
#include "tyfo/errors.hpp"
#include "tyfo/features.hpp"
#include "tyfo/rng.hpp"
#include "tyfo/tensor.hpp"

namespace tyfo {

enum class PromptMode { kLast, kPerStep };

struct ModelConfig {
    int d_feat = kFeatureDim;
    int d_txt = 64;
    int d_model = 64;
    int n_layers = 2;
    int n_heads = 2;
    int d_ff = 128;
    int history_len = 8;  // T
    int horizons = 4;     // K
    double layer_norm_eps = 1e-5;
    PromptMode prompt_mode = PromptMode::kLast;
    bool positional_encoding = true;  // test hook
    bool pgf_enabled = true;          // test hook: identity fusion when false

    void validate() const {
        if (d_feat <= 0 || d_txt <= 0 || d_model <= 0 || n_layers <= 0 || n_heads <= 0 || d_ff <= 0 ||
            history_len <= 0 || horizons <= 0)
            throw ConfigError("model dimensions must be positive");
        if (d_model % n_heads != 0) throw ConfigError("d_model must be divisible by n_heads");
    }
};

struct AttentionParams {
    Tensor wq, wk, wv, wo;  // each d_model x d_model
};

struct EncoderLayerParams {
    Tensor ln1_scale, ln1_shift;
    AttentionParams attn;
    Tensor ln2_scale, ln2_shift;
    Tensor w1, b1, w2, b2;  // FFN
};

struct ModelParams {
    Tensor w_proj_txt, b_proj_txt;  // d_txt x d_feat, d_feat
    Tensor w_gate, b_gate;          // 2*d_feat x d_feat, d_feat
    Tensor w_in, b_in;              // d_feat x d_model, d_model
    std::vector<EncoderLayerParams> layers;
    Tensor w_dec1, b_dec1;  // (2+d_model) x d_model, d_model
    Tensor w_dec2, b_dec2;  // d_model x 2, 2

    // Fixed iteration order; checkpoint layout, Adam state and gradient
    // clipping all rely on it.
    template <typename F>
    void for_each(F&& f) {
        f("prompt_proj.w", w_proj_txt);
        f("prompt_proj.b", b_proj_txt);
        f("pgf.w", w_gate);
        f("pgf.b", b_gate);
        f("input_proj.w", w_in);
        f("input_proj.b", b_in);
        for (size_t l = 0; l < layers.size(); ++l) {
            std::string p = "enc." + std::to_string(l) + ".";
            f(p + "ln1.scale", layers[l].ln1_scale);
            f(p + "ln1.shift", layers[l].ln1_shift);
            f(p + "attn.wq", layers[l].attn.wq);
            f(p + "attn.wk", layers[l].attn.wk);
            f(p + "attn.wv", layers[l].attn.wv);
            f(p + "attn.wo", layers[l].attn.wo);
            f(p + "ln2.scale", layers[l].ln2_scale);
            f(p + "ln2.shift", layers[l].ln2_shift);
            f(p + "ffn.w1", layers[l].w1);
            f(p + "ffn.b1", layers[l].b1);
            f(p + "ffn.w2", layers[l].w2);
            f(p + "ffn.b2", layers[l].b2);
        }
        f("dec.w1", w_dec1);
        f("dec.b1", b_dec1);
        f("dec.w2", w_dec2);
        f("dec.b2", b_dec2);
    }

    template <typename F>
    void for_each(F&& f) const {
        const_cast<ModelParams*>(this)->for_each(
            [&](const std::string& name, Tensor& t) { f(name, static_cast<const Tensor&>(t)); });
    }

    // Leaves on a tape, same structure; gradients land on the returned copy.
    ModelParams on_tape(Tape& tape) const {
        ModelParams out = *this;
        out.for_each([&](const std::string&, Tensor& t) { t = tape.var(t); });
        return out;
    }
};

namespace detail {

inline Tensor xavier_uniform(int rows, int cols, SplitMix64& rng) {
    double limit = std::sqrt(6.0 / (rows + cols));
    std::vector<double> v(static_cast<size_t>(rows) * cols);
    for (double& x : v) x = rng.uniform(-limit, limit);
    return Tensor({rows, cols}, std::move(v));
}

}  // namespace detail

// Xavier-uniform matrices, zero biases, identity layer norms; the decoder
// output layer starts at exactly zero so an untrained model reproduces the
// persistence forecast.
inline ModelParams init_params(const ModelConfig& cfg, uint64_t seed) {
    cfg.validate();
    SplitMix64 rng(seed);
    ModelParams p;
    p.w_proj_txt = detail::xavier_uniform(cfg.d_txt, cfg.d_feat, rng);
    p.b_proj_txt = Tensor::zeros({cfg.d_feat});
    p.w_gate = detail::xavier_uniform(2 * cfg.d_feat, cfg.d_feat, rng);
    p.b_gate = Tensor::zeros({cfg.d_feat});
    p.w_in = detail::xavier_uniform(cfg.d_feat, cfg.d_model, rng);
    p.b_in = Tensor::zeros({cfg.d_model});
    p.layers.resize(cfg.n_layers);
    for (auto& l : p.layers) {
        l.ln1_scale = Tensor::full({cfg.d_model}, 1.0);
        l.ln1_shift = Tensor::zeros({cfg.d_model});
        l.attn.wq = detail::xavier_uniform(cfg.d_model, cfg.d_model, rng);
        l.attn.wk = detail::xavier_uniform(cfg.d_model, cfg.d_model, rng);
        l.attn.wv = detail::xavier_uniform(cfg.d_model, cfg.d_model, rng);
        l.attn.wo = detail::xavier_uniform(cfg.d_model, cfg.d_model, rng);
        l.ln2_scale = Tensor::full({cfg.d_model}, 1.0);
        l.ln2_shift = Tensor::zeros({cfg.d_model});
        l.w1 = detail::xavier_uniform(cfg.d_model, cfg.d_ff, rng);
        l.b1 = Tensor::zeros({cfg.d_ff});
        l.w2 = detail::xavier_uniform(cfg.d_ff, cfg.d_model, rng);
        l.b2 = Tensor::zeros({cfg.d_model});
    }
    p.w_dec1 = detail::xavier_uniform(2 + cfg.d_model, cfg.d_model, rng);
    p.b_dec1 = Tensor::zeros({cfg.d_model});
    p.w_dec2 = Tensor::zeros({cfg.d_model, 2});
    p.b_dec2 = Tensor::zeros({2});
    return p;
}

// Affine bridge from the text-embedding space to feature space.
inline Tensor project_prompt(const Tensor& p_mean_txt, const Tensor& w, const Tensor& b) {
    return add(matmul(p_mean_txt, w), b);
}

// x: T x d_feat; p_mean: 1 x d_feat (broadcast over steps) or T x d_feat
// (one prompt per step). Output g*x + (1-g)*p with one shared gate.
inline Tensor pgf_fuse(const Tensor& x, const Tensor& p_mean, const Tensor& w_gate, const Tensor& b_gate) {
    int t_steps = x.shape()[0];
    Tensor p_rows = (p_mean.rows() == t_steps) ? p_mean : tile_rows(p_mean, t_steps);
    Tensor gate = sigmoid(add(matmul(concat(x, p_rows), w_gate), b_gate));
    Tensor ones = Tensor::full(gate.shape(), 1.0);
    return add(mul(gate, x), mul(sub(ones, gate), p_rows));
}

inline Tensor sinusoidal_positional_encoding(int t_steps, int d_model) {
    std::vector<double> v(static_cast<size_t>(t_steps) * d_model);
    for (int pos = 0; pos < t_steps; ++pos)
        for (int i = 0; i < d_model; i += 2) {
            double freq = std::pow(10000.0, static_cast<double>(i) / d_model);
            v[static_cast<size_t>(pos) * d_model + i] = std::sin(pos / freq);
            if (i + 1 < d_model) v[static_cast<size_t>(pos) * d_model + i + 1] = std::cos(pos / freq);
        }
    return Tensor({t_steps, d_model}, std::move(v));
}

namespace detail {

inline Tensor multi_head_attention(const Tensor& x, const AttentionParams& ap, int n_heads) {
    int d_model = x.shape()[1];
    int d_head = d_model / n_heads;
    Tensor q = matmul(x, ap.wq);
    Tensor k = matmul(x, ap.wk);
    Tensor v = matmul(x, ap.wv);
    std::vector<Tensor> heads;
    heads.reserve(n_heads);
    double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(d_head));
    for (int h = 0; h < n_heads; ++h) {
        Tensor qh = slice_cols(q, h * d_head, (h + 1) * d_head);
        Tensor kh = slice_cols(k, h * d_head, (h + 1) * d_head);
        Tensor vh = slice_cols(v, h * d_head, (h + 1) * d_head);
        // Full bidirectional attention; the whole window is observed history.
        Tensor attn = softmax(scale(matmul(qh, transpose(kh)), inv_sqrt));
        heads.push_back(matmul(attn, vh));
    }
    Tensor merged = heads[0];
    for (int h = 1; h < n_heads; ++h) merged = concat(merged, heads[h]);
    return matmul(merged, ap.wo);
}

}  // namespace detail

// z: T x d_feat fused features -> T x d_model contextual states.
inline Tensor encode(const Tensor& z, const ModelParams& p, const ModelConfig& cfg) {
    if (z.ndim() != 2 || z.shape()[1] != cfg.d_feat)
        throw ShapeMismatch("encode", detail::shape_str(z.shape()));
    int t_steps = z.shape()[0];
    Tensor h = add(matmul(z, p.w_in), p.b_in);
    if (cfg.positional_encoding) h = add(h, sinusoidal_positional_encoding(t_steps, cfg.d_model));
    for (const auto& layer : p.layers) {
        Tensor attn_in = layer_norm(h, layer.ln1_scale, layer.ln1_shift, cfg.layer_norm_eps);
        h = add(h, detail::multi_head_attention(attn_in, layer.attn, cfg.n_heads));
        Tensor ffn_in = layer_norm(h, layer.ln2_scale, layer.ln2_shift, cfg.layer_norm_eps);
        Tensor ffn = add(matmul(relu(add(matmul(ffn_in, layer.w1), layer.b1)), layer.w2), layer.b2);
        h = add(h, ffn);
    }
    return h;
}

// Autoregressive decoder: y_0 is the last observed (normalized) position and
// each step adds MLP([y_{k-1}; h_T]) to it. Returns K x 2 normalized positions.
inline Tensor decode(const Tensor& h_last, const Tensor& last_pos, int horizons, const ModelParams& p) {
    Tensor y = last_pos;  // 1 x 2
    std::vector<Tensor> steps;
    steps.reserve(horizons);
    for (int k = 0; k < horizons; ++k) {
        Tensor hidden = tanh(add(matmul(concat(y, h_last), p.w_dec1), p.b_dec1));
        Tensor delta = add(matmul(hidden, p.w_dec2), p.b_dec2);
        y = add(y, delta);
        steps.push_back(y);
    }
    return concat_rows(steps);
}

// Everything the taped training path needs from one window.
struct ForwardInputs {
    Tensor features_norm;   // T x d_feat, constant
    Tensor prompt_mean;     // 1 x d_txt or T x d_txt, constant
    Tensor last_pos_norm;   // 1 x 2, constant
    LatLon last_pos_deg;    // anchor for denormalization
    Tensor targets_norm;    // K x 2, constant (empty rows impossible: K >= 1)
};

inline ForwardInputs prepare_inputs(const Window& w, const std::vector<PromptEmbedding>& prompts,
                                    const ModelConfig& cfg, const NormalizationStats& stats) {
    int t_steps = static_cast<int>(w.inputs.size());
    if (t_steps != cfg.history_len) throw ShapeMismatch("forward", "window length != configured history");
    ForwardInputs in;
    std::vector<double> feat(static_cast<size_t>(t_steps) * cfg.d_feat);
    for (int t = 0; t < t_steps; ++t) {
        FeatureVector nf = stats.normalize(w.inputs[t]);
        std::copy(nf.values.begin(), nf.values.end(), feat.begin() + static_cast<size_t>(t) * cfg.d_feat);
    }
    in.features_norm = Tensor({t_steps, cfg.d_feat}, std::move(feat));

    if (cfg.prompt_mode == PromptMode::kLast) {
        if (prompts.size() != 1) throw Error("prompt_mode=last expects one embedding per window");
        in.prompt_mean = Tensor({1, cfg.d_txt}, prompts[0].mean);
    } else {
        if (static_cast<int>(prompts.size()) != t_steps)
            throw Error("prompt_mode=per_step expects one embedding per input record");
        std::vector<double> pm(static_cast<size_t>(t_steps) * cfg.d_txt);
        for (int t = 0; t < t_steps; ++t)
            std::copy(prompts[t].mean.begin(), prompts[t].mean.end(), pm.begin() + static_cast<size_t>(t) * cfg.d_txt);
        in.prompt_mean = Tensor({t_steps, cfg.d_txt}, std::move(pm));
    }

    const StormRecord& last = w.input_records.back();
    in.last_pos_deg = {last.lat_deg, last.lon_deg};
    LatLon ln = stats.normalize_pos(in.last_pos_deg);
    in.last_pos_norm = Tensor::row({ln.lat, ln.lon});

    if (!w.targets.empty()) {
        std::vector<double> tv;
        tv.reserve(w.targets.size() * 2);
        for (const auto& t : w.targets) {
            LatLon n = stats.normalize_pos(t);
            tv.push_back(n.lat);
            tv.push_back(n.lon);
        }
        in.targets_norm = Tensor({static_cast<int>(w.targets.size()), 2}, std::move(tv));
    }
    return in;
}

// K x 2 normalized positions; differentiable wrt params when they sit on a tape.
inline Tensor forward_normalized(const ForwardInputs& in, const ModelParams& p, const ModelConfig& cfg) {
    Tensor fused = in.features_norm;
    if (cfg.pgf_enabled) {
        Tensor prompt_feat = project_prompt(in.prompt_mean, p.w_proj_txt, p.b_proj_txt);
        fused = pgf_fuse(in.features_norm, prompt_feat, p.w_gate, p.b_gate);
    }
    Tensor h = encode(fused, p, cfg);
    Tensor h_last = slice_rows(h, cfg.history_len - 1, cfg.history_len);
    return decode(h_last, in.last_pos_norm, cfg.horizons, p);
}

// Degrees, anchored at the last observed position: deg_k = last_deg +
// std * (y_k - y_0). With a zero decoder output layer y_k == y_0 bitwise, so
// the forecast equals the persistence baseline exactly, not just within
// rounding of a normalize/denormalize round trip.
inline std::vector<LatLon> forward_degrees(const Window& w, const std::vector<PromptEmbedding>& prompts,
                                           const ModelParams& p, const ModelConfig& cfg,
                                           const NormalizationStats& stats) {
    ForwardInputs in = prepare_inputs(w, prompts, cfg, stats);
    Tensor pred = forward_normalized(in, p, cfg);
    std::vector<LatLon> out;
    out.reserve(cfg.horizons);
    double y0_lat = in.last_pos_norm.data()[0];
    double y0_lon = in.last_pos_norm.data()[1];
    for (int k = 0; k < cfg.horizons; ++k) {
        double dlat = pred.at(k, 0) - y0_lat;
        double dlon = pred.at(k, 1) - y0_lon;
        out.push_back({in.last_pos_deg.lat + stats.stddev[kLat] * dlat, in.last_pos_deg.lon + stats.stddev[kLon] * dlon});
    }
    return out;
}

}  // namespace tyfo
