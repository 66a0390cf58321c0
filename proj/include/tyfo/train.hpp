#pragma once

// Mini-batch MSE training with Adam, global-norm gradient clipping and fully
// deterministic seeding: weight init, shuffling and batch order are all fixed
// functions of (seed, data, config), so identical runs produce bit-identical
// checkpoints.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "tyfo/checkpoint.hpp"
#include "tyfo/embed.hpp"
#include "tyfo/errors.hpp"
#include "tyfo/features.hpp"
#include "tyfo/model.hpp"
#include "tyfo/prompt.hpp"
#include "tyfo/rng.hpp"
#include "tyfo/tensor.hpp"

namespace tyfo {

struct TrainConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_eps = 1e-8;
    int batch_size = 32;
    int epochs = 100;
    uint64_t seed = 42;
    double grad_clip_norm = 1.0;
    int checkpoint_every = 0;  // 0 = final only
    std::string checkpoint_path;

    void validate() const {
        if (!(lr > 0)) throw ConfigError("lr must be positive");
        if (beta1 < 0 || beta1 >= 1 || beta2 < 0 || beta2 >= 1) throw ConfigError("betas must be in [0,1)");
        if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
        if (epochs < 0) throw ConfigError("epochs must be >= 0");
        if (!(grad_clip_norm > 0)) throw ConfigError("grad_clip_norm must be positive");
    }
};

struct TrainReport {
    std::vector<double> epoch_loss;
    std::vector<double> epoch_seconds;  // cumulative wall time at each epoch end
    double wall_seconds = 0.0;
    std::string checkpoint_path;

    std::string to_csv() const {
        std::string out = "epoch,loss,seconds\n";
        for (size_t i = 0; i < epoch_loss.size(); ++i)
            out += std::to_string(i + 1) + "," + detail::double_str(epoch_loss[i]) + "," +
                   detail::double_str(epoch_seconds[i]) + "\n";
        return out;
    }
};

// Resolves the embedding a window fuses: an imported vector wins over an
// imported prompt text, which wins over the deterministic template. Results
// are memoized per (storm, timestamp); values are deterministic, so rebuilds
// are benign.
class PromptProvider {
  public:
    PromptProvider(int d_txt, const PromptCache* prompts = nullptr, const EmbeddingCache* embeddings = nullptr)
        : embedder_(d_txt), prompts_(prompts), embeddings_(embeddings) {}

    const PromptEmbedding& get(const StormId& id, const StormRecord& rec) const {
        EmbeddingKey key{id.key(), rec.timestamp.compact()};
        auto it = memo_.find(key);
        if (it != memo_.end()) return it->second;

        if (embeddings_) {
            auto e = embeddings_->find(key);
            if (e != embeddings_->end()) {
                PromptEmbedding pe;
                pe.tokens.push_back(e->second);
                pe.mean = e->second;
                return memo_.emplace(key, std::move(pe)).first->second;
            }
        }
        std::string text;
        if (prompts_) {
            auto p = prompts_->find(key);
            if (p != prompts_->end()) text = p->second.text;
        }
        if (text.empty()) text = generate_prompt(id, rec).text;
        return memo_.emplace(key, embedder_.embed(text)).first->second;
    }

    // Embeddings fused for one window under the configured prompt mode.
    std::vector<PromptEmbedding> for_window(const Window& w, PromptMode mode) const {
        std::vector<PromptEmbedding> out;
        if (mode == PromptMode::kLast) {
            out.push_back(get(w.storm, w.input_records.back()));
        } else {
            out.reserve(w.input_records.size());
            for (const auto& r : w.input_records) out.push_back(get(w.storm, r));
        }
        return out;
    }

    const HashedTextEmbedder& embedder() const { return embedder_; }

  private:
    HashedTextEmbedder embedder_;
    const PromptCache* prompts_;
    const EmbeddingCache* embeddings_;
    mutable std::map<EmbeddingKey, PromptEmbedding> memo_;
};

// Mean squared error over all 2K normalized coordinates of one window.
inline Tensor loss(const Tensor& pred_norm, const Tensor& target_norm) { return mse(pred_norm, target_norm); }

namespace detail {

// Scales gradients in place so the global L2 norm is at most max_norm.
inline double clip_gradients(std::vector<std::vector<double>*>& grads, double max_norm) {
    double sq = 0.0;
    for (auto* g : grads)
        for (double v : *g) sq += v * v;
    double norm = std::sqrt(sq);
    if (norm <= max_norm || norm == 0.0) return norm;
    double s = max_norm / norm;
    for (auto* g : grads)
        for (double& v : *g) v *= s;
    return norm;
}

struct AdamState {
    std::vector<std::vector<double>> m, v;
    int64_t step = 0;
};

}  // namespace detail

struct TrainResult {
    ModelParams params;
    TrainReport report;
};

// Model weights plus the normalization statistics they were trained with.
inline void save_model_checkpoint(const std::string& path, const ModelParams& params,
                                  const NormalizationStats& stats) {
    std::vector<std::pair<std::string, Tensor>> tensors;
    params.for_each([&](const std::string& name, const Tensor& t) { tensors.emplace_back(name, t); });
    tensors.emplace_back("norm.mean", Tensor({kFeatureDim}, {stats.mean.begin(), stats.mean.end()}));
    tensors.emplace_back("norm.stddev", Tensor({kFeatureDim}, {stats.stddev.begin(), stats.stddev.end()}));
    save_checkpoint(path, tensors);
}

inline double evaluate_loss(const std::vector<Window>& windows, const PromptProvider& provider,
                            const ModelParams& params, const ModelConfig& cfg, const NormalizationStats& stats) {
    if (windows.empty()) throw NoData("evaluate_loss");
    double sum = 0.0;
    for (const auto& w : windows) {
        ForwardInputs in = prepare_inputs(w, provider.for_window(w, cfg.prompt_mode), cfg, stats);
        sum += loss(forward_normalized(in, params, cfg), in.targets_norm).item();
    }
    return sum / static_cast<double>(windows.size());
}

inline TrainResult train(const std::vector<Window>& windows, const PromptProvider& provider, const ModelConfig& mcfg,
                         const TrainConfig& tcfg, const NormalizationStats& stats,
                         const std::function<void(int, double)>& on_epoch = nullptr) {
    mcfg.validate();
    tcfg.validate();
    if (windows.empty()) throw NoTrainingData();

    auto t0 = std::chrono::steady_clock::now();
    ModelParams params = init_params(mcfg, tcfg.seed);

    // Inputs are fixed across epochs; prepare once.
    std::vector<ForwardInputs> inputs;
    inputs.reserve(windows.size());
    for (const auto& w : windows) inputs.push_back(prepare_inputs(w, provider.for_window(w, mcfg.prompt_mode), mcfg, stats));

    detail::AdamState adam;
    params.for_each([&](const std::string&, Tensor& t) {
        adam.m.emplace_back(t.size(), 0.0);
        adam.v.emplace_back(t.size(), 0.0);
    });

    SplitMix64 shuffle_rng(tcfg.seed ^ 0x517cc1b727220a95ULL);
    std::vector<size_t> order(windows.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;

    TrainReport report;
    report.epoch_loss.reserve(tcfg.epochs);

    for (int epoch = 1; epoch <= tcfg.epochs; ++epoch) {
        deterministic_shuffle(order, shuffle_rng);
        double epoch_sum = 0.0;
        for (size_t batch_start = 0; batch_start < order.size(); batch_start += tcfg.batch_size) {
            size_t batch_end = std::min(order.size(), batch_start + tcfg.batch_size);
            Tape tape;
            ModelParams taped = params.on_tape(tape);
            Tensor batch_loss;
            for (size_t i = batch_start; i < batch_end; ++i) {
                const ForwardInputs& in = inputs[order[i]];
                Tensor l = loss(forward_normalized(in, taped, mcfg), in.targets_norm);
                batch_loss = batch_loss.defined() ? add(batch_loss, l) : l;
            }
            double inv = 1.0 / static_cast<double>(batch_end - batch_start);
            batch_loss = scale(batch_loss, inv);
            epoch_sum += batch_loss.item() * static_cast<double>(batch_end - batch_start);
            tape.backward(batch_loss);

            std::vector<std::vector<double>> grads;
            taped.for_each([&](const std::string&, Tensor& t) { grads.push_back(t.grad()); });
            std::vector<std::vector<double>*> grad_ptrs;
            for (auto& g : grads) grad_ptrs.push_back(&g);
            detail::clip_gradients(grad_ptrs, tcfg.grad_clip_norm);

            ++adam.step;
            double bc1 = 1.0 - std::pow(tcfg.beta1, static_cast<double>(adam.step));
            double bc2 = 1.0 - std::pow(tcfg.beta2, static_cast<double>(adam.step));
            size_t pi = 0;
            params.for_each([&](const std::string&, Tensor& t) {
                auto& data = t.mutable_data();
                auto& g = grads[pi];
                auto& m = adam.m[pi];
                auto& v = adam.v[pi];
                for (size_t j = 0; j < data.size(); ++j) {
                    m[j] = tcfg.beta1 * m[j] + (1.0 - tcfg.beta1) * g[j];
                    v[j] = tcfg.beta2 * v[j] + (1.0 - tcfg.beta2) * g[j] * g[j];
                    double mhat = m[j] / bc1;
                    double vhat = v[j] / bc2;
                    data[j] -= tcfg.lr * mhat / (std::sqrt(vhat) + tcfg.adam_eps);
                }
                ++pi;
            });
        }
        double epoch_loss = epoch_sum / static_cast<double>(windows.size());
        if (!std::isfinite(epoch_loss)) throw DivergedLoss(epoch);
        report.epoch_loss.push_back(epoch_loss);
        report.epoch_seconds.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
        if (on_epoch) on_epoch(epoch, epoch_loss);

        if (!tcfg.checkpoint_path.empty() && tcfg.checkpoint_every > 0 && epoch % tcfg.checkpoint_every == 0 &&
            epoch != tcfg.epochs)
            save_model_checkpoint(tcfg.checkpoint_path, params, stats);
    }

    report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (!tcfg.checkpoint_path.empty()) {
        save_model_checkpoint(tcfg.checkpoint_path, params, stats);
        report.checkpoint_path = tcfg.checkpoint_path;
    }
    return {std::move(params), std::move(report)};
}

struct LoadedModel {
    ModelParams params;
    NormalizationStats stats;
};

inline LoadedModel load_model_checkpoint(const std::string& path, const ModelConfig& cfg) {
    auto tensors = load_checkpoint(path);
    LoadedModel out;
    out.params = init_params(cfg, 0);
    size_t used = 0;
    out.params.for_each([&](const std::string& name, Tensor& t) {
        auto it = tensors.find(name);
        if (it == tensors.end()) throw CheckpointError("missing tensor '" + name + "'");
        if (it->second.shape() != t.shape())
            throw CheckpointError("tensor '" + name + "' has shape " + detail::shape_str(it->second.shape()) +
                                  ", config expects " + detail::shape_str(t.shape()));
        t = it->second;
        ++used;
    });
    auto mean_it = tensors.find("norm.mean");
    auto std_it = tensors.find("norm.stddev");
    if (mean_it == tensors.end() || std_it == tensors.end())
        throw CheckpointError("missing normalization tensors");
    if (mean_it->second.size() != kFeatureDim || std_it->second.size() != kFeatureDim)
        throw CheckpointError("normalization tensors must have length " + std::to_string(kFeatureDim));
    for (int i = 0; i < kFeatureDim; ++i) {
        out.stats.mean[i] = mean_it->second.data()[i];
        out.stats.stddev[i] = std_it->second.data()[i];
    }
    used += 2;
    if (used != tensors.size()) throw CheckpointError("checkpoint contains unexpected extra tensors");
    return out;
}

}  // namespace tyfo
