#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "abbie/layers.hpp"
#include "abbie/rng.hpp"
#include "abbie/tensor.hpp"

namespace abbie {

enum class Variant { kStd, kAbbieC, kAbbieD, kDepth };

const char* variant_name(Variant v);
Variant variant_from_name(const std::string& name);

struct ModelConfig {
    Variant variant = Variant::kStd;
    int64_t n_head_blocks = 1;
    int64_t n_body_blocks = 4;
    int64_t n_tail_blocks = 1;
    int64_t d_model = 128;
    int64_t ffn_size = 512;
    int64_t n_heads = 4;
    int64_t n_kv_heads = 2;
    double rope_theta = 10000.0;
    int64_t vocab_size = 256;
    int64_t max_seq_len = 256;
    int64_t train_iters = 1;  // body passes during training; Std requires 1
    double init_std = 0.02;
    double rms_eps = 1e-5;
    uint64_t seed = 1234;

    int64_t d_head() const { return d_model / n_heads; }
    int64_t d_kv() const { return n_kv_heads * d_head(); }
    void validate() const;  // throws ConfigError naming the violated invariant
};

struct ParamCounts {
    int64_t embedding = 0;
    int64_t head = 0;
    int64_t body = 0;
    int64_t tail = 0;  // includes the final norm gain
    int64_t depth_proj = 0;
    int64_t total = 0;
};

// Exact parameter counts per group. The embedding is counted once: the
// unembedding reuses its storage (tied).
ParamCounts count_params(const ModelConfig& cfg);

template <class S>
struct ModelParamsT {
    TensorT<S> embedding;  // [vocab, d]; unembedding = same storage transposed
    std::vector<BlockParamsT<S>> head_blocks, body_blocks, tail_blocks;
    TensorT<S> final_norm_gain;  // [d]
    TensorT<S> depth_proj;       // [2d, d]; defined iff variant == Depth

    // Visits every parameter tensor in a fixed order (the order used for
    // initialization draws, optimizer state, checkpoints and clipping).
    template <class F>
    void for_each(F&& fn) {
        fn("embedding", embedding);
        auto walk = [&fn](const char* group, std::vector<BlockParamsT<S>>& blocks) {
            for (size_t i = 0; i < blocks.size(); ++i) {
                const std::string base = std::string(group) + "." + std::to_string(i) + ".";
                fn(base + "wq", blocks[i].wq);
                fn(base + "wk", blocks[i].wk);
                fn(base + "wv", blocks[i].wv);
                fn(base + "wo", blocks[i].wo);
                fn(base + "w1", blocks[i].w1);
                fn(base + "w2", blocks[i].w2);
                fn(base + "pre_attn_gain", blocks[i].pre_attn_gain);
                fn(base + "pre_ffn_gain", blocks[i].pre_ffn_gain);
            }
        };
        walk("head", head_blocks);
        walk("body", body_blocks);
        walk("tail", tail_blocks);
        fn("final_norm.gain", final_norm_gain);
        if (depth_proj.defined()) fn("depth_proj", depth_proj);
    }

    // Registers every parameter as a tape leaf (or detaches when null).
    void attach(DiffTape<S>* tape) {
        for_each([tape](const std::string&, TensorT<S>& t) {
            if (!tape) {
                t.detach();
            } else if (t.tape() != tape) {
                tape->watch(t);
            }
        });
    }
};

using ModelParams = ModelParamsT<float>;

// States visited by the body loop (h_0..h_r, or s_0..s_r for Depth) together
// with the inter-iteration distances: abs is the mean per-token L2 of the
// state delta, rel divides by the mean per-token L2 of the previous state.
template <class S>
struct IterationTraceT {
    std::vector<TensorT<S>> states;
    std::vector<double> abs_dist;
    std::vector<double> rel_dist;
};

using IterationTrace = IterationTraceT<float>;

// Source of the Depth variant's initial state s_0.
// A live stream draws fresh noise (training); otherwise values are keyed on
// (eval_seed, position), which keeps them stable across batch layouts and
// incremental decoding.
template <class S>
struct DepthNoiseT {
    Prng* stream = nullptr;
    uint64_t eval_seed = 0;
};

using DepthNoise = DepthNoiseT<float>;

template <class S>
double mean_token_l2(const TensorT<S>& x);

template <class S>
struct ModelT {
    ModelConfig config;
    ModelParamsT<S> params;
    RopeTableT<S> rope;

    // Fresh weights: Normal(0, init_std^2) truncated at +/-3 sigma, seeded by
    // config.seed; norm gains start at 1.
    static ModelT init(const ModelConfig& cfg);

    // Embedding lookup followed by the head blocks. tokens: [b,t].
    TensorT<S> head_forward(const Ids& tokens, DiffTape<S>* tape = nullptr);

    // Runs the body for r iterations according to the variant.
    TensorT<S> body_iterate(const TensorT<S>& h0, int64_t r, DiffTape<S>* tape = nullptr,
                            IterationTraceT<S>* trace = nullptr,
                            const DepthNoiseT<S>& noise = {});

    // Tail blocks, final norm, tied unembedding. Returns logits [b,t,vocab].
    TensorT<S> tail_forward(const TensorT<S>& h, DiffTape<S>* tape = nullptr);

    // Full pass. r is free at inference regardless of config.train_iters.
    TensorT<S> forward(const Ids& tokens, int64_t r, DiffTape<S>* tape = nullptr,
                       IterationTraceT<S>* trace = nullptr, const DepthNoiseT<S>& noise = {});

private:
    TensorT<S> body_stack(const TensorT<S>& h, const std::vector<int64_t>& positions);
    std::vector<int64_t> positions_for(const Ids& tokens) const;
};

using Model = ModelT<float>;

// Depth initial state for a given position set; shared by forward and the
// incremental decoder.
template <class S>
TensorT<S> depth_initial_state(const ModelConfig& cfg, int64_t batch,
                               const std::vector<int64_t>& positions, const DepthNoiseT<S>& noise);

}  // namespace abbie
