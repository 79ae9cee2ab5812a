#include "abbie/model.hpp"

#include <cmath>

namespace abbie {

const char* variant_name(Variant v) {
    switch (v) {
        case Variant::kStd: return "std";
        case Variant::kAbbieC: return "abbie-c";
        case Variant::kAbbieD: return "abbie-d";
        case Variant::kDepth: return "depth";
    }
    return "?";
}

Variant variant_from_name(const std::string& name) {
    if (name == "std") return Variant::kStd;
    if (name == "abbie-c") return Variant::kAbbieC;
    if (name == "abbie-d") return Variant::kAbbieD;
    if (name == "depth") return Variant::kDepth;
    throw ConfigError("unknown variant '" + name + "' (std, abbie-c, abbie-d, depth)");
}

void ModelConfig::validate() const {
    auto fail = [](const std::string& m) { throw ConfigError("model config: " + m); };
    if (n_head_blocks < 0 || n_body_blocks < 0 || n_tail_blocks < 0)
        fail("block counts must be non-negative");
    if (n_head_blocks + n_body_blocks + n_tail_blocks < 1)
        fail("n_head_blocks + n_body_blocks + n_tail_blocks must be >= 1");
    if (d_model < 1) fail("d_model must be positive");
    if (ffn_size < 1) fail("ffn_size must be positive");
    if (n_heads < 1 || n_kv_heads < 1) fail("head counts must be positive");
    if (d_model % n_heads != 0) fail("d_model must be divisible by n_heads");
    if (n_heads % n_kv_heads != 0) fail("n_heads must be divisible by n_kv_heads");
    if (d_head() % 2 != 0) fail("d_head = d_model/n_heads must be even for rotary embeddings");
    if (vocab_size < 1) fail("vocab_size must be positive");
    if (max_seq_len < 1) fail("max_seq_len must be positive");
    if (train_iters < 1) fail("train_iters must be >= 1");
    if (variant == Variant::kStd && train_iters != 1) fail("variant std requires train_iters = 1");
    if (init_std <= 0.0) fail("init_std must be positive");
    if (rms_eps < 0.0) fail("rms_eps must be non-negative");
}

ParamCounts count_params(const ModelConfig& cfg) {
    cfg.validate();
    const int64_t d = cfg.d_model, f = cfg.ffn_size, dkv = cfg.d_kv();
    const int64_t per_block = 2 * d * d + 2 * d * dkv + 2 * d * f + 2 * d;
    ParamCounts c;
    c.embedding = cfg.vocab_size * d;
    c.head = cfg.n_head_blocks * per_block;
    c.body = cfg.n_body_blocks * per_block;
    c.tail = cfg.n_tail_blocks * per_block + d;  // final norm gain rides with the tail
    c.depth_proj = cfg.variant == Variant::kDepth ? 2 * d * d : 0;
    c.total = c.embedding + c.head + c.body + c.tail + c.depth_proj;
    return c;
}

namespace {

template <class S>
void fill_trunc_normal(TensorT<S>& t, Prng& rng, double std_dev) {
    for (S& v : t.values()) v = static_cast<S>(rng.gauss_trunc3() * std_dev);
}

}  // namespace

template <class S>
ModelT<S> ModelT<S>::init(const ModelConfig& cfg) {
    cfg.validate();
    ModelT<S> m;
    m.config = cfg;
    m.rope = make_rope_table<S>(cfg.d_head(), cfg.max_seq_len, cfg.rope_theta);

    const int64_t d = cfg.d_model, f = cfg.ffn_size, dkv = cfg.d_kv();
    auto make_block = [&] {
        BlockParamsT<S> b;
        b.wq = TensorT<S>({d, d});
        b.wk = TensorT<S>({d, dkv});
        b.wv = TensorT<S>({d, dkv});
        b.wo = TensorT<S>({d, d});
        b.w1 = TensorT<S>({d, f});
        b.w2 = TensorT<S>({f, d});
        b.pre_attn_gain = TensorT<S>::full({d}, S(1));
        b.pre_ffn_gain = TensorT<S>::full({d}, S(1));
        return b;
    };
    m.params.embedding = TensorT<S>({cfg.vocab_size, d});
    for (int64_t i = 0; i < cfg.n_head_blocks; ++i) m.params.head_blocks.push_back(make_block());
    for (int64_t i = 0; i < cfg.n_body_blocks; ++i) m.params.body_blocks.push_back(make_block());
    for (int64_t i = 0; i < cfg.n_tail_blocks; ++i) m.params.tail_blocks.push_back(make_block());
    m.params.final_norm_gain = TensorT<S>::full({d}, S(1));
    if (cfg.variant == Variant::kDepth) m.params.depth_proj = TensorT<S>({2 * d, d});

    // Draws happen in for_each order; gains keep their ones.
    Prng rng(cfg.seed);
    m.params.for_each([&](const std::string& name, TensorT<S>& t) {
        if (name.find("gain") != std::string::npos) return;
        fill_trunc_normal(t, rng, cfg.init_std);
    });
    return m;
}

template <class S>
std::vector<int64_t> ModelT<S>::positions_for(const Ids& tokens) const {
    if (tokens.shape.size() != 2)
        throw ShapeError("tokens must be [b,t], got " + shape_str(tokens.shape));
    const int64_t t = tokens.shape[1];
    if (t > config.max_seq_len)
        throw UsageError("sequence length " + std::to_string(t) + " exceeds max_seq_len " +
                         std::to_string(config.max_seq_len));
    std::vector<int64_t> pos(static_cast<size_t>(t));
    for (int64_t i = 0; i < t; ++i) pos[static_cast<size_t>(i)] = i;
    return pos;
}

template <class S>
TensorT<S> ModelT<S>::head_forward(const Ids& tokens, DiffTape<S>* tape) {
    params.attach(tape);
    auto pos = positions_for(tokens);
    auto h = embedding_gather(params.embedding, tokens);
    for (auto& blk : params.head_blocks)
        h = block_forward(h, blk, config.n_heads, config.n_kv_heads, rope, pos,
                          static_cast<S>(config.rms_eps));
    return h;
}

template <class S>
TensorT<S> ModelT<S>::body_stack(const TensorT<S>& h, const std::vector<int64_t>& positions) {
    TensorT<S> x = h;
    for (auto& blk : params.body_blocks)
        x = block_forward(x, blk, config.n_heads, config.n_kv_heads, rope, positions,
                          static_cast<S>(config.rms_eps));
    return x;
}

template <class S>
TensorT<S> depth_initial_state(const ModelConfig& cfg, int64_t batch,
                               const std::vector<int64_t>& positions, const DepthNoiseT<S>& noise) {
    const int64_t t = static_cast<int64_t>(positions.size());
    const int64_t d = cfg.d_model;
    TensorT<S> s0({batch, t, d});
    S* sd = s0.data();
    if (noise.stream) {
        for (int64_t i = 0; i < s0.size(); ++i)
            sd[i] = static_cast<S>(noise.stream->gauss() * cfg.init_std);
    } else {
        // Position-keyed draws, identical across batch rows.
        for (int64_t ti = 0; ti < t; ++ti) {
            Prng rng(mix_seed(noise.eval_seed, static_cast<uint64_t>(positions[static_cast<size_t>(ti)])));
            for (int64_t j = 0; j < d; ++j) {
                const S v = static_cast<S>(rng.gauss() * cfg.init_std);
                for (int64_t bi = 0; bi < batch; ++bi) sd[(bi * t + ti) * d + j] = v;
            }
        }
    }
    return s0;
}

template <class S>
TensorT<S> ModelT<S>::body_iterate(const TensorT<S>& h0, int64_t r, DiffTape<S>* tape,
                                   IterationTraceT<S>* trace, const DepthNoiseT<S>& noise) {
    if (r < 1) throw UsageError("body_iterate: r must be >= 1, got " + std::to_string(r));
    if (config.variant == Variant::kStd && r != 1)
        throw UsageError("variant std runs the body exactly once; got r = " + std::to_string(r));
    params.attach(tape);
    std::vector<int64_t> pos(static_cast<size_t>(h0.dim(1)));
    for (size_t i = 0; i < pos.size(); ++i) pos[i] = static_cast<int64_t>(i);

    auto snapshot = [&](const TensorT<S>& s) {
        if (trace) trace->states.push_back(TensorT<S>(s.shape(), s.values()));
    };
    auto log_step = [&](const TensorT<S>& prev, const TensorT<S>& next) {
        if (!trace) return;
        snapshot(next);
        double abs = 0.0, prev_norm = 0.0;
        const int64_t dlast = prev.dim(prev.ndim() - 1);
        const int64_t rows = prev.size() / dlast;
        const S* a = prev.data();
        const S* b = next.data();
        for (int64_t rr = 0; rr < rows; ++rr) {
            double da = 0.0, dn = 0.0;
            for (int64_t j = 0; j < dlast; ++j) {
                const double diff = static_cast<double>(b[rr * dlast + j]) - static_cast<double>(a[rr * dlast + j]);
                da += diff * diff;
                dn += static_cast<double>(a[rr * dlast + j]) * static_cast<double>(a[rr * dlast + j]);
            }
            abs += std::sqrt(da);
            prev_norm += std::sqrt(dn);
        }
        abs /= static_cast<double>(rows);
        prev_norm /= static_cast<double>(rows);
        trace->abs_dist.push_back(abs);
        trace->rel_dist.push_back(abs / std::max(prev_norm, 1e-12));
    };

    if (config.variant == Variant::kDepth) {
        if (!params.depth_proj.defined())
            throw UsageError("depth variant requires depth_proj parameters");
        TensorT<S> s = depth_initial_state(config, h0.dim(0), pos, noise);
        if (tape) tape->watch(s);  // noise leaf: gradient sink, not trainable
        snapshot(s);
        for (int64_t k = 0; k < r; ++k) {
            TensorT<S> prev = s;
            s = body_stack(matmul(concat_lastdim(s, h0), params.depth_proj), pos);
            log_step(prev, s);
        }
        return s;
    }

    TensorT<S> h = h0;
    snapshot(h);
    for (int64_t k = 0; k < r; ++k) {
        TensorT<S> prev = h;
        TensorT<S> bh = body_stack(h, pos);
        h = config.variant == Variant::kAbbieD ? add(bh, h) : bh;
        log_step(prev, h);
    }
    return h;
}

template <class S>
TensorT<S> ModelT<S>::tail_forward(const TensorT<S>& h, DiffTape<S>* tape) {
    params.attach(tape);
    std::vector<int64_t> pos(static_cast<size_t>(h.dim(1)));
    for (size_t i = 0; i < pos.size(); ++i) pos[i] = static_cast<int64_t>(i);
    TensorT<S> x = h;
    for (auto& blk : params.tail_blocks)
        x = block_forward(x, blk, config.n_heads, config.n_kv_heads, rope, pos,
                          static_cast<S>(config.rms_eps));
    x = rms_norm(x, params.final_norm_gain, static_cast<S>(config.rms_eps));
    return matmul(x, transpose_last2(params.embedding));
}

template <class S>
TensorT<S> ModelT<S>::forward(const Ids& tokens, int64_t r, DiffTape<S>* tape,
                              IterationTraceT<S>* trace, const DepthNoiseT<S>& noise) {
    params.attach(tape);
    auto h0 = head_forward(tokens, tape);
    auto hr = body_iterate(h0, r, tape, trace, noise);
    return tail_forward(hr, tape);
}

template <class S>
double mean_token_l2(const TensorT<S>& x) {
    const int64_t d = x.dim(x.ndim() - 1);
    const int64_t rows = x.size() / d;
    const S* v = x.data();
    double total = 0.0;
    for (int64_t r = 0; r < rows; ++r) {
        double s = 0.0;
        for (int64_t j = 0; j < d; ++j)
            s += static_cast<double>(v[r * d + j]) * static_cast<double>(v[r * d + j]);
        total += std::sqrt(s);
    }
    return total / static_cast<double>(rows);
}

#define ABBIE_INSTANTIATE_MODEL(S)                                                        \
    template struct ModelT<S>;                                                            \
    template double mean_token_l2<S>(const TensorT<S>&);                                  \
    template TensorT<S> depth_initial_state<S>(const ModelConfig&, int64_t,               \
                                               const std::vector<int64_t>&,               \
                                               const DepthNoiseT<S>&);

ABBIE_INSTANTIATE_MODEL(float)
ABBIE_INSTANTIATE_MODEL(double)

}  // namespace abbie
