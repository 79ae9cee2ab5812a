#include "abbie/layers.hpp"

#include <cmath>

namespace abbie {

template <class S>
RopeTableT<S> make_rope_table(int64_t d_head, int64_t max_len, double theta) {
    if (d_head <= 0 || d_head % 2 != 0)
        throw ConfigError("rope: d_head must be positive and even, got " + std::to_string(d_head));
    if (max_len <= 0) throw ConfigError("rope: max_len must be positive");
    RopeTableT<S> t;
    t.d_head = d_head;
    t.max_len = max_len;
    t.theta = theta;
    const int64_t half = d_head / 2;
    t.cos_tab.resize(static_cast<size_t>(max_len * half));
    t.sin_tab.resize(static_cast<size_t>(max_len * half));
    for (int64_t j = 0; j < half; ++j) {
        const double freq = std::pow(theta, -2.0 * static_cast<double>(j) / static_cast<double>(d_head));
        for (int64_t p = 0; p < max_len; ++p) {
            const double ang = static_cast<double>(p) * freq;
            t.cos_tab[static_cast<size_t>(p * half + j)] = static_cast<S>(std::cos(ang));
            t.sin_tab[static_cast<size_t>(p * half + j)] = static_cast<S>(std::sin(ang));
        }
    }
    return t;
}

template <class S>
TensorT<S> rope_apply(const TensorT<S>& x, const std::vector<int64_t>& positions,
                      const RopeTableT<S>& table) {
    if (x.ndim() != 4) throw ShapeError("rope_apply expects [b,h,t,hd], got " + shape_str(x.shape()));
    const int64_t b = x.dim(0), h = x.dim(1), t = x.dim(2), hd = x.dim(3);
    if (hd != table.d_head)
        throw ConfigError("rope_apply: head dim " + std::to_string(hd) + " does not match table d_head " +
                          std::to_string(table.d_head));
    if (static_cast<int64_t>(positions.size()) != t)
        throw ShapeError("rope_apply: " + std::to_string(positions.size()) + " positions for t=" +
                         std::to_string(t));
    for (int64_t p : positions)
        if (p < 0 || p >= table.max_len)
            throw UsageError("rope_apply: position " + std::to_string(p) + " outside table length " +
                             std::to_string(table.max_len));

    const int64_t half = hd / 2;
    TensorT<S> out(x.shape());
    const S* xd = x.data();
    S* od = out.data();
    for (int64_t bh = 0; bh < b * h; ++bh) {
        for (int64_t ti = 0; ti < t; ++ti) {
            const S* cr = table.cos_tab.data() + positions[static_cast<size_t>(ti)] * half;
            const S* sr = table.sin_tab.data() + positions[static_cast<size_t>(ti)] * half;
            const S* xr = xd + (bh * t + ti) * hd;
            S* orow = od + (bh * t + ti) * hd;
            for (int64_t j = 0; j < half; ++j) {
                const S x0 = xr[2 * j], x1 = xr[2 * j + 1];
                orow[2 * j] = x0 * cr[j] - x1 * sr[j];
                orow[2 * j + 1] = x0 * sr[j] + x1 * cr[j];
            }
        }
    }

    DiffTape<S>* tape = x.tape();
    if (finite_checks_enabled()) check_finite(out, "rope_apply");
    if (!tape) return out;
    int64_t xn = x.node();
    std::vector<int64_t> pos = positions;
    // Copy the per-position rows so the closure does not dangle if the table
    // dies before backward runs.
    std::vector<S> cos_rows(static_cast<size_t>(t * half)), sin_rows(static_cast<size_t>(t * half));
    for (int64_t ti = 0; ti < t; ++ti)
        for (int64_t j = 0; j < half; ++j) {
            cos_rows[static_cast<size_t>(ti * half + j)] =
                table.cos_tab[static_cast<size_t>(pos[static_cast<size_t>(ti)] * half + j)];
            sin_rows[static_cast<size_t>(ti * half + j)] =
                table.sin_tab[static_cast<size_t>(pos[static_cast<size_t>(ti)] * half + j)];
        }
    return tape->record("rope_apply", std::move(out),
                        [xn, cos_rows, sin_rows, b, h, t, half, hd](DiffTape<S>& tp,
                                                                    const std::vector<S>& g) {
                            if (xn < 0) return;
                            std::vector<S>& dx = tp.grad_buffer(xn);
                            for (int64_t bh = 0; bh < b * h; ++bh)
                                for (int64_t ti = 0; ti < t; ++ti) {
                                    const S* cr = cos_rows.data() + ti * half;
                                    const S* sr = sin_rows.data() + ti * half;
                                    const S* gr = g.data() + (bh * t + ti) * hd;
                                    S* dr = dx.data() + (bh * t + ti) * hd;
                                    for (int64_t j = 0; j < half; ++j) {
                                        const S g0 = gr[2 * j], g1 = gr[2 * j + 1];
                                        dr[2 * j] += g0 * cr[j] + g1 * sr[j];
                                        dr[2 * j + 1] += -g0 * sr[j] + g1 * cr[j];
                                    }
                                }
                        });
}

template <class S>
TensorT<S> causal_gqa_attention(const TensorT<S>& x, const BlockParamsT<S>& p, int64_t n_heads,
                                int64_t n_kv_heads, const RopeTableT<S>& rope,
                                const std::vector<int64_t>& positions) {
    if (x.ndim() != 3) throw ShapeError("attention expects [b,t,d], got " + shape_str(x.shape()));
    const int64_t d = x.dim(2);
    if (d % n_heads != 0 || n_heads % n_kv_heads != 0)
        throw ConfigError("attention: d=" + std::to_string(d) + " heads=" + std::to_string(n_heads) +
                          " kv_heads=" + std::to_string(n_kv_heads) + " violate divisibility");
    const int64_t hd = d / n_heads;
    const int64_t group = n_heads / n_kv_heads;

    auto q = rope_apply(split_heads(matmul(x, p.wq), n_heads), positions, rope);
    auto k = rope_apply(split_heads(matmul(x, p.wk), n_kv_heads), positions, rope);
    auto v = split_heads(matmul(x, p.wv), n_kv_heads);
    if (group > 1) {
        k = repeat_heads(k, group);
        v = repeat_heads(v, group);
    }
    auto scores = scale(matmul(q, transpose_last2(k)), static_cast<S>(1.0 / std::sqrt(static_cast<double>(hd))));
    auto probs = causal_softmax(scores);
    auto ctx = merge_heads(matmul(probs, v));
    return matmul(ctx, p.wo);
}

template <class S>
TensorT<S> ffn_forward(const TensorT<S>& x, const BlockParamsT<S>& p) {
    return matmul(silu(matmul(x, p.w1)), p.w2);
}

template <class S>
TensorT<S> block_forward(const TensorT<S>& x, const BlockParamsT<S>& p, int64_t n_heads,
                         int64_t n_kv_heads, const RopeTableT<S>& rope,
                         const std::vector<int64_t>& positions, S eps, TensorT<S>* attn_delta,
                         TensorT<S>* ffn_delta) {
    auto attn = causal_gqa_attention(rms_norm(x, p.pre_attn_gain, eps), p, n_heads, n_kv_heads, rope,
                                     positions);
    auto y = add(x, attn);
    auto ffn = ffn_forward(rms_norm(y, p.pre_ffn_gain, eps), p);
    auto out = add(y, ffn);
    if (attn_delta) *attn_delta = attn;
    if (ffn_delta) *ffn_delta = ffn;
    return out;
}

#define ABBIE_INSTANTIATE_LAYERS(S)                                                               \
    template RopeTableT<S> make_rope_table<S>(int64_t, int64_t, double);                          \
    template TensorT<S> rope_apply<S>(const TensorT<S>&, const std::vector<int64_t>&,             \
                                      const RopeTableT<S>&);                                      \
    template TensorT<S> causal_gqa_attention<S>(const TensorT<S>&, const BlockParamsT<S>&,        \
                                                int64_t, int64_t, const RopeTableT<S>&,           \
                                                const std::vector<int64_t>&);                     \
    template TensorT<S> ffn_forward<S>(const TensorT<S>&, const BlockParamsT<S>&);                \
    template TensorT<S> block_forward<S>(const TensorT<S>&, const BlockParamsT<S>&, int64_t,      \
                                         int64_t, const RopeTableT<S>&,                           \
                                         const std::vector<int64_t>&, S, TensorT<S>*,             \
                                         TensorT<S>*);

ABBIE_INSTANTIATE_LAYERS(float)
ABBIE_INSTANTIATE_LAYERS(double)

}  // namespace abbie
