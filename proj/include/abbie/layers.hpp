#pragma once

#include <vector>

#include "abbie/tensor.hpp"

namespace abbie {

// Precomputed rotation tables. The rotation angle for pair j at position p is
// p * theta^(-2j/d_head); cos/sin are evaluated in double and stored in S.
template <class S>
struct RopeTableT {
    int64_t d_head = 0;
    int64_t max_len = 0;
    double theta = 10000.0;
    std::vector<S> cos_tab, sin_tab;  // [max_len][d_head/2]
};

template <class S>
RopeTableT<S> make_rope_table(int64_t d_head, int64_t max_len, double theta);

using RopeTable = RopeTableT<float>;

// Weights of one pre-norm transformer block. No bias terms anywhere.
template <class S>
struct BlockParamsT {
    TensorT<S> wq, wk, wv, wo;  // [d,d], [d,d_kv], [d,d_kv], [d,d]
    TensorT<S> w1, w2;          // [d,f], [f,d]
    TensorT<S> pre_attn_gain, pre_ffn_gain;  // [d]
};

using BlockParams = BlockParamsT<float>;

// Rotates consecutive pairs of x[b,h,t,hd] by their position angle.
// Differentiable; preserves the 2-norm of every pair.
template <class S>
TensorT<S> rope_apply(const TensorT<S>& x, const std::vector<int64_t>& positions,
                      const RopeTableT<S>& table);

// Causal grouped-query attention. Query head q attends through KV head
// floor(q / (n_heads/n_kv_heads)); scores scaled by 1/sqrt(d_head); position i
// sees positions j <= i only.
template <class S>
TensorT<S> causal_gqa_attention(const TensorT<S>& x, const BlockParamsT<S>& p,
                                int64_t n_heads, int64_t n_kv_heads,
                                const RopeTableT<S>& rope,
                                const std::vector<int64_t>& positions);

// w2 * silu(w1 * x); plain two-matrix MLP, no gate.
template <class S>
TensorT<S> ffn_forward(const TensorT<S>& x, const BlockParamsT<S>& p);

// y = x + Attn(RMSNorm(x)); out = y + FFN(RMSNorm(y)).
// When attn_delta/ffn_delta are given they receive the two residual
// contributions, so out - x = attn_delta + ffn_delta.
template <class S>
TensorT<S> block_forward(const TensorT<S>& x, const BlockParamsT<S>& p, int64_t n_heads,
                         int64_t n_kv_heads, const RopeTableT<S>& rope,
                         const std::vector<int64_t>& positions, S eps,
                         TensorT<S>* attn_delta = nullptr, TensorT<S>* ffn_delta = nullptr);

}  // namespace abbie
