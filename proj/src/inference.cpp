#include "abbie/inference.hpp"

#include <cmath>

#include "abbie/data.hpp"
#include "abbie/rng.hpp"

namespace abbie {

namespace {

// Row-vector times matrix, k accumulated ascending: the same per-element
// order as the batched kernel, so incremental logits match the full pass.
void vec_mat(const float* x, const float* w, float* out, int64_t k, int64_t n) {
    gemm_acc(x, w, out, 1, k, n);
}

void rms_norm_row(const float* x, const float* gain, float* out, int64_t d, float eps) {
    float m = 0.0f;
    for (int64_t j = 0; j < d; ++j) m += x[j] * x[j];
    m /= static_cast<float>(d);
    const float inv = 1.0f / std::sqrt(m + eps);
    for (int64_t j = 0; j < d; ++j) out[j] = x[j] * inv * gain[j];
}

void rope_row(float* x, int64_t n_heads, int64_t hd, int64_t pos, const RopeTable& table) {
    const int64_t half = hd / 2;
    const float* cr = table.cos_tab.data() + pos * half;
    const float* sr = table.sin_tab.data() + pos * half;
    for (int64_t h = 0; h < n_heads; ++h) {
        float* row = x + h * hd;
        for (int64_t j = 0; j < half; ++j) {
            const float x0 = row[2 * j], x1 = row[2 * j + 1];
            row[2 * j] = x0 * cr[j] - x1 * sr[j];
            row[2 * j + 1] = x0 * sr[j] + x1 * cr[j];
        }
    }
}

}  // namespace

InferenceSession::InferenceSession(Model& model, int64_t r, uint64_t depth_eval_seed)
    : model_(model), r_(r), depth_eval_seed_(depth_eval_seed) {
    if (r < 1) throw UsageError("inference: r must be >= 1");
    if (model.config.variant == Variant::kStd && r != 1)
        throw UsageError("variant std decodes with r = 1");
    head_caches_.resize(model.params.head_blocks.size());
    tail_caches_.resize(model.params.tail_blocks.size());
}

void InferenceSession::reset() {
    next_pos_ = 0;
    for (auto& c : head_caches_) {
        c.k.clear();
        c.v.clear();
    }
    for (auto& c : tail_caches_) {
        c.k.clear();
        c.v.clear();
    }
    h0_history_.clear();
}

std::vector<float> InferenceSession::incr_block(const BlockParams& p, BlockCache& cache,
                                                const std::vector<float>& x, int64_t pos) {
    const ModelConfig& cfg = model_.config;
    const int64_t d = cfg.d_model, f = cfg.ffn_size;
    const int64_t nh = cfg.n_heads, nkv = cfg.n_kv_heads;
    const int64_t hd = cfg.d_head(), dkv = cfg.d_kv();
    const int64_t group = nh / nkv;
    const float eps = static_cast<float>(cfg.rms_eps);

    std::vector<float> xn(static_cast<size_t>(d));
    rms_norm_row(x.data(), p.pre_attn_gain.data(), xn.data(), d, eps);

    std::vector<float> q(static_cast<size_t>(d), 0.0f);
    std::vector<float> k(static_cast<size_t>(dkv), 0.0f);
    std::vector<float> v(static_cast<size_t>(dkv), 0.0f);
    vec_mat(xn.data(), p.wq.data(), q.data(), d, d);
    vec_mat(xn.data(), p.wk.data(), k.data(), d, dkv);
    vec_mat(xn.data(), p.wv.data(), v.data(), d, dkv);
    rope_row(q.data(), nh, hd, pos, model_.rope);
    rope_row(k.data(), nkv, hd, pos, model_.rope);
    cache.k.insert(cache.k.end(), k.begin(), k.end());
    cache.v.insert(cache.v.end(), v.begin(), v.end());

    const float inv_sqrt = static_cast<float>(1.0 / std::sqrt(static_cast<double>(hd)));
    std::vector<float> ctx(static_cast<size_t>(d), 0.0f);
    std::vector<float> scores(static_cast<size_t>(pos + 1));
    for (int64_t h = 0; h < nh; ++h) {
        const int64_t kvh = h / group;
        const float* qh = q.data() + h * hd;
        for (int64_t j = 0; j <= pos; ++j) {
            const float* kj = cache.k.data() + j * dkv + kvh * hd;
            float dot = 0.0f;
            for (int64_t u = 0; u < hd; ++u) dot += qh[u] * kj[u];
            scores[static_cast<size_t>(j)] = dot * inv_sqrt;
        }
        float mx = scores[0];
        for (int64_t j = 1; j <= pos; ++j) mx = std::max(mx, scores[static_cast<size_t>(j)]);
        float sum = 0.0f;
        for (int64_t j = 0; j <= pos; ++j) {
            scores[static_cast<size_t>(j)] = std::exp(scores[static_cast<size_t>(j)] - mx);
            sum += scores[static_cast<size_t>(j)];
        }
        const float inv = 1.0f / sum;
        for (int64_t j = 0; j <= pos; ++j) scores[static_cast<size_t>(j)] *= inv;
        float* ch = ctx.data() + h * hd;
        for (int64_t j = 0; j <= pos; ++j) {
            const float pj = scores[static_cast<size_t>(j)];
            const float* vj = cache.v.data() + j * dkv + kvh * hd;
            for (int64_t u = 0; u < hd; ++u) ch[u] += pj * vj[u];
        }
    }

    std::vector<float> y(static_cast<size_t>(d), 0.0f);
    vec_mat(ctx.data(), p.wo.data(), y.data(), d, d);
    for (int64_t j = 0; j < d; ++j) y[static_cast<size_t>(j)] += x[static_cast<size_t>(j)];

    rms_norm_row(y.data(), p.pre_ffn_gain.data(), xn.data(), d, eps);
    std::vector<float> hidden(static_cast<size_t>(f), 0.0f);
    vec_mat(xn.data(), p.w1.data(), hidden.data(), d, f);
    for (int64_t j = 0; j < f; ++j) {
        const float s = 1.0f / (1.0f + std::exp(-hidden[static_cast<size_t>(j)]));
        hidden[static_cast<size_t>(j)] *= s;
    }
    std::vector<float> out(static_cast<size_t>(d), 0.0f);
    vec_mat(hidden.data(), p.w2.data(), out.data(), f, d);
    for (int64_t j = 0; j < d; ++j) out[static_cast<size_t>(j)] += y[static_cast<size_t>(j)];
    return out;
}

std::vector<float> InferenceSession::step(int32_t token) {
    const ModelConfig& cfg = model_.config;
    if (token < 0 || token >= cfg.vocab_size)
        throw DataError("token id " + std::to_string(token) + " out of range [0," +
                        std::to_string(cfg.vocab_size) + ")");
    if (next_pos_ >= cfg.max_seq_len)
        throw UsageError("sequence length exceeds max_seq_len " + std::to_string(cfg.max_seq_len));
    const int64_t pos = next_pos_++;
    const int64_t d = cfg.d_model;

    std::vector<float> x(model_.params.embedding.data() + token * d,
                         model_.params.embedding.data() + (token + 1) * d);
    for (size_t i = 0; i < head_caches_.size(); ++i)
        x = incr_block(model_.params.head_blocks[i], head_caches_[i], x, pos);
    h0_history_.insert(h0_history_.end(), x.begin(), x.end());

    // Body: full-prefix recompute at this r (per-iteration states for earlier
    // positions depend on the iteration, so the head/tail caching trick does
    // not carry over).
    Tensor h0({1, pos + 1, d}, h0_history_);
    DepthNoise noise;
    noise.eval_seed = depth_eval_seed_;
    Tensor hr = model_.body_iterate(h0, r_, nullptr, nullptr, noise);
    std::vector<float> h(hr.data() + pos * d, hr.data() + (pos + 1) * d);

    for (size_t i = 0; i < tail_caches_.size(); ++i)
        h = incr_block(model_.params.tail_blocks[i], tail_caches_[i], h, pos);

    std::vector<float> normed(static_cast<size_t>(d));
    rms_norm_row(h.data(), model_.params.final_norm_gain.data(), normed.data(), d,
                 static_cast<float>(cfg.rms_eps));

    // Tied unembedding: logits = normed * W^T. Transpose W so the contraction
    // runs k-outer like the full pass.
    const int64_t vocab = cfg.vocab_size;
    std::vector<float> wt(static_cast<size_t>(d * vocab));
    const float* w = model_.params.embedding.data();
    for (int64_t vv = 0; vv < vocab; ++vv)
        for (int64_t j = 0; j < d; ++j) wt[static_cast<size_t>(j * vocab + vv)] = w[vv * d + j];
    std::vector<float> logits(static_cast<size_t>(vocab), 0.0f);
    vec_mat(normed.data(), wt.data(), logits.data(), d, vocab);
    return logits;
}

std::string sample_text(Model& model, const std::string& prompt, int64_t r, int64_t max_new,
                        double temperature, uint64_t sample_seed, uint64_t depth_eval_seed) {
    if (temperature < 0.0) throw UsageError("sample: temperature must be >= 0");
    if (max_new < 0) throw UsageError("sample: max_new must be >= 0");
    ByteTokenizer tok;
    const auto prompt_ids = tok.encode(prompt);
    if (prompt_ids.empty())
        throw UsageError("sample: prompt must contain at least one byte to condition on");

    InferenceSession session(model, r, depth_eval_seed);
    std::vector<float> logits;
    for (int32_t id : prompt_ids) logits = session.step(id);

    Prng rng(sample_seed);
    std::vector<int32_t> out_ids;
    for (int64_t i = 0; i < max_new; ++i) {
        int32_t next = 0;
        if (temperature == 0.0) {
            for (size_t j = 1; j < logits.size(); ++j)
                if (logits[j] > logits[static_cast<size_t>(next)]) next = static_cast<int32_t>(j);
        } else {
            double mx = logits[0];
            for (float lv : logits) mx = std::max(mx, static_cast<double>(lv));
            std::vector<double> probs(logits.size());
            double sum = 0.0;
            for (size_t j = 0; j < logits.size(); ++j) {
                probs[j] = std::exp((static_cast<double>(logits[j]) - mx) / temperature);
                sum += probs[j];
            }
            const double u = rng.uniform() * sum;
            double acc = 0.0;
            next = static_cast<int32_t>(logits.size()) - 1;
            for (size_t j = 0; j < probs.size(); ++j) {
                acc += probs[j];
                if (u < acc) {
                    next = static_cast<int32_t>(j);
                    break;
                }
            }
        }
        out_ids.push_back(next);
        if (i + 1 < max_new) logits = session.step(next);
    }
    return tok.decode(out_ids);
}

}  // namespace abbie
