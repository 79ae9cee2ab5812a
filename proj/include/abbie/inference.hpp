#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "abbie/model.hpp"

namespace abbie {

// Token-at-a-time decoding. Head and tail blocks keep per-position KV caches
// (valid under causality: earlier positions never change). The body is
// recomputed over the whole prefix for every emitted token: with recursion a
// single per-block cache would be reused by r different iteration states, so
// naive body caching does not apply. Logits match the full forward pass
// bitwise.
class InferenceSession {
public:
    InferenceSession(Model& model, int64_t r, uint64_t depth_eval_seed);

    // Feeds one token, returns the logits row [vocab] for the next position.
    std::vector<float> step(int32_t token);

    int64_t length() const { return next_pos_; }
    void reset();

private:
    struct BlockCache {
        std::vector<float> k, v;  // [pos][d_kv], appended per step
    };

    std::vector<float> incr_block(const BlockParams& p, BlockCache& cache,
                                  const std::vector<float>& x, int64_t pos);

    Model& model_;
    int64_t r_;
    uint64_t depth_eval_seed_;
    int64_t next_pos_ = 0;
    std::vector<BlockCache> head_caches_, tail_caches_;
    std::vector<float> h0_history_;  // [pos][d], body input for the full prefix
};

// Greedy when temperature == 0; otherwise seeded categorical sampling over
// softmax(logits / temperature). Returns only the continuation.
std::string sample_text(Model& model, const std::string& prompt, int64_t r, int64_t max_new,
                        double temperature, uint64_t sample_seed, uint64_t depth_eval_seed);

}  // namespace abbie
