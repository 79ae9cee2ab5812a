#pragma once

#include <cstdint>
#include <vector>

#include "abbie/tensor.hpp"

namespace abbie {

// Per-parameter AdamW moment buffers, aligned with the caller's fixed
// parameter order. Buffers are allocated lazily on the first step.
struct AdamWState {
    struct Slot {
        std::vector<float> m, v;
    };
    std::vector<Slot> slots;
    int64_t step = 0;
};

struct AdamWHyper {
    double beta1 = 0.9;
    double beta2 = 0.95;
    double eps = 1e-8;
    double weight_decay = 0.1;
};

// Bias-corrected AdamW with decoupled weight decay:
//   w <- w - lr * mhat/(sqrt(vhat)+eps) - lr * wd * w
void adamw_step(std::vector<Tensor*>& params, const std::vector<Tensor>& grads, AdamWState& state,
                double lr, const AdamWHyper& hp);

// Warmup-Stable-Decay schedule: linear 0 -> peak over warmup, constant peak,
// cosine peak -> min over decay. Segment lengths are fractions of the
// compute-optimal step count; warmup+stable+decay == total_steps.
struct WsdSchedule {
    int64_t total_steps = 0;
    int64_t warmup_steps = 0;
    int64_t stable_steps = 0;
    int64_t decay_steps = 0;
    double peak_lr = 3e-4;
    double min_lr_ratio = 0.1;

    double min_lr() const { return peak_lr * min_lr_ratio; }

    static WsdSchedule from_budget(int64_t total_steps, int64_t cot_steps, double peak_lr,
                                   double min_lr_ratio, double warmup_frac = 0.25,
                                   double decay_frac = 0.20);
};

double lr_at(int64_t step, const WsdSchedule& s);

// Compute-optimal token budget: 20 tokens per model parameter.
uint64_t cot_tokens(uint64_t param_count);

}  // namespace abbie
