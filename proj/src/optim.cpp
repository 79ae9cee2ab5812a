#include "abbie/optim.hpp"

#include <cmath>

namespace abbie {

void adamw_step(std::vector<Tensor*>& params, const std::vector<Tensor>& grads, AdamWState& state,
                double lr, const AdamWHyper& hp) {
    if (params.size() != grads.size())
        throw ShapeError("adamw_step: " + std::to_string(params.size()) + " params vs " +
                         std::to_string(grads.size()) + " grads");
    if (state.slots.empty()) {
        state.slots.resize(params.size());
        for (size_t i = 0; i < params.size(); ++i) {
            state.slots[i].m.assign(static_cast<size_t>(params[i]->size()), 0.0f);
            state.slots[i].v.assign(static_cast<size_t>(params[i]->size()), 0.0f);
        }
    }
    if (state.slots.size() != params.size())
        throw ShapeError("adamw_step: optimizer state holds " + std::to_string(state.slots.size()) +
                         " slots for " + std::to_string(params.size()) + " params");

    state.step += 1;
    const float b1 = static_cast<float>(hp.beta1);
    const float b2 = static_cast<float>(hp.beta2);
    const float bc1 = static_cast<float>(1.0 - std::pow(hp.beta1, static_cast<double>(state.step)));
    const float bc2 = static_cast<float>(1.0 - std::pow(hp.beta2, static_cast<double>(state.step)));
    const float flr = static_cast<float>(lr);
    const float feps = static_cast<float>(hp.eps);
    const float decay = static_cast<float>(lr * hp.weight_decay);

    for (size_t i = 0; i < params.size(); ++i) {
        Tensor& p = *params[i];
        const Tensor& g = grads[i];
        if (p.shape() != g.shape())
            throw ShapeError("adamw_step: param/grad shape mismatch " + shape_str(p.shape()) + " vs " +
                             shape_str(g.shape()));
        auto& slot = state.slots[i];
        if (slot.m.size() != static_cast<size_t>(p.size()))
            throw ShapeError("adamw_step: state buffer size mismatch for param " + std::to_string(i));
        float* w = p.data();
        const float* gd = g.data();
        const int64_t n = p.size();
        for (int64_t j = 0; j < n; ++j) {
            slot.m[static_cast<size_t>(j)] = b1 * slot.m[static_cast<size_t>(j)] + (1.0f - b1) * gd[j];
            slot.v[static_cast<size_t>(j)] = b2 * slot.v[static_cast<size_t>(j)] + (1.0f - b2) * gd[j] * gd[j];
            const float mhat = slot.m[static_cast<size_t>(j)] / bc1;
            const float vhat = slot.v[static_cast<size_t>(j)] / bc2;
            w[j] -= flr * (mhat / (std::sqrt(vhat) + feps)) + decay * w[j];
        }
    }
}

WsdSchedule WsdSchedule::from_budget(int64_t total_steps, int64_t cot_steps, double peak_lr,
                                     double min_lr_ratio, double warmup_frac, double decay_frac) {
    if (total_steps < 1) throw ConfigError("schedule: total_steps must be >= 1");
    if (cot_steps < 0) throw ConfigError("schedule: cot_steps must be >= 0");
    if (peak_lr <= 0.0) throw ConfigError("schedule: peak_lr must be positive");
    if (min_lr_ratio < 0.0 || min_lr_ratio > 1.0)
        throw ConfigError("schedule: min_lr_ratio must be in [0,1]");
    WsdSchedule s;
    s.total_steps = total_steps;
    s.warmup_steps = static_cast<int64_t>(std::llround(warmup_frac * static_cast<double>(cot_steps)));
    s.decay_steps = static_cast<int64_t>(std::llround(decay_frac * static_cast<double>(cot_steps)));
    s.peak_lr = peak_lr;
    s.min_lr_ratio = min_lr_ratio;
    if (s.warmup_steps + s.decay_steps > total_steps)
        throw ConfigError("schedule: warmup (" + std::to_string(s.warmup_steps) + ") + decay (" +
                          std::to_string(s.decay_steps) + ") exceed total steps (" +
                          std::to_string(total_steps) + ")");
    s.stable_steps = total_steps - s.warmup_steps - s.decay_steps;
    return s;
}

double lr_at(int64_t step, const WsdSchedule& s) {
    if (step < 0 || step > s.total_steps)
        throw UsageError("lr_at: step " + std::to_string(step) + " outside [0," +
                         std::to_string(s.total_steps) + "]");
    if (step <= s.warmup_steps) {
        if (s.warmup_steps == 0) return s.peak_lr;
        return s.peak_lr * static_cast<double>(step) / static_cast<double>(s.warmup_steps);
    }
    if (step <= s.warmup_steps + s.stable_steps) return s.peak_lr;
    const double frac = static_cast<double>(step - s.warmup_steps - s.stable_steps) /
                        static_cast<double>(s.decay_steps);
    const double lo = s.min_lr();
    return lo + (s.peak_lr - lo) * 0.5 * (1.0 + std::cos(3.14159265358979323846 * frac));
}

uint64_t cot_tokens(uint64_t param_count) {
    if (param_count == 0) throw UsageError("cot_tokens: param_count must be positive");
    return 20ull * param_count;
}

}  // namespace abbie
