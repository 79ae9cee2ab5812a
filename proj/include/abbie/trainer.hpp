#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "abbie/data.hpp"
#include "abbie/model.hpp"
#include "abbie/optim.hpp"

namespace abbie {

struct TrainRunConfig {
    ModelConfig model;

    uint64_t token_budget = 0;  // 0: compute-optimal budget, 20 * param count
    int64_t batch_size = 16;
    int64_t seq_len = 256;

    double peak_lr = 3e-4;
    double min_lr_ratio = 0.1;
    double warmup_frac = 0.25;  // of the compute-optimal step count
    double decay_frac = 0.20;
    AdamWHyper adam;
    double grad_clip = 1.0;  // global-norm clip; <= 0 disables

    int64_t eval_every = 500;       // steps; 0: only at the end
    int64_t checkpoint_every = 0;   // steps; 0: only at the end
    int64_t log_every = 10;

    std::vector<std::string> corpus_paths;
    std::string val_path;       // empty: hold out val_fraction of the windows
    double val_fraction = 0.05;

    uint64_t data_seed = 1;
    uint64_t depth_seed = 2;  // train-time stream for the Depth state
    uint64_t eval_seed = 7;

    std::string out_dir = "runs/out";

    void validate() const;
    int64_t tokens_per_step() const { return batch_size * seq_len; }
};

struct TrainResult {
    std::string checkpoint_path;
    uint64_t steps = 0;
    uint64_t tokens = 0;
    double final_train_loss = 0.0;
    double final_val_loss = 0.0;
    double final_val_ppl = 0.0;
};

// Runs the full loop: batch -> forward(train_iters) -> loss -> backward ->
// clip -> AdamW with lr_at(step). Appends metrics.csv/val.csv under out_dir,
// checkpoints periodically and at the end. A non-finite loss aborts after
// writing a diagnostic checkpoint. `resume_from` continues a run bitwise.
TrainResult train(const TrainRunConfig& run, const std::string& resume_from = "",
                  int64_t stop_after_steps = 0);

// exp(mean token NLL) over the validation windows at iteration count r.
double eval_perplexity(Model& model, const std::vector<int32_t>& val_tokens, int64_t seq_len,
                       int64_t r, uint64_t eval_seed, int64_t batch_size = 8);

// Mean NLL (nats/token); ppl = exp of this.
double eval_nll(Model& model, const std::vector<int32_t>& val_tokens, int64_t seq_len, int64_t r,
                uint64_t eval_seed, int64_t batch_size = 8);

// Splits a token reservoir at a window boundary: the last `fraction` of the
// windows become validation tokens.
void split_val_windows(const std::vector<int32_t>& tokens, int64_t seq_len, double fraction,
                       std::vector<int32_t>& train_out, std::vector<int32_t>& val_out);

}  // namespace abbie
