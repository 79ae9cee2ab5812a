#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "abbie/model.hpp"

namespace abbie {

// ---------------------------------------------------------------------------
// FLOPs accounting. Effective parameters count the body (and the Depth
// projection) once per iteration; embedding, head and tail run once:
//   n_eff = P_embed + P_head + r*P_body + P_tail (+ r*P_depth_proj)
// forward = 2*n_eff*D, train = 6*n_eff*D, efficiency = train / train(Std,r=1).
// ---------------------------------------------------------------------------
struct FlopsReport {
    Variant variant = Variant::kStd;
    int64_t r = 1;
    uint64_t tokens = 0;
    int64_t n_eff = 0;
    double fwd_flops = 0.0;
    double train_flops = 0.0;
    double efficiency = 1.0;
};

FlopsReport flops_from_counts(const ParamCounts& counts, Variant variant, int64_t r,
                              uint64_t tokens);
FlopsReport flops_estimate(const ModelConfig& cfg, int64_t r, uint64_t tokens);
void write_flops_csv(const std::string& path, const std::vector<FlopsReport>& reports);

// ---------------------------------------------------------------------------
// Fixed-point probe: iterate the body r_max times on each sample and record
// the inter-iteration distances (absolute and relative, per the trace).
// ---------------------------------------------------------------------------
struct ProbeRow {
    int64_t sample_id = 0;
    int64_t k = 0;  // 0-based iteration index
    double abs_dist = 0.0;
    double rel_dist = 0.0;
};

std::vector<ProbeRow> fixed_point_probe(Model& model, const std::vector<Ids>& samples,
                                        int64_t r_max, uint64_t eval_seed);
void write_probe_csv(const std::string& path, const std::vector<ProbeRow>& rows);

// ---------------------------------------------------------------------------
// Iteration sweep: perplexity at each r (duplicates dropped, order kept).
// A Std checkpoint only accepts r = 1 unless force_std_loop explicitly loops
// its body like the chained variant.
// ---------------------------------------------------------------------------
struct SweepRow {
    int64_t r = 0;
    double ppl = 0.0;
};

std::vector<SweepRow> iteration_sweep(Model& model, const std::vector<int32_t>& val_tokens,
                                      int64_t seq_len, const std::vector<int64_t>& r_list,
                                      uint64_t eval_seed, bool force_std_loop = false);
void write_sweep_csv(const std::string& path, const std::vector<SweepRow>& rows);

// ---------------------------------------------------------------------------
// Zero-shot multiple choice. Each choice is scored by the total
// log-likelihood of its tokens given the context (primary, drives argmax)
// plus a per-token normalized score. Ties pick the lowest choice index.
// ---------------------------------------------------------------------------
struct McItem {
    std::string context;
    std::vector<std::string> choices;
    int64_t answer = 0;
};

struct McTask {
    std::vector<McItem> items;
};

McTask load_mc_task(const std::string& path);  // one JSON record per line
void save_mc_task(const std::string& path, const McTask& task);

struct McChoiceScore {
    int64_t item_id = 0;
    int64_t choice_id = 0;
    double logp_total = 0.0;
    double logp_per_token = 0.0;
    bool picked = false;
    bool correct = false;
};

struct McResult {
    double accuracy = 0.0;
    int64_t scored_items = 0;
    int64_t skipped_items = 0;
    std::vector<McChoiceScore> rows;
};

McResult mc_eval(Model& model, const McTask& task, int64_t r, uint64_t eval_seed);
void write_mc_csv(const std::string& path, const McResult& result);

// Prediction rule shared with tests: index of the maximal score, first wins.
int64_t mc_argmax(const std::vector<double>& scores);

}  // namespace abbie
