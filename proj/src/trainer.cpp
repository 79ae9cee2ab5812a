#include "abbie/trainer.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "abbie/checkpoint.hpp"
#include "abbie/config.hpp"

namespace abbie {

namespace fs = std::filesystem;

void TrainRunConfig::validate() const {
    model.validate();
    auto fail = [](const std::string& m) { throw ConfigError("train config: " + m); };
    if (batch_size < 1) fail("batch_size must be >= 1");
    if (seq_len < 1) fail("seq_len must be >= 1");
    if (seq_len > model.max_seq_len)
        fail("seq_len " + std::to_string(seq_len) + " exceeds model max_seq_len " +
             std::to_string(model.max_seq_len));
    if (peak_lr <= 0.0) fail("peak_lr must be positive");
    if (min_lr_ratio < 0.0 || min_lr_ratio > 1.0) fail("min_lr_ratio must be in [0,1]");
    if (warmup_frac < 0.0 || decay_frac < 0.0 || warmup_frac + decay_frac > 1.0)
        fail("warmup_frac/decay_frac must be non-negative and sum to at most 1");
    if (eval_every < 0 || checkpoint_every < 0 || log_every < 1)
        fail("eval_every/checkpoint_every must be >= 0, log_every >= 1");
    if (corpus_paths.empty()) fail("no corpus files configured");
    if (val_path.empty() && (val_fraction <= 0.0 || val_fraction >= 1.0))
        fail("val_fraction must be in (0,1) when no separate validation corpus is given");
}

void split_val_windows(const std::vector<int32_t>& tokens, int64_t seq_len, double fraction,
                       std::vector<int32_t>& train_out, std::vector<int32_t>& val_out) {
    const int64_t win = seq_len + 1;
    const int64_t n_win = static_cast<int64_t>(tokens.size()) / win;
    if (n_win < 2)
        throw DataError("corpus too small to split: need at least 2 windows of " +
                        std::to_string(win) + " tokens, got " + std::to_string(tokens.size()) +
                        " tokens");
    int64_t n_val = static_cast<int64_t>(static_cast<double>(n_win) * fraction);
    n_val = std::max<int64_t>(1, std::min(n_val, n_win - 1));
    const int64_t n_train = n_win - n_val;
    train_out.assign(tokens.begin(), tokens.begin() + n_train * win);
    val_out.assign(tokens.begin() + n_train * win, tokens.begin() + n_win * win);
}

double eval_nll(Model& model, const std::vector<int32_t>& val_tokens, int64_t seq_len, int64_t r,
                uint64_t eval_seed, int64_t batch_size) {
    const int64_t win = seq_len + 1;
    const int64_t n_win = static_cast<int64_t>(val_tokens.size()) / win;
    if (n_win < 1)
        throw DataError("validation corpus smaller than one window of " + std::to_string(win) +
                        " tokens");
    double total = 0.0;
    int64_t total_tokens = 0;
    for (int64_t w0 = 0; w0 < n_win; w0 += batch_size) {
        const int64_t nb = std::min(batch_size, n_win - w0);
        Ids inputs, targets;
        inputs.shape = {nb, seq_len};
        targets.shape = {nb, seq_len};
        inputs.v.resize(static_cast<size_t>(nb * seq_len));
        targets.v.resize(static_cast<size_t>(nb * seq_len));
        for (int64_t bi = 0; bi < nb; ++bi) {
            const int32_t* base = val_tokens.data() + (w0 + bi) * win;
            for (int64_t i = 0; i < seq_len; ++i) {
                inputs.v[static_cast<size_t>(bi * seq_len + i)] = base[i];
                targets.v[static_cast<size_t>(bi * seq_len + i)] = base[i + 1];
            }
        }
        DepthNoise noise;
        noise.eval_seed = eval_seed;
        auto logits = model.forward(inputs, r, nullptr, nullptr, noise);
        const double nll = static_cast<double>(cross_entropy_logits(logits, targets).item());
        total += nll * static_cast<double>(nb * seq_len);
        total_tokens += nb * seq_len;
    }
    return total / static_cast<double>(total_tokens);
}

double eval_perplexity(Model& model, const std::vector<int32_t>& val_tokens, int64_t seq_len,
                       int64_t r, uint64_t eval_seed, int64_t batch_size) {
    return std::exp(eval_nll(model, val_tokens, seq_len, r, eval_seed, batch_size));
}

namespace {

void append_csv(const std::string& path, const std::string& header, const std::string& row) {
    const bool fresh = !fs::exists(path);
    std::ofstream f(path, std::ios::app);
    if (!f) throw IoError("cannot append to '" + path + "'");
    if (fresh) f << header << "\n";
    f << row << "\n";
}

std::string stream_state(const BatchStream& s) {
    return std::to_string(s.epoch()) + " " + std::to_string(s.cursor());
}

}  // namespace

TrainResult train(const TrainRunConfig& run, const std::string& resume_from,
                  int64_t stop_after_steps) {
    run.validate();
    fs::create_directories(run.out_dir);

    ByteTokenizer tok;
    std::vector<int32_t> train_tokens, val_tokens;
    if (!run.val_path.empty()) {
        train_tokens = load_corpus(run.corpus_paths, tok);
        val_tokens = load_corpus({run.val_path}, tok);
    } else {
        auto all = load_corpus(run.corpus_paths, tok);
        split_val_windows(all, run.seq_len, run.val_fraction, train_tokens, val_tokens);
    }
    BatchStream stream(std::move(train_tokens), run.seq_len, run.batch_size, run.data_seed);

    const ParamCounts counts = count_params(run.model);
    const uint64_t budget =
        run.token_budget ? run.token_budget : cot_tokens(static_cast<uint64_t>(counts.total));
    const int64_t total_steps = static_cast<int64_t>(budget / static_cast<uint64_t>(run.tokens_per_step()));
    if (total_steps < 1)
        throw ConfigError("token budget " + std::to_string(budget) + " is below one step of " +
                          std::to_string(run.tokens_per_step()) + " tokens");
    const WsdSchedule sched = WsdSchedule::from_budget(total_steps, total_steps, run.peak_lr,
                                                       run.min_lr_ratio, run.warmup_frac,
                                                       run.decay_frac);

    Model model;
    AdamWState opt;
    Prng depth_stream(run.depth_seed);
    int64_t start_step = 0;
    if (resume_from.empty()) {
        model = Model::init(run.model);
    } else {
        const Checkpoint ck = load_checkpoint(resume_from);
        model = model_from_checkpoint(ck);
        if (model_config_ini(model.config) != model_config_ini(run.model))
            throw ConfigError("resume: checkpoint model config differs from the configured model");
        opt = optimizer_from_checkpoint(ck, model);
        depth_stream.deserialize(ck.depth_stream);
        std::istringstream ds(ck.data_stream);
        uint64_t epoch = 0;
        int64_t cursor = 0;
        ds >> epoch >> cursor;
        if (ds.fail()) throw FormatError("checkpoint data stream state malformed");
        stream.restore(epoch, cursor);
        start_step = static_cast<int64_t>(ck.step);
        if (start_step >= total_steps)
            throw UsageError("resume: checkpoint is already at step " + std::to_string(start_step) +
                             " of " + std::to_string(total_steps));
    }

    std::vector<Tensor*> params;
    model.params.for_each([&](const std::string&, Tensor& t) { params.push_back(&t); });

    const std::string metrics_path = run.out_dir + "/metrics.csv";
    const std::string val_path = run.out_dir + "/val.csv";
    const auto t0 = std::chrono::steady_clock::now();
    auto wallclock = [&] {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    };

    auto run_eval = [&](int64_t step) {
        const double nll = eval_nll(model, val_tokens, run.seq_len, model.config.train_iters,
                                    run.eval_seed, std::min<int64_t>(run.batch_size, 8));
        std::ostringstream row;
        row.precision(10);
        row << step << "," << step * run.tokens_per_step() << "," << nll << "," << std::exp(nll);
        append_csv(val_path, "step,tokens,val_loss,val_ppl", row.str());
        return nll;
    };
    auto save_state = [&](int64_t step, const std::string& name) {
        Checkpoint ck = make_checkpoint(model, &opt, static_cast<uint64_t>(step),
                                        static_cast<uint64_t>(step * run.tokens_per_step()),
                                        stream_state(stream), depth_stream.serialize());
        const std::string path = run.out_dir + "/" + name;
        save_checkpoint(path, ck);
        return path;
    };

    const int64_t end_step =
        stop_after_steps > 0 ? std::min(total_steps, start_step + stop_after_steps) : total_steps;

    double last_loss = 0.0;
    for (int64_t step = start_step + 1; step <= end_step; ++step) {
        const Batch batch = stream.next();
        DiffTape<float> tape;
        DepthNoise noise;
        noise.stream = &depth_stream;
        auto logits = model.forward(batch.inputs, model.config.train_iters, &tape, nullptr, noise);
        auto loss = cross_entropy_logits(logits, batch.targets);
        last_loss = static_cast<double>(loss.item());
        if (!std::isfinite(last_loss)) {
            const std::string diag = save_state(step - 1, "diagnostic.abbie");
            throw NumericsError("step " + std::to_string(step) +
                                ": non-finite training loss; diagnostic checkpoint at " + diag);
        }
        tape.backward(loss);

        std::vector<Tensor> grads;
        grads.reserve(params.size());
        for (Tensor* p : params) grads.push_back(tape.grad(*p));
        if (run.grad_clip > 0.0) {
            double sq = 0.0;
            for (const Tensor& g : grads)
                for (const float v : g.values()) sq += static_cast<double>(v) * static_cast<double>(v);
            const double norm = std::sqrt(sq);
            if (norm > run.grad_clip) {
                const float f = static_cast<float>(run.grad_clip / norm);
                for (Tensor& g : grads)
                    for (float& v : g.values()) v *= f;
            }
        }
        adamw_step(params, grads, opt, lr_at(step, sched), run.adam);

        if (step % run.log_every == 0 || step == end_step) {
            std::ostringstream row;
            row.precision(10);
            row << step << "," << step * run.tokens_per_step() << "," << last_loss << ","
                << lr_at(step, sched) << "," << wallclock();
            append_csv(metrics_path, "step,tokens,loss,lr,wallclock", row.str());
        }
        if (run.eval_every > 0 && step % run.eval_every == 0 && step != end_step) run_eval(step);
        if (run.checkpoint_every > 0 && step % run.checkpoint_every == 0 && step != end_step)
            save_state(step, "ckpt_step" + std::to_string(step) + ".abbie");
    }

    TrainResult res;
    res.steps = static_cast<uint64_t>(end_step);
    res.tokens = static_cast<uint64_t>(end_step * run.tokens_per_step());
    res.final_train_loss = last_loss;
    res.final_val_loss = run_eval(end_step);
    res.final_val_ppl = std::exp(res.final_val_loss);
    res.checkpoint_path = save_state(end_step, "ckpt_final.abbie");
    return res;
}

}  // namespace abbie
