#include "abbie/analysis.hpp"

#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

#include <json.hpp>

#include "abbie/data.hpp"
#include "abbie/trainer.hpp"

namespace abbie {

namespace {

std::ofstream open_out(const std::string& path) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw IoError("cannot write '" + path + "'");
    return f;
}

}  // namespace

// ---------------------------------------------------------------------------
// FLOPs
// ---------------------------------------------------------------------------

FlopsReport flops_from_counts(const ParamCounts& counts, Variant variant, int64_t r,
                              uint64_t tokens) {
    if (r < 1) throw UsageError("flops: r must be >= 1");
    if (variant == Variant::kStd && r != 1)
        throw UsageError("flops: variant std is defined at r = 1 only");
    FlopsReport rep;
    rep.variant = variant;
    rep.r = r;
    rep.tokens = tokens;
    rep.n_eff = counts.embedding + counts.head + r * counts.body + counts.tail +
                r * counts.depth_proj;
    const int64_t n_eff_std = counts.embedding + counts.head + counts.body + counts.tail;
    rep.fwd_flops = 2.0 * static_cast<double>(rep.n_eff) * static_cast<double>(tokens);
    rep.train_flops = 6.0 * static_cast<double>(rep.n_eff) * static_cast<double>(tokens);
    rep.efficiency = static_cast<double>(rep.n_eff) / static_cast<double>(n_eff_std);
    return rep;
}

FlopsReport flops_estimate(const ModelConfig& cfg, int64_t r, uint64_t tokens) {
    return flops_from_counts(count_params(cfg), cfg.variant, r, tokens);
}

void write_flops_csv(const std::string& path, const std::vector<FlopsReport>& reports) {
    auto f = open_out(path);
    f << "variant,r,tokens,n_eff,fwd_flops,train_flops,efficiency\n";
    f.precision(12);
    for (const auto& r : reports)
        f << variant_name(r.variant) << "," << r.r << "," << r.tokens << "," << r.n_eff << ","
          << r.fwd_flops << "," << r.train_flops << "," << r.efficiency << "\n";
}

// ---------------------------------------------------------------------------
// fixed-point probe
// ---------------------------------------------------------------------------

std::vector<ProbeRow> fixed_point_probe(Model& model, const std::vector<Ids>& samples,
                                        int64_t r_max, uint64_t eval_seed) {
    if (r_max < 2) throw UsageError("probe: r_max must be >= 2");
    std::vector<ProbeRow> rows;
    for (size_t si = 0; si < samples.size(); ++si) {
        IterationTrace trace;
        DepthNoise noise;
        noise.eval_seed = eval_seed;
        auto h0 = model.head_forward(samples[si]);
        model.body_iterate(h0, r_max, nullptr, &trace, noise);
        for (int64_t k = 0; k < r_max; ++k) {
            ProbeRow row;
            row.sample_id = static_cast<int64_t>(si);
            row.k = k;
            row.abs_dist = trace.abs_dist[static_cast<size_t>(k)];
            row.rel_dist = trace.rel_dist[static_cast<size_t>(k)];
            rows.push_back(row);
        }
    }
    return rows;
}

void write_probe_csv(const std::string& path, const std::vector<ProbeRow>& rows) {
    auto f = open_out(path);
    f << "sample_id,k,abs_dist,rel_dist\n";
    f.precision(12);
    for (const auto& r : rows)
        f << r.sample_id << "," << r.k << "," << r.abs_dist << "," << r.rel_dist << "\n";
}

// ---------------------------------------------------------------------------
// iteration sweep
// ---------------------------------------------------------------------------

std::vector<SweepRow> iteration_sweep(Model& model, const std::vector<int32_t>& val_tokens,
                                      int64_t seq_len, const std::vector<int64_t>& r_list,
                                      uint64_t eval_seed, bool force_std_loop) {
    std::vector<int64_t> rs;
    for (int64_t r : r_list) {
        if (r < 1) throw UsageError("sweep: r must be >= 1, got " + std::to_string(r));
        bool seen = false;
        for (int64_t prev : rs) seen = seen || prev == r;
        if (!seen) rs.push_back(r);
    }
    if (rs.empty()) throw UsageError("sweep: empty r list");

    const Variant original = model.config.variant;
    if (original == Variant::kStd) {
        bool non_trivial = false;
        for (int64_t r : rs) non_trivial = non_trivial || r != 1;
        if (non_trivial && !force_std_loop)
            throw UsageError("variant std is non-iterative; rerun with force_std_loop to loop its "
                             "body anyway");
        // Forced looping applies the body chain repeatedly, like the chained
        // variant but on Std weights.
        if (non_trivial) model.config.variant = Variant::kAbbieC;
    }

    std::vector<SweepRow> rows;
    for (int64_t r : rs) {
        SweepRow row;
        row.r = r;
        row.ppl = eval_perplexity(model, val_tokens, seq_len, r, eval_seed);
        rows.push_back(row);
    }
    model.config.variant = original;
    return rows;
}

void write_sweep_csv(const std::string& path, const std::vector<SweepRow>& rows) {
    auto f = open_out(path);
    f << "r,ppl\n";
    f.precision(12);
    for (const auto& r : rows) f << r.r << "," << r.ppl << "\n";
}

// ---------------------------------------------------------------------------
// multiple choice
// ---------------------------------------------------------------------------

McTask load_mc_task(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open task file '" + path + "'");
    McTask task;
    std::string line;
    int lineno = 0;
    while (std::getline(f, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw FormatError(path + ":" + std::to_string(lineno) + ": bad record: " + e.what());
        }
        McItem item;
        try {
            item.context = j.at("context").get<std::string>();
            item.choices = j.at("choices").get<std::vector<std::string>>();
            item.answer = j.at("answer").get<int64_t>();
        } catch (const nlohmann::json::exception& e) {
            throw FormatError(path + ":" + std::to_string(lineno) + ": missing field: " + e.what());
        }
        if (item.choices.size() < 2)
            throw FormatError(path + ":" + std::to_string(lineno) + ": need at least 2 choices");
        if (item.answer < 0 || item.answer >= static_cast<int64_t>(item.choices.size()))
            throw FormatError(path + ":" + std::to_string(lineno) + ": answer index out of range");
        task.items.push_back(std::move(item));
    }
    return task;
}

void save_mc_task(const std::string& path, const McTask& task) {
    auto f = open_out(path);
    for (const auto& item : task.items) {
        nlohmann::json j;
        j["context"] = item.context;
        j["choices"] = item.choices;
        j["answer"] = item.answer;
        f << j.dump() << "\n";
    }
}

int64_t mc_argmax(const std::vector<double>& scores) {
    int64_t best = 0;
    for (size_t i = 1; i < scores.size(); ++i)
        if (scores[i] > scores[static_cast<size_t>(best)]) best = static_cast<int64_t>(i);
    return best;
}

McResult mc_eval(Model& model, const McTask& task, int64_t r, uint64_t eval_seed) {
    ByteTokenizer tok;
    McResult result;
    int64_t correct = 0;
    for (size_t ii = 0; ii < task.items.size(); ++ii) {
        const McItem& item = task.items[ii];
        const auto ctx_ids = tok.encode(item.context);
        bool skip = ctx_ids.empty();
        if (skip)
            std::cerr << "mc_eval: item " << ii << " skipped (empty context)\n";
        std::vector<std::vector<int32_t>> choice_ids;
        for (const auto& c : item.choices) {
            choice_ids.push_back(tok.encode(c));
            if (!skip && choice_ids.back().empty()) {
                std::cerr << "mc_eval: item " << ii << " skipped (empty choice text)\n";
                skip = true;
            }
            if (!skip &&
                static_cast<int64_t>(ctx_ids.size() + choice_ids.back().size()) > model.config.max_seq_len) {
                std::cerr << "mc_eval: item " << ii << " skipped (longer than max_seq_len)\n";
                skip = true;
            }
        }
        if (skip) {
            result.skipped_items += 1;
            continue;
        }

        std::vector<double> totals(item.choices.size());
        std::vector<double> per_token(item.choices.size());
        for (size_t ci = 0; ci < item.choices.size(); ++ci) {
            std::vector<int32_t> seq = ctx_ids;
            seq.insert(seq.end(), choice_ids[ci].begin(), choice_ids[ci].end());
            Ids ids({1, static_cast<int64_t>(seq.size())}, seq);
            DepthNoise noise;
            noise.eval_seed = eval_seed;
            const Tensor logits = model.forward(ids, r, nullptr, nullptr, noise);
            const int64_t v = model.config.vocab_size;
            const float* ld = logits.data();
            double total = 0.0;
            for (size_t u = 0; u < choice_ids[ci].size(); ++u) {
                // logits at position ctx+u-1 predict choice token u
                const int64_t pos = static_cast<int64_t>(ctx_ids.size() + u) - 1;
                const float* row = ld + pos * v;
                double mx = row[0];
                for (int64_t j = 1; j < v; ++j) mx = std::max(mx, static_cast<double>(row[j]));
                double sum = 0.0;
                for (int64_t j = 0; j < v; ++j) sum += std::exp(static_cast<double>(row[j]) - mx);
                total += static_cast<double>(row[choice_ids[ci][u]]) - mx - std::log(sum);
            }
            totals[ci] = total;
            per_token[ci] = total / static_cast<double>(choice_ids[ci].size());
        }

        const int64_t picked = mc_argmax(totals);
        const bool is_correct = picked == item.answer;
        correct += is_correct ? 1 : 0;
        result.scored_items += 1;
        for (size_t ci = 0; ci < item.choices.size(); ++ci) {
            McChoiceScore row;
            row.item_id = static_cast<int64_t>(ii);
            row.choice_id = static_cast<int64_t>(ci);
            row.logp_total = totals[ci];
            row.logp_per_token = per_token[ci];
            row.picked = static_cast<int64_t>(ci) == picked;
            row.correct = is_correct;
            result.rows.push_back(row);
        }
    }
    if (result.scored_items > 0)
        result.accuracy = static_cast<double>(correct) / static_cast<double>(result.scored_items);
    return result;
}

void write_mc_csv(const std::string& path, const McResult& result) {
    auto f = open_out(path);
    f << "item_id,choice_id,logp_total,logp_per_token,picked,correct\n";
    f.precision(12);
    for (const auto& r : result.rows)
        f << r.item_id << "," << r.choice_id << "," << r.logp_total << "," << r.logp_per_token << ","
          << (r.picked ? 1 : 0) << "," << (r.correct ? 1 : 0) << "\n";
}

}  // namespace abbie
