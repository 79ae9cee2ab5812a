// abbie: one binary for the whole workflow.
//
//   abbie train      --config cfg.ini [--out DIR] [--resume ckpt] [corpus...]
//   abbie eval       --checkpoint ckpt [--config cfg.ini] [--r N]
//   abbie sweep-iters --checkpoint ckpt --r 1,2,4,8 [--force-std-loop]
//   abbie probe      --checkpoint ckpt [--samples N] [--r-max M]
//   abbie flops      --variant abbie-d --r 2 --tokens 4e9 [--config cfg.ini]
//   abbie sample     --checkpoint ckpt --prompt TEXT [--max-new N] [--temperature T]
//
// Any --section.key=value argument overrides the config file. Positional
// arguments are corpus files, appended in order. The default out dir comes
// from ABBIE_OUT_DIR. Errors print one machine-parsable line on stderr:
//   abbie: error kind=<kind> msg="<message>"
// Exit codes: 0 ok, 2 config error (incl. unknown keys), 3 bad usage/override,
// 4 missing file/bad data, 5 malformed file, 6 numerics, 1 anything else.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "abbie/analysis.hpp"
#include "abbie/checkpoint.hpp"
#include "abbie/config.hpp"
#include "abbie/inference.hpp"
#include "abbie/trainer.hpp"

namespace {

using namespace abbie;

struct Args {
    std::string command;
    std::map<std::string, std::string> flags;
    std::vector<std::string> overrides;    // section.key=value
    std::vector<std::string> positionals;  // corpus files
    bool has(const std::string& k) const { return flags.count(k) > 0; }
    std::string get(const std::string& k, const std::string& dflt = "") const {
        auto it = flags.find(k);
        return it == flags.end() ? dflt : it->second;
    }
};

const std::vector<std::string> kValueFlags = {
    "config", "out",     "checkpoint", "resume",     "r",    "r-max",   "samples",
    "tokens", "variant", "prompt",     "max-new",    "temperature", "seed", "task"};
const std::vector<std::string> kBoolFlags = {"force-std-loop"};

Args parse_args(int argc, char** argv) {
    Args a;
    if (argc < 2) throw UsageError("no command given (train, eval, sweep-iters, probe, flops, sample)");
    a.command = argv[1];
    for (int i = 2; i < argc; ++i) {
        std::string arg = argv[i];
        if (arg.rfind("--", 0) != 0) {
            a.positionals.push_back(arg);
            continue;
        }
        arg = arg.substr(2);
        const size_t eq = arg.find('=');
        const std::string name = eq == std::string::npos ? arg : arg.substr(0, eq);
        bool is_bool = false, is_value = false;
        for (const auto& f : kBoolFlags) is_bool = is_bool || f == name;
        for (const auto& f : kValueFlags) is_value = is_value || f == name;
        if (is_bool) {
            a.flags[name] = "1";
        } else if (is_value) {
            if (eq != std::string::npos) {
                a.flags[name] = arg.substr(eq + 1);
            } else {
                if (i + 1 >= argc) throw UsageError("flag --" + name + " needs a value");
                a.flags[name] = argv[++i];
            }
        } else if (name.find('.') != std::string::npos) {
            if (eq == std::string::npos)
                throw UsageError("override '--" + arg + "' is not of the form section.key=value");
            a.overrides.push_back(arg);
        } else {
            throw UsageError("unknown flag '--" + name + "'");
        }
    }
    return a;
}

int64_t flag_i64(const Args& a, const std::string& name, int64_t dflt) {
    if (!a.has(name)) return dflt;
    try {
        const std::string v = a.get(name);
        if (v.find_first_of(".eE") != std::string::npos) return static_cast<int64_t>(std::stod(v));
        return std::stoll(v);
    } catch (const std::exception&) {
        throw UsageError("flag --" + name + ": cannot parse '" + a.get(name) + "'");
    }
}

std::vector<int64_t> parse_r_list(const std::string& v) {
    std::vector<int64_t> out;
    std::string cur;
    for (char c : v + ",") {
        if (c == ',') {
            if (!cur.empty()) {
                try {
                    out.push_back(std::stoll(cur));
                } catch (const std::exception&) {
                    throw UsageError("bad r list entry '" + cur + "'");
                }
                cur.clear();
            }
        } else {
            cur.push_back(c);
        }
    }
    if (out.empty()) throw UsageError("empty r list");
    return out;
}

ResolvedConfig load_resolved(const Args& a, bool config_required) {
    FileConfig raw;
    if (a.has("config")) {
        raw = parse_config_file(a.get("config"));
    } else if (config_required) {
        throw UsageError("this command needs --config");
    }
    for (const auto& ov : a.overrides) apply_override(raw, ov);
    ResolvedConfig rc = resolve_config(raw);
    for (const auto& p : a.positionals) rc.train.corpus_paths.push_back(p);
    return rc;
}

std::string out_dir(const Args& a) {
    if (a.has("out")) return a.get("out");
    const char* env = std::getenv("ABBIE_OUT_DIR");
    if (env && *env) return env;
    return "runs/default";
}

std::vector<int32_t> load_eval_tokens(const ResolvedConfig& rc) {
    ByteTokenizer tok;
    if (!rc.train.val_path.empty()) return load_corpus({rc.train.val_path}, tok);
    if (rc.train.corpus_paths.empty())
        throw IoError("no corpus configured: set [data] corpus/val_corpus or pass files");
    auto all = load_corpus(rc.train.corpus_paths, tok);
    std::vector<int32_t> train_part, val_part;
    split_val_windows(all, rc.train.seq_len, rc.train.val_fraction, train_part, val_part);
    return val_part;
}

int64_t eval_r(const Args& a, const ResolvedConfig& rc, const Model& model) {
    if (a.has("r")) return flag_i64(a, "r", 1);
    if (rc.eval.r > 0) return rc.eval.r;
    return model.config.train_iters;
}

int cmd_train(const Args& a) {
    ResolvedConfig rc = load_resolved(a, true);
    rc.train.out_dir = out_dir(a);
    const std::string echo = echo_config(rc);
    std::cout << echo << std::flush;
    std::cout << "seeds: init=" << rc.train.model.seed << " data=" << rc.train.data_seed
              << " depth-state=" << rc.train.depth_seed << "\n";
    std::filesystem::create_directories(rc.train.out_dir);
    std::ofstream(rc.train.out_dir + "/config.ini") << echo;
    const TrainResult res = train(rc.train, a.get("resume"));
    std::cout << "trained steps=" << res.steps << " tokens=" << res.tokens
              << " train_loss=" << res.final_train_loss << " val_loss=" << res.final_val_loss
              << " val_ppl=" << res.final_val_ppl << "\n";
    std::cout << "checkpoint: " << res.checkpoint_path << "\n";
    return 0;
}

int cmd_eval(const Args& a) {
    if (!a.has("checkpoint")) throw UsageError("eval needs --checkpoint");
    ResolvedConfig rc = load_resolved(a, false);
    Model model = model_from_checkpoint(load_checkpoint(a.get("checkpoint")));
    const auto val = load_eval_tokens(rc);
    const int64_t r = eval_r(a, rc, model);
    const double ppl = eval_perplexity(model, val, rc.train.seq_len, r, rc.eval.seed);
    std::cout << "r=" << r << " ppl=" << ppl << "\n";
    const std::string dir = out_dir(a);
    std::filesystem::create_directories(dir);
    std::vector<SweepRow> rows{{r, ppl}};
    write_sweep_csv(dir + "/eval.csv", rows);
    return 0;
}

int cmd_sweep(const Args& a) {
    if (!a.has("checkpoint")) throw UsageError("sweep-iters needs --checkpoint");
    if (!a.has("r")) throw UsageError("sweep-iters needs --r (comma separated, e.g. 1,2,4,8)");
    ResolvedConfig rc = load_resolved(a, false);
    Model model = model_from_checkpoint(load_checkpoint(a.get("checkpoint")));
    const auto val = load_eval_tokens(rc);
    const auto rows = iteration_sweep(model, val, rc.train.seq_len, parse_r_list(a.get("r")),
                                      rc.eval.seed, a.has("force-std-loop"));
    const std::string dir = out_dir(a);
    std::filesystem::create_directories(dir);
    write_sweep_csv(dir + "/sweep.csv", rows);
    for (const auto& row : rows) std::cout << "r=" << row.r << " ppl=" << row.ppl << "\n";
    return 0;
}

int cmd_probe(const Args& a) {
    if (!a.has("checkpoint")) throw UsageError("probe needs --checkpoint");
    ResolvedConfig rc = load_resolved(a, false);
    Model model = model_from_checkpoint(load_checkpoint(a.get("checkpoint")));
    const int64_t n_samples = flag_i64(a, "samples", 16);
    const int64_t r_max = flag_i64(a, "r-max", 16);
    const auto val = load_eval_tokens(rc);
    const int64_t win = rc.train.seq_len + 1;
    const int64_t available = static_cast<int64_t>(val.size()) / win;
    if (available < 1) throw DataError("validation corpus holds no full window");
    Prng rng(rc.eval.seed);
    std::vector<Ids> samples;
    for (int64_t i = 0; i < n_samples; ++i) {
        const int64_t w = static_cast<int64_t>(rng.uniform_int(static_cast<uint64_t>(available)));
        Ids ids({1, rc.train.seq_len},
                std::vector<int32_t>(val.begin() + w * win, val.begin() + w * win + rc.train.seq_len));
        samples.push_back(std::move(ids));
    }
    const auto rows = fixed_point_probe(model, samples, r_max, rc.eval.seed);
    const std::string dir = out_dir(a);
    std::filesystem::create_directories(dir);
    write_probe_csv(dir + "/probe.csv", rows);
    std::cout << "probe: " << samples.size() << " samples x " << r_max << " iterations -> " << dir
              << "/probe.csv\n";
    return 0;
}

int cmd_flops(const Args& a) {
    ResolvedConfig rc = load_resolved(a, false);
    ModelConfig cfg = rc.train.model;
    if (a.has("variant")) cfg.variant = variant_from_name(a.get("variant"));
    if (cfg.variant == Variant::kStd && !a.has("r")) cfg.train_iters = 1;
    const int64_t r = flag_i64(a, "r", cfg.variant == Variant::kStd ? 1 : cfg.train_iters);
    const uint64_t tokens = static_cast<uint64_t>(flag_i64(a, "tokens", 0));
    const FlopsReport rep = flops_estimate(cfg, r, tokens);
    std::cout << "variant=" << variant_name(rep.variant) << " r=" << rep.r << " tokens=" << rep.tokens
              << " n_eff=" << rep.n_eff << " fwd_flops=" << rep.fwd_flops
              << " train_flops=" << rep.train_flops << " efficiency=" << rep.efficiency << "\n";
    const std::string dir = out_dir(a);
    std::filesystem::create_directories(dir);
    write_flops_csv(dir + "/flops.csv", {rep});
    return 0;
}

int cmd_sample(const Args& a) {
    if (!a.has("checkpoint")) throw UsageError("sample needs --checkpoint");
    if (!a.has("prompt")) throw UsageError("sample needs --prompt");
    ResolvedConfig rc = load_resolved(a, false);
    Model model = model_from_checkpoint(load_checkpoint(a.get("checkpoint")));
    const int64_t r = eval_r(a, rc, model);
    const int64_t max_new = flag_i64(a, "max-new", 128);
    const double temperature = a.has("temperature") ? std::stod(a.get("temperature")) : 0.0;
    const uint64_t seed = static_cast<uint64_t>(flag_i64(a, "seed", 1));
    const std::string text =
        sample_text(model, a.get("prompt"), r, max_new, temperature, seed, rc.eval.seed);
    std::cout << text << "\n";
    return 0;
}

int dispatch(const Args& a) {
    if (a.command == "train") return cmd_train(a);
    if (a.command == "eval") return cmd_eval(a);
    if (a.command == "sweep-iters") return cmd_sweep(a);
    if (a.command == "probe") return cmd_probe(a);
    if (a.command == "flops") return cmd_flops(a);
    if (a.command == "sample") return cmd_sample(a);
    throw UsageError("unknown command '" + a.command + "'");
}

int exit_code(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::kConfig: return 2;
        case ErrorKind::kUsage: return 3;
        case ErrorKind::kData: return 4;
        case ErrorKind::kIo: return 4;
        case ErrorKind::kFormat: return 5;
        case ErrorKind::kNumerics: return 6;
        case ErrorKind::kShape: return 1;
    }
    return 1;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return dispatch(parse_args(argc, argv));
    } catch (const Error& e) {
        std::cerr << "abbie: error kind=" << error_kind_name(e.kind()) << " msg=\"" << e.what()
                  << "\"\n";
        return exit_code(e.kind());
    } catch (const std::exception& e) {
        std::cerr << "abbie: error kind=internal msg=\"" << e.what() << "\"\n";
        return 1;
    }
}
