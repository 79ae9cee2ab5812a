#include "abbie/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace abbie {

namespace {

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

int64_t parse_i64(const std::string& key, const std::string& v) {
    try {
        size_t used = 0;
        // Accept scientific notation for counts (e.g. token_budget = 4e7).
        if (v.find_first_of(".eE") != std::string::npos) {
            const double d = std::stod(v, &used);
            if (used != v.size() || d < 0 || d > 9.2e18 || std::floor(d) != d)
                throw std::invalid_argument(v);
            return static_cast<int64_t>(d);
        }
        const int64_t x = std::stoll(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        throw ConfigError("key '" + key + "': cannot parse integer from '" + v + "'");
    }
}

uint64_t parse_u64(const std::string& key, const std::string& v) {
    const int64_t x = parse_i64(key, v);
    if (x < 0) throw ConfigError("key '" + key + "': must be non-negative, got '" + v + "'");
    return static_cast<uint64_t>(x);
}

double parse_f64(const std::string& key, const std::string& v) {
    try {
        size_t used = 0;
        const double d = std::stod(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw ConfigError("key '" + key + "': cannot parse number from '" + v + "'");
    }
}

std::vector<std::string> split_list(const std::string& v) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : v) {
        if (c == ',') {
            if (!trim(cur).empty()) out.push_back(trim(cur));
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    if (!trim(cur).empty()) out.push_back(trim(cur));
    return out;
}

std::string fmt_f64(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

}  // namespace

FileConfig parse_config_text(const std::string& text, const std::string& origin) {
    FileConfig cfg;
    std::istringstream is(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const size_t hash = line.find_first_of("#;");
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError(origin + ":" + std::to_string(lineno) + ": malformed section header");
            section = trim(line.substr(1, line.size() - 2));
            if (section.empty())
                throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty section name");
            cfg.sections[section];
            continue;
        }
        const size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected key = value");
        if (section.empty())
            throw ConfigError(origin + ":" + std::to_string(lineno) + ": key outside any [section]");
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        if (key.empty()) throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty key");
        cfg.sections[section][key] = val;
    }
    return cfg;
}

FileConfig parse_config_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open config file '" + path + "'");
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_config_text(ss.str(), path);
}

void apply_override(FileConfig& cfg, const std::string& dotted) {
    const size_t eq = dotted.find('=');
    if (eq == std::string::npos)
        throw UsageError("override '" + dotted + "' is not of the form section.key=value");
    const std::string path = trim(dotted.substr(0, eq));
    const std::string val = trim(dotted.substr(eq + 1));
    const size_t dot = path.find('.');
    if (dot == std::string::npos || dot == 0 || dot + 1 == path.size())
        throw UsageError("override '" + dotted + "' is not of the form section.key=value");
    cfg.sections[path.substr(0, dot)][path.substr(dot + 1)] = val;
}

namespace {

// Key dispatch shared by resolve_config and parse_model_config_ini.
bool apply_model_key(ModelConfig& m, const std::string& key, const std::string& v) {
    const std::string full = "model." + key;
    if (key == "variant") m.variant = variant_from_name(v);
    else if (key == "n_head_blocks") m.n_head_blocks = parse_i64(full, v);
    else if (key == "n_body_blocks") m.n_body_blocks = parse_i64(full, v);
    else if (key == "n_tail_blocks") m.n_tail_blocks = parse_i64(full, v);
    else if (key == "d_model") m.d_model = parse_i64(full, v);
    else if (key == "ffn_size") m.ffn_size = parse_i64(full, v);
    else if (key == "n_heads") m.n_heads = parse_i64(full, v);
    else if (key == "n_kv_heads") m.n_kv_heads = parse_i64(full, v);
    else if (key == "rope_theta") m.rope_theta = parse_f64(full, v);
    else if (key == "vocab_size") m.vocab_size = parse_i64(full, v);
    else if (key == "max_seq_len") m.max_seq_len = parse_i64(full, v);
    else if (key == "train_iters") m.train_iters = parse_i64(full, v);
    else if (key == "init_std") m.init_std = parse_f64(full, v);
    else if (key == "rms_eps") m.rms_eps = parse_f64(full, v);
    else if (key == "seed") m.seed = parse_u64(full, v);
    else return false;
    return true;
}

}  // namespace

ResolvedConfig resolve_config(const FileConfig& raw) {
    ResolvedConfig rc;
    for (const auto& [section, kv] : raw.sections) {
        if (section == "model") {
            for (const auto& [k, v] : kv)
                if (!apply_model_key(rc.train.model, k, v))
                    throw ConfigError("unknown key 'model." + k + "'");
        } else if (section == "train") {
            for (const auto& [k, v] : kv) {
                const std::string full = "train." + k;
                if (k == "token_budget") rc.train.token_budget = parse_u64(full, v);
                else if (k == "batch_size") rc.train.batch_size = parse_i64(full, v);
                else if (k == "seq_len") rc.train.seq_len = parse_i64(full, v);
                else if (k == "peak_lr") rc.train.peak_lr = parse_f64(full, v);
                else if (k == "min_lr_ratio") rc.train.min_lr_ratio = parse_f64(full, v);
                else if (k == "warmup_frac") rc.train.warmup_frac = parse_f64(full, v);
                else if (k == "decay_frac") rc.train.decay_frac = parse_f64(full, v);
                else if (k == "adam_beta1") rc.train.adam.beta1 = parse_f64(full, v);
                else if (k == "adam_beta2") rc.train.adam.beta2 = parse_f64(full, v);
                else if (k == "adam_eps") rc.train.adam.eps = parse_f64(full, v);
                else if (k == "weight_decay") rc.train.adam.weight_decay = parse_f64(full, v);
                else if (k == "grad_clip") rc.train.grad_clip = parse_f64(full, v);
                else if (k == "eval_every") rc.train.eval_every = parse_i64(full, v);
                else if (k == "checkpoint_every") rc.train.checkpoint_every = parse_i64(full, v);
                else if (k == "log_every") rc.train.log_every = parse_i64(full, v);
                else if (k == "depth_seed") rc.train.depth_seed = parse_u64(full, v);
                else throw ConfigError("unknown key 'train." + k + "'");
            }
        } else if (section == "data") {
            for (const auto& [k, v] : kv) {
                const std::string full = "data." + k;
                if (k == "corpus") rc.train.corpus_paths = split_list(v);
                else if (k == "val_corpus") rc.train.val_path = v;
                else if (k == "val_fraction") rc.train.val_fraction = parse_f64(full, v);
                else if (k == "seed") rc.train.data_seed = parse_u64(full, v);
                else throw ConfigError("unknown key 'data." + k + "'");
            }
        } else if (section == "eval") {
            for (const auto& [k, v] : kv) {
                const std::string full = "eval." + k;
                if (k == "r") rc.eval.r = parse_i64(full, v);
                else if (k == "seed") rc.eval.seed = parse_u64(full, v);
                else throw ConfigError("unknown key 'eval." + k + "'");
            }
        } else {
            throw ConfigError("unknown section '[" + section + "]'");
        }
    }
    rc.train.eval_seed = rc.eval.seed;
    rc.train.model.validate();
    return rc;
}

std::string model_config_ini(const ModelConfig& m) {
    std::ostringstream os;
    os << "[model]\n";
    os << "variant = " << variant_name(m.variant) << "\n";
    os << "n_head_blocks = " << m.n_head_blocks << "\n";
    os << "n_body_blocks = " << m.n_body_blocks << "\n";
    os << "n_tail_blocks = " << m.n_tail_blocks << "\n";
    os << "d_model = " << m.d_model << "\n";
    os << "ffn_size = " << m.ffn_size << "\n";
    os << "n_heads = " << m.n_heads << "\n";
    os << "n_kv_heads = " << m.n_kv_heads << "\n";
    os << "rope_theta = " << fmt_f64(m.rope_theta) << "\n";
    os << "vocab_size = " << m.vocab_size << "\n";
    os << "max_seq_len = " << m.max_seq_len << "\n";
    os << "train_iters = " << m.train_iters << "\n";
    os << "init_std = " << fmt_f64(m.init_std) << "\n";
    os << "rms_eps = " << fmt_f64(m.rms_eps) << "\n";
    os << "seed = " << m.seed << "\n";
    return os.str();
}

ModelConfig parse_model_config_ini(const std::string& text) {
    FileConfig raw = parse_config_text(text, "<config blob>");
    ModelConfig m;
    for (const auto& [section, kv] : raw.sections) {
        if (section != "model")
            throw FormatError("model config blob: unexpected section '[" + section + "]'");
        for (const auto& [k, v] : kv)
            if (!apply_model_key(m, k, v))
                throw FormatError("model config blob: unknown key '" + k + "'");
    }
    m.validate();
    return m;
}

std::string echo_config(const ResolvedConfig& rc) {
    std::ostringstream os;
    os << model_config_ini(rc.train.model);
    os << "\n[train]\n";
    os << "token_budget = " << rc.train.token_budget << "\n";
    os << "batch_size = " << rc.train.batch_size << "\n";
    os << "seq_len = " << rc.train.seq_len << "\n";
    os << "peak_lr = " << fmt_f64(rc.train.peak_lr) << "\n";
    os << "min_lr_ratio = " << fmt_f64(rc.train.min_lr_ratio) << "\n";
    os << "warmup_frac = " << fmt_f64(rc.train.warmup_frac) << "\n";
    os << "decay_frac = " << fmt_f64(rc.train.decay_frac) << "\n";
    os << "adam_beta1 = " << fmt_f64(rc.train.adam.beta1) << "\n";
    os << "adam_beta2 = " << fmt_f64(rc.train.adam.beta2) << "\n";
    os << "adam_eps = " << fmt_f64(rc.train.adam.eps) << "\n";
    os << "weight_decay = " << fmt_f64(rc.train.adam.weight_decay) << "\n";
    os << "grad_clip = " << fmt_f64(rc.train.grad_clip) << "\n";
    os << "eval_every = " << rc.train.eval_every << "\n";
    os << "checkpoint_every = " << rc.train.checkpoint_every << "\n";
    os << "log_every = " << rc.train.log_every << "\n";
    os << "depth_seed = " << rc.train.depth_seed << "\n";
    os << "\n[data]\n";
    if (!rc.train.corpus_paths.empty()) {
        os << "corpus = ";
        for (size_t i = 0; i < rc.train.corpus_paths.size(); ++i)
            os << (i ? "," : "") << rc.train.corpus_paths[i];
        os << "\n";
    }
    if (!rc.train.val_path.empty()) os << "val_corpus = " << rc.train.val_path << "\n";
    os << "val_fraction = " << fmt_f64(rc.train.val_fraction) << "\n";
    os << "seed = " << rc.train.data_seed << "\n";
    os << "\n[eval]\n";
    os << "r = " << rc.eval.r << "\n";
    os << "seed = " << rc.eval.seed << "\n";
    return os.str();
}

}  // namespace abbie
