#pragma once

#include <map>
#include <string>
#include <vector>

#include "abbie/model.hpp"
#include "abbie/trainer.hpp"

namespace abbie {

// Raw key/value view of a config file: [section] headers, key = value lines,
// '#' or ';' comments. Keys are validated during resolve, not parsing.
struct FileConfig {
    std::map<std::string, std::map<std::string, std::string>> sections;
};

FileConfig parse_config_text(const std::string& text, const std::string& origin);
FileConfig parse_config_file(const std::string& path);

// Applies a dotted command-line override "section.key=value".
void apply_override(FileConfig& cfg, const std::string& dotted);

struct EvalSettings {
    int64_t r = 0;  // 0: use the checkpoint's train_iters
    uint64_t seed = 7;
};

struct ResolvedConfig {
    TrainRunConfig train;  // includes the ModelConfig and data settings
    EvalSettings eval;
};

// Fills defaults, validates every key and value; unknown keys are rejected.
ResolvedConfig resolve_config(const FileConfig& raw);

// Full resolved echo, parseable back into an identical configuration.
std::string echo_config(const ResolvedConfig& cfg);

// The [model] section alone (checkpoint config blob).
std::string model_config_ini(const ModelConfig& cfg);
ModelConfig parse_model_config_ini(const std::string& text);

}  // namespace abbie
