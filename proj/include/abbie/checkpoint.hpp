#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "abbie/model.hpp"
#include "abbie/optim.hpp"

namespace abbie {

// On-disk layout (all integers little-endian; see docs/checkpoint_format.md):
//   magic "ABBI" | u32 version | u64 config_len | config (UTF-8, [model] ini)
//   u32 tensor_count | { u16 name_len, name, u8 ndim, u64 dims[], f32 data }*
//   u8 has_optimizer | u64 step | u64 tokens_seen
//   u32-length-prefixed strings: data_stream ("epoch cursor"), depth_stream
// Parameter tensors are named "param.<name>"; optimizer moments, when
// present, are "adam.m.<name>" / "adam.v.<name>".
struct Checkpoint {
    uint32_t version = 1;
    std::string config_blob;
    std::vector<std::pair<std::string, Tensor>> tensors;
    bool has_optimizer = false;
    uint64_t step = 0;
    uint64_t tokens_seen = 0;
    std::string data_stream;   // batch stream position
    std::string depth_stream;  // serialized Prng for the Depth noise stream
};

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

// Packs model weights (and, if given, optimizer state) into a checkpoint.
Checkpoint make_checkpoint(Model& model, const AdamWState* opt, uint64_t step,
                           uint64_t tokens_seen, const std::string& data_stream,
                           const std::string& depth_stream);

// Rebuilds the model from the config blob and the stored tensors.
Model model_from_checkpoint(const Checkpoint& ckpt);

// Restores optimizer moments; requires has_optimizer.
AdamWState optimizer_from_checkpoint(const Checkpoint& ckpt, Model& model);

}  // namespace abbie
