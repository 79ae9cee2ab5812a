#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "abbie/tensor.hpp"

namespace abbie {

// Byte identity tokenizer: ids 0..255 are the raw bytes. Optional reserved
// ids are appended after 255; encode never emits them and decode drops them.
class ByteTokenizer {
public:
    explicit ByteTokenizer(int64_t reserved = 0);
    int64_t vocab_size() const { return 256 + reserved_; }
    std::vector<int32_t> encode(std::string_view text) const;
    std::string decode(const std::vector<int32_t>& ids) const;

private:
    int64_t reserved_;
};

// Reads the files in argument order and concatenates their bytes.
std::vector<int32_t> load_corpus(const std::vector<std::string>& paths, const ByteTokenizer& tok);

struct Batch {
    Ids inputs;   // [batch, seq_len]
    Ids targets;  // [batch, seq_len]; targets[i] == inputs[i+1] within a window
};

// Deterministic batching over non-overlapping windows of seq_len+1 tokens.
// Window order is shuffled per epoch from (seed, epoch); no window is emitted
// twice within an epoch, and the per-epoch tail that does not fill a batch is
// dropped (it reenters the next shuffle).
class BatchStream {
public:
    BatchStream(std::vector<int32_t> tokens, int64_t seq_len, int64_t batch_size, uint64_t seed);

    Batch next();

    int64_t windows() const { return windows_; }
    int64_t batches_per_epoch() const { return windows_ / batch_size_; }
    uint64_t epoch() const { return epoch_; }
    int64_t cursor() const { return cursor_; }

    // Jump to an exact stream position (checkpoint resume).
    void restore(uint64_t epoch, int64_t cursor);

private:
    void reshuffle();

    std::vector<int32_t> tokens_;
    int64_t seq_len_, batch_size_, windows_;
    uint64_t seed_, epoch_ = 0;
    int64_t cursor_ = 0;
    std::vector<int64_t> order_;
};

}  // namespace abbie
