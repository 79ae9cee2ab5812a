#include "abbie/data.hpp"

#include <fstream>

#include "abbie/rng.hpp"

namespace abbie {

ByteTokenizer::ByteTokenizer(int64_t reserved) : reserved_(reserved) {
    if (reserved < 0) throw ConfigError("tokenizer: reserved id count must be >= 0");
}

std::vector<int32_t> ByteTokenizer::encode(std::string_view text) const {
    std::vector<int32_t> ids;
    ids.reserve(text.size());
    for (unsigned char c : text) ids.push_back(static_cast<int32_t>(c));
    return ids;
}

std::string ByteTokenizer::decode(const std::vector<int32_t>& ids) const {
    std::string out;
    out.reserve(ids.size());
    for (int32_t id : ids) {
        if (id < 0 || id >= vocab_size())
            throw DataError("decode: id " + std::to_string(id) + " out of range [0," +
                            std::to_string(vocab_size()) + ")");
        if (id < 256) out.push_back(static_cast<char>(static_cast<unsigned char>(id)));
    }
    return out;
}

std::vector<int32_t> load_corpus(const std::vector<std::string>& paths, const ByteTokenizer& tok) {
    if (paths.empty()) throw IoError("no corpus files given");
    std::vector<int32_t> tokens;
    for (const auto& p : paths) {
        std::ifstream f(p, std::ios::binary);
        if (!f) throw IoError("cannot open corpus file '" + p + "'");
        std::string bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
        auto ids = tok.encode(bytes);
        tokens.insert(tokens.end(), ids.begin(), ids.end());
    }
    return tokens;
}

BatchStream::BatchStream(std::vector<int32_t> tokens, int64_t seq_len, int64_t batch_size,
                         uint64_t seed)
    : tokens_(std::move(tokens)), seq_len_(seq_len), batch_size_(batch_size), seed_(seed) {
    if (seq_len_ < 1) throw ConfigError("batch stream: seq_len must be >= 1");
    if (batch_size_ < 1) throw ConfigError("batch stream: batch_size must be >= 1");
    windows_ = static_cast<int64_t>(tokens_.size()) / (seq_len_ + 1);
    if (windows_ < batch_size_)
        throw DataError("corpus too small: need at least batch_size*(seq_len+1) = " +
                        std::to_string(batch_size_ * (seq_len_ + 1)) + " tokens, got " +
                        std::to_string(tokens_.size()));
    reshuffle();
}

void BatchStream::reshuffle() {
    order_.resize(static_cast<size_t>(windows_));
    for (int64_t i = 0; i < windows_; ++i) order_[static_cast<size_t>(i)] = i;
    Prng rng(mix_seed(seed_, epoch_));
    rng.shuffle(order_);
}

void BatchStream::restore(uint64_t epoch, int64_t cursor) {
    if (cursor < 0 || cursor > windows_) throw UsageError("batch stream: bad cursor");
    epoch_ = epoch;
    cursor_ = cursor;
    reshuffle();
}

Batch BatchStream::next() {
    if (cursor_ + batch_size_ > windows_) {
        epoch_ += 1;
        cursor_ = 0;
        reshuffle();
    }
    Batch b;
    b.inputs.shape = {batch_size_, seq_len_};
    b.targets.shape = {batch_size_, seq_len_};
    b.inputs.v.resize(static_cast<size_t>(batch_size_ * seq_len_));
    b.targets.v.resize(static_cast<size_t>(batch_size_ * seq_len_));
    for (int64_t bi = 0; bi < batch_size_; ++bi) {
        const int64_t w = order_[static_cast<size_t>(cursor_ + bi)];
        const int32_t* base = tokens_.data() + w * (seq_len_ + 1);
        for (int64_t i = 0; i < seq_len_; ++i) {
            b.inputs.v[static_cast<size_t>(bi * seq_len_ + i)] = base[i];
            b.targets.v[static_cast<size_t>(bi * seq_len_ + i)] = base[i + 1];
        }
    }
    cursor_ += batch_size_;
    return b;
}

}  // namespace abbie
