#pragma once

#include <cstdint>
#include <string>

#include "abbie/analysis.hpp"

namespace abbie {

// Deterministic original English prose, released into the public domain by
// this project (see data/README.md). Template-expanded sentences over a fixed
// word bank: byte statistics resemble ordinary text, and the generator is
// seeded, so corpora are reproducible anywhere.
std::string generate_corpus(uint64_t seed, size_t n_bytes);

// Synthetic multiple-choice items: a templated context sentence plus
// same-shaped continuations, answer position uniform. Choices share the same
// word-count pattern, so length alone carries no signal.
McTask generate_mc_task(uint64_t seed, int64_t n_items, int64_t n_choices);

}  // namespace abbie
