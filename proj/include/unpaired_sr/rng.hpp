#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <vector>

namespace unpaired_sr {

using Rng = std::mt19937_64;

/// Independent generator for a (seed, tag...) tuple. Training derives one per
/// (stream, step) so that no generator state has to be carried across steps.
inline Rng derive_rng(std::uint64_t seed, std::initializer_list<std::uint64_t> tags = {}) {
    std::vector<std::uint32_t> words;
    words.reserve(2 + 2 * tags.size());
    auto push = [&words](std::uint64_t v) {
        words.push_back(static_cast<std::uint32_t>(v & 0xffffffffu));
        words.push_back(static_cast<std::uint32_t>(v >> 32));
    };
    push(seed);
    for (auto t : tags) push(t);
    std::seed_seq seq(words.begin(), words.end());
    return Rng(seq);
}

/// Named stream ids, kept stable so checkpoints stay replayable across versions.
namespace stream {
inline constexpr std::uint64_t kInitG = 1;
inline constexpr std::uint64_t kInitF = 2;
inline constexpr std::uint64_t kInitDReal = 3;
inline constexpr std::uint64_t kInitDSyn = 4;
inline constexpr std::uint64_t kInitR = 5;
inline constexpr std::uint64_t kInitDRa = 6;
inline constexpr std::uint64_t kInitDHr = 7;
inline constexpr std::uint64_t kInitDAda = 8;
inline constexpr std::uint64_t kStage1Syn = 101;
inline constexpr std::uint64_t kStage1Real = 102;
inline constexpr std::uint64_t kStage1Pool = 103;
inline constexpr std::uint64_t kStage2Pairs = 201;
inline constexpr std::uint64_t kStage2Real = 202;
inline constexpr std::uint64_t kSplit = 301;
inline constexpr std::uint64_t kSmoke = 401;
}  // namespace stream

}  // namespace unpaired_sr
