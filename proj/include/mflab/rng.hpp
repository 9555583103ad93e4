#pragma once

#include <cstdint>
#include <initializer_list>

// Random number generation. Everything downstream (noise matrices, starting
// points, data shuffles, synthetic datasets) derives from these primitives,
// so they are pinned: SplitMix64 for the uniform stream, Box-Muller for the
// normal transform. Do not swap either out -- stored seeds and recorded
// results would silently stop reproducing.
//
// Streams are addressed, not advanced past each other: derive_seed hashes a
// base seed with an index path (e.g. {cell, trial, row}) so independent
// consumers get independent streams without coordination.

namespace mflab {

std::uint64_t mix64(std::uint64_t x);
std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> path);

class SplitMix64 {
  public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        state_ += 0x9e3779b97f4a7c15ull;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    // Uniform in [0, 1), 53 significant bits.
    double next_double() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  private:
    std::uint64_t state_;
};

// Standard normal variates via Box-Muller; produces pairs internally and
// hands them out one at a time.
class GaussianStream {
  public:
    explicit GaussianStream(std::uint64_t seed) : gen_(seed) {}
    double next();

  private:
    SplitMix64 gen_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace mflab
