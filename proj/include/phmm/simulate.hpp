#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <utility>

#include "phmm/model.hpp"

namespace phmm {

// A replicate's randomness is identified by (root_seed, replicate_index).
// Distinct streams within one replicate are selected by a tag.
struct SeedSpec {
    std::uint64_t root_seed = 0;
    std::uint64_t replicate_index = 0;

    std::mt19937_64 engine(std::uint32_t stream_tag = 0) const;
    bool operator==(const SeedSpec&) const = default;
};

// Uniform double in [0, 1) from the top 53 bits.
inline double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

// Inverse-CDF draw from a (not necessarily normalized) weight vector.
std::size_t draw_categorical(std::mt19937_64& rng, std::span<const double> weights);

struct AlignmentSample {
    Path path;
    Sequence x;
    Sequence y;

    std::size_t t() const { return path.size(); }
    std::pair<std::size_t, std::size_t> endpoint() const { return {x.size(), y.size()}; }
};

Path simulate_path(const ModelParams& theta, std::size_t t, const SeedSpec& seed);

std::pair<Sequence, Sequence> emit_sequences(const ModelParams& theta, std::span<const State> path,
                                             const SeedSpec& seed);

// Path and emissions use separate streams of the same seed.
AlignmentSample simulate_pair(const ModelParams& theta, std::size_t t, const SeedSpec& seed);

// The first t steps of a sample with the emissions they produced. Each step
// consumes one draw from each stream, so this equals simulate_pair at length
// t with the same seed.
AlignmentSample prefix(const AlignmentSample& sample, std::size_t t);

// Throws InvalidArgument when step counts and sequence lengths disagree.
void check_sample(const AlignmentSample& sample);

}  // namespace phmm
