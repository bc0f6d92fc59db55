#include "phmm/simulate.hpp"

#include <algorithm>

#include "phmm/error.hpp"

namespace phmm {

namespace {
constexpr std::uint32_t kPathStream = 1;
constexpr std::uint32_t kEmissionStream = 2;
}  // namespace

std::mt19937_64 SeedSpec::engine(std::uint32_t stream_tag) const {
    std::seed_seq seq{static_cast<std::uint32_t>(root_seed), static_cast<std::uint32_t>(root_seed >> 32),
                      static_cast<std::uint32_t>(replicate_index),
                      static_cast<std::uint32_t>(replicate_index >> 32), stream_tag};
    return std::mt19937_64(seq);
}

std::size_t draw_categorical(std::mt19937_64& rng, std::span<const double> weights) {
    double total = 0.0;
    for (double w : weights) total += w;
    const double u = uniform01(rng) * total;
    double acc = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        acc += weights[i];
        if (u < acc) return i;
    }
    // u landed in the rounding slack at the top; return the last positive weight
    for (std::size_t i = weights.size(); i-- > 0;)
        if (weights[i] > 0.0) return i;
    return weights.size() - 1;
}

Path simulate_path(const ModelParams& theta, std::size_t t, const SeedSpec& seed) {
    Path path;
    path.reserve(t);
    if (t == 0) return path;
    auto rng = seed.engine(kPathStream);
    State s = kStates[draw_categorical(rng, theta.mu())];
    path.push_back(s);
    const auto& rows = theta.pi().entries();
    for (std::size_t k = 1; k < t; ++k) {
        s = kStates[draw_categorical(rng, rows[idx(s)])];
        path.push_back(s);
    }
    return path;
}

std::pair<Sequence, Sequence> emit_sequences(const ModelParams& theta, std::span<const State> path,
                                             const SeedSpec& seed) {
    auto rng = seed.engine(kEmissionStream);
    const auto& e = theta.emissions();
    const std::size_t k = e.alphabet_size();
    Sequence x, y;
    for (State s : path) {
        switch (s) {
            case State::H: x.push_back(static_cast<Symbol>(draw_categorical(rng, e.f))); break;
            case State::V: y.push_back(static_cast<Symbol>(draw_categorical(rng, e.g))); break;
            case State::D: {
                const std::size_t pair = draw_categorical(rng, e.h);
                x.push_back(static_cast<Symbol>(pair / k));
                y.push_back(static_cast<Symbol>(pair % k));
                break;
            }
        }
    }
    return {std::move(x), std::move(y)};
}

AlignmentSample simulate_pair(const ModelParams& theta, std::size_t t, const SeedSpec& seed) {
    AlignmentSample out;
    out.path = simulate_path(theta, t, seed);
    std::tie(out.x, out.y) = emit_sequences(theta, out.path, seed);
    return out;
}

AlignmentSample prefix(const AlignmentSample& sample, std::size_t t) {
    if (t > sample.t()) throw Error(ErrorCode::InvalidArgument, "prefix longer than the sample");
    AlignmentSample out;
    out.path.assign(sample.path.begin(), sample.path.begin() + static_cast<std::ptrdiff_t>(t));
    std::size_t n = 0, m = 0;
    for (State s : out.path) {
        n += static_cast<std::size_t>(step(s).dx);
        m += static_cast<std::size_t>(step(s).dy);
    }
    out.x.assign(sample.x.begin(), sample.x.begin() + static_cast<std::ptrdiff_t>(n));
    out.y.assign(sample.y.begin(), sample.y.begin() + static_cast<std::ptrdiff_t>(m));
    return out;
}

void check_sample(const AlignmentSample& sample) {
    std::size_t n = 0, m = 0;
    for (State s : sample.path) {
        n += static_cast<std::size_t>(step(s).dx);
        m += static_cast<std::size_t>(step(s).dy);
    }
    if (n != sample.x.size() || m != sample.y.size())
        throw Error(ErrorCode::InvalidArgument, "sample endpoint does not match the hidden path");
    const std::size_t t = sample.path.size();
    if (std::max(n, m) > t || t > n + m) throw Error(ErrorCode::InvalidArgument, "path length outside [n v m, n + m]");
}

}  // namespace phmm
