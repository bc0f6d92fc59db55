#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "phmm/model.hpp"

namespace phmm {

enum class Criterion { Q, FixedT, Marginal };

const char* to_string(Criterion c);

struct LogLikResult {
    double value = 0.0;  // natural log, <= 0
    Criterion criterion = Criterion::Q;
    std::size_t n = 0;
    std::size_t m = 0;
    std::optional<std::size_t> t;  // set iff criterion == FixedT

    // True when the value is log 0 because some required probability is 0.
    bool zero_probability() const;
};

// Scratch buffers for the forward passes. One workspace per thread; reusing it
// across calls avoids reallocating on every objective evaluation.
class DpWorkspace {
public:
    std::vector<double>& buffer(std::size_t slot, std::size_t size);
    std::vector<float>& float_buffer(std::size_t size);

private:
    std::vector<std::vector<double>> buffers_;
    std::vector<float> float_buffer_;
};

struct ViterbiResult {
    Path path;
    double log_prob = 0.0;
};

struct DpConfig {
    std::size_t viterbi_cell_cap = 40'000'000;
};

// Mixed keeps cell values in float and the per-diagonal log scales in
// double: about twice as fast, with a relative error near 1e-7 per diagonal.
// Meant for optimizer objectives, where only differences well above that
// level matter.
enum class Precision { Double, Mixed };

// log Q_θ(x, y): sum over every path ending exactly at (n, m).
LogLikResult log_q(const ModelParams& theta, std::span<const Symbol> x, std::span<const Symbol> y,
                   DpWorkspace* ws = nullptr, Precision precision = Precision::Double);

// Same quantity computed cell by cell in the log domain over the full matrix.
// Slower; kept as an independent route for tests.
LogLikResult log_q_full(const ModelParams& theta, std::span<const Symbol> x, std::span<const Symbol> y);

// log of the probability of the pair jointly with Z_t = (n, m).
LogLikResult log_l_fixed_t(const ModelParams& theta, std::span<const Symbol> x, std::span<const Symbol> y,
                           std::size_t t, DpWorkspace* ws = nullptr);

// log P(X_{1:n} = x, Y_{1:m} = y) with no constraint on the walk visiting (n, m).
LogLikResult log_marginal(const ModelParams& theta, std::span<const Symbol> x, std::span<const Symbol> y);

ViterbiResult viterbi(const ModelParams& theta, std::span<const Symbol> x, std::span<const Symbol> y,
                      const DpConfig& cfg = {});

// log P(∃ s ≥ 1 : Z_s = (n, m)).
double log_hitting_prob(const ModelParams& theta, std::size_t n, std::size_t m);

// Joint log probability of one explicit path with the sequences.
double log_path_prob(const ModelParams& theta, std::span<const State> path, std::span<const Symbol> x,
                     std::span<const Symbol> y);

}  // namespace phmm
