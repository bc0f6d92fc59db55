#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "phmm/model.hpp"

// Brute-force references over explicit path enumerations. Test use only;
// nothing here shares code with the dynamic programs.
namespace phmm::oracle {

struct PathSet {
    std::size_t n = 0;
    std::size_t m = 0;
    std::vector<Path> paths;
};

// Number of lattice paths with steps (1,0), (0,1), (1,1) from the origin.
std::uint64_t delannoy(std::size_t n, std::size_t m);

PathSet enumerate_paths(std::size_t n, std::size_t m, std::uint64_t limit = 1'000'000);

double brute_log_q(const ModelParams& theta, std::span<const Symbol> x, std::span<const Symbol> y);

double brute_log_l(const ModelParams& theta, std::span<const Symbol> x, std::span<const Symbol> y, std::size_t t);

// Best single-path joint log probability.
double brute_max_log_path(const ModelParams& theta, std::span<const Symbol> x, std::span<const Symbol> y);

// P(Z_t = (n, m)) by summing path probabilities of length t.
double brute_prob_endpoint(const ModelParams& theta, std::size_t n, std::size_t m, std::size_t t);

struct AbsorbingResult {
    double log_value;
    double error_bound;  // absolute bound on the probability, not the log
    std::size_t steps;
};

// Time-expanded chain over (min(i, n), min(j, m), state); emissions past the
// observed prefixes contribute 1 and mass reaching (n, m) is absorbed. Runs
// until the still-unabsorbed mass is at most tol.
AbsorbingResult brute_marginal_absorbing(const ModelParams& theta, std::span<const Symbol> x,
                                         std::span<const Symbol> y, double tol = 1e-12,
                                         std::size_t max_steps = 1'000'000);

}  // namespace phmm::oracle
