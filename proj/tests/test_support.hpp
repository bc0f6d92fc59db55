#pragma once

#include <algorithm>
#include <random>
#include <vector>

#include "phmm/model.hpp"

namespace phmm::test_support {

// Probability vector with every entry >= floor.
inline std::vector<double> floored_simplex(std::mt19937_64& rng, std::size_t k, double floor) {
    std::exponential_distribution<double> expo(1.0);
    std::vector<double> v(k);
    double total = 0.0;
    for (auto& x : v) total += (x = expo(rng));
    const double free_mass = 1.0 - floor * static_cast<double>(k);
    double sum = 0.0;
    for (std::size_t i = 0; i + 1 < k; ++i) sum += (v[i] = floor + free_mass * v[i] / total);
    v[k - 1] = 1.0 - sum;
    return v;
}

// Random θ in Θ_delta over an alphabet of size k.
inline ModelParams random_theta(std::mt19937_64& rng, double delta = 0.05, std::size_t k = 4) {
    Matrix3 pi{};
    for (auto& row : pi) {
        auto r = floored_simplex(rng, 3, delta);
        std::copy(r.begin(), r.end(), row.begin());
    }
    EmissionTables e;
    e.f = floored_simplex(rng, k, delta);
    e.g = floored_simplex(rng, k, delta);
    // a floor of delta on h needs k * k * delta < 1; larger alphabets get half
    // the feasible floor instead
    const double kk = static_cast<double>(k * k);
    e.h = floored_simplex(rng, k * k, kk * delta < 1 ? delta : 0.5 / kk);
    return {TransitionMatrix(pi), e};
}

// Every sequence of length len over {0..k-1}.
inline std::vector<Sequence> all_sequences(std::size_t k, std::size_t len) {
    std::vector<Sequence> out{Sequence{}};
    for (std::size_t pos = 0; pos < len; ++pos) {
        std::vector<Sequence> grown;
        for (const auto& s : out)
            for (std::size_t a = 0; a < k; ++a) {
                auto t = s;
                t.push_back(static_cast<Symbol>(a));
                grown.push_back(std::move(t));
            }
        out = std::move(grown);
    }
    return out;
}

// Moves at most `a` of mass between two entries of every probability vector,
// keeping entries >= delta; the result is within sup-distance a of theta.
inline ModelParams perturbed_theta(std::mt19937_64& rng, const ModelParams& theta, double a, double delta) {
    auto shift = [&](auto begin, std::size_t k) {
        std::uniform_int_distribution<std::size_t> pick(0, k - 1);
        const std::size_t i = pick(rng);
        std::size_t j = pick(rng);
        if (i == j) j = (j + 1) % k;
        const double s = std::max(0.0, std::min(a, begin[j] - delta));
        begin[i] += s;
        begin[j] -= s;
    };
    Matrix3 pi = theta.pi().entries();
    for (auto& row : pi) shift(row.begin(), 3);
    EmissionTables e = theta.emissions();
    shift(e.f.begin(), e.f.size());
    shift(e.g.begin(), e.g.size());
    shift(e.h.begin(), e.h.size());
    return {TransitionMatrix(pi), e};
}

inline ModelParams single_letter_iid(double p) {
    const std::vector<double> f{1.0};
    const std::array<double, 3> row{p, p, 1 - 2 * p};
    EmissionTables e{f, f, {1.0}};
    return {TransitionMatrix(Matrix3{row, row, row}), e};
}

inline ModelParams paper_markov_theta(double alpha = 0.05) {
    return theta_from_beta(ParametrizationScheme::markov(MarkovScheme{0.5, 0.2, 0.1, 0.6, 0.2, alpha}));
}

}  // namespace phmm::test_support
