#include <gtest/gtest.h>

#include <cmath>

#include <boost/math/distributions/chi_squared.hpp>

#include "phmm/error.hpp"
#include "phmm/simulate.hpp"
#include "test_support.hpp"

using namespace phmm;

namespace {
const ModelParams& iid_theta() {
    static const ModelParams theta = theta_from_beta(ParametrizationScheme::iid(0.25, 0.05));
    return theta;
}
}  // namespace

TEST(SeedSpec, StreamsAreDeterministicAndDistinct) {
    SeedSpec a{42, 0}, b{42, 1}, c{43, 0};
    EXPECT_EQ(a.engine()(), (SeedSpec{42, 0}.engine()()));
    EXPECT_NE(a.engine()(), b.engine()());
    EXPECT_NE(a.engine()(), c.engine()());
    EXPECT_NE(a.engine(1)(), a.engine(2)());
}

TEST(SimulatePath, EmptyPath) { EXPECT_TRUE(simulate_path(iid_theta(), 0, {1, 0}).empty()); }

TEST(SimulatePath, FirstStepFollowsStationaryLaw) {
    const int draws = 100000;
    int diag = 0;
    for (int r = 0; r < draws; ++r)
        if (simulate_path(iid_theta(), 1, {7, static_cast<std::uint64_t>(r)})[0] == State::D) ++diag;
    EXPECT_NEAR(static_cast<double>(diag) / draws, 0.5, 0.005);
}

TEST(SimulatePath, FirstStepChiSquareOnMarkovTheta) {
    auto theta = test_support::paper_markov_theta();
    const int draws = 100000;
    std::array<double, 3> counts{};
    for (int r = 0; r < draws; ++r) counts[idx(simulate_path(theta, 1, {99, static_cast<std::uint64_t>(r)})[0])] += 1;
    double stat = 0.0;
    for (std::size_t s = 0; s < 3; ++s) {
        const double expected = draws * theta.mu()[s];
        stat += (counts[s] - expected) * (counts[s] - expected) / expected;
    }
    boost::math::chi_squared dist(2);
    EXPECT_GT(1.0 - boost::math::cdf(dist, stat), 1e-3);
}

TEST(SimulatePath, LongRunFrequenciesOnMarkovTheta) {
    auto theta = test_support::paper_markov_theta();
    auto path = simulate_path(theta, 100000, {5, 0});
    std::array<double, 3> freq{};
    for (State s : path) freq[idx(s)] += 1.0 / static_cast<double>(path.size());
    EXPECT_NEAR(freq[0], 0.25, 0.005);
    EXPECT_NEAR(freq[1], 0.25, 0.005);
    EXPECT_NEAR(freq[2], 0.5, 0.005);
}

TEST(EmitSequences, EmptyPath) {
    auto [x, y] = emit_sequences(iid_theta(), {}, {1, 0});
    EXPECT_TRUE(x.empty());
    EXPECT_TRUE(y.empty());
}

TEST(EmitSequences, SingleLetterAlphabet) {
    auto theta = test_support::single_letter_iid(0.25);
    auto sample = simulate_pair(theta, 500, {3, 3});
    for (Symbol s : sample.x) EXPECT_EQ(s, 0);
    for (Symbol s : sample.y) EXPECT_EQ(s, 0);
    check_sample(sample);
}

TEST(EmitSequences, MatchFrequencyOnAlignedColumns) {
    auto sample = simulate_pair(iid_theta(), 10000, {12, 0});
    std::size_t i = 0, j = 0, diag = 0, same = 0;
    for (State s : sample.path) {
        if (s == State::D) {
            ++diag;
            if (sample.x[i] == sample.y[j]) ++same;
        }
        i += static_cast<std::size_t>(step(s).dx);
        j += static_cast<std::size_t>(step(s).dy);
    }
    const double p = 0.9634220684;
    const double sd = std::sqrt(p * (1 - p) / static_cast<double>(diag));
    EXPECT_NEAR(static_cast<double>(same) / static_cast<double>(diag), p, 3 * sd);
}

TEST(SimulatePair, EndpointBookkeeping) {
    std::mt19937_64 rng(1);
    for (std::uint64_t r = 0; r < 50; ++r) {
        auto theta = test_support::random_theta(rng);
        auto sample = simulate_pair(theta, 300, {8, r});
        EXPECT_NO_THROW(check_sample(sample));
        std::size_t h = 0, v = 0, d = 0;
        for (State s : sample.path) (s == State::H ? h : s == State::V ? v : d)++;
        EXPECT_EQ(h + d, sample.x.size());
        EXPECT_EQ(v + d, sample.y.size());
    }
}

TEST(SimulatePair, HorizontalCountCoverage) {
    // N_t is a sum of t Bernoulli(0.75) indicators under the i.i.d. scheme
    const double sd = std::sqrt(4000 * 0.25 * 0.75);
    int covered = 0;
    for (std::uint64_t r = 0; r < 100; ++r) {
        auto sample = simulate_pair(iid_theta(), 4000, {2024, r});
        if (std::abs(static_cast<double>(sample.x.size()) - 3000.0) <= 3 * sd) ++covered;
    }
    EXPECT_GE(covered, 99);
}

TEST(SimulatePair, Deterministic) {
    auto a = simulate_pair(iid_theta(), 1000, {77, 4});
    auto b = simulate_pair(iid_theta(), 1000, {77, 4});
    EXPECT_EQ(a.path, b.path);
    EXPECT_EQ(a.x, b.x);
    EXPECT_EQ(a.y, b.y);
    EXPECT_TRUE(simulate_pair(iid_theta(), 0, {1, 1}).path.empty());
}

TEST(SimulatePair, PrefixEqualsShorterRun) {
    auto theta = test_support::paper_markov_theta();
    auto full = simulate_pair(theta, 2000, {5, 9});
    for (std::size_t t : {0, 1, 500, 1999, 2000}) {
        auto a = prefix(full, t);
        auto b = simulate_pair(theta, t, {5, 9});
        EXPECT_EQ(a.path, b.path);
        EXPECT_EQ(a.x, b.x);
        EXPECT_EQ(a.y, b.y);
    }
    EXPECT_THROW(prefix(full, 2001), Error);
}
