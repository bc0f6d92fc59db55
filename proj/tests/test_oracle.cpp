#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <set>

#include "phmm/error.hpp"
#include "phmm/oracle.hpp"
#include "phmm/simulate.hpp"
#include "test_support.hpp"

using namespace phmm;

TEST(EnumeratePaths, OneByOne) {
    auto set = oracle::enumerate_paths(1, 1);
    ASSERT_EQ(set.paths.size(), 3u);
    std::set<Path> got(set.paths.begin(), set.paths.end());
    EXPECT_TRUE(got.count(Path{State::D}));
    EXPECT_TRUE(got.count(Path{State::H, State::V}));
    EXPECT_TRUE(got.count(Path{State::V, State::H}));
}

TEST(EnumeratePaths, SmallCases) {
    EXPECT_EQ(oracle::enumerate_paths(2, 2).paths.size(), 13u);
    auto one = oracle::enumerate_paths(1, 0);
    ASSERT_EQ(one.paths.size(), 1u);
    EXPECT_EQ(one.paths[0], Path{State::H});
    EXPECT_THROW(oracle::enumerate_paths(0, 0), Error);
    EXPECT_THROW(oracle::enumerate_paths(12, 12), Error);
}

TEST(EnumeratePaths, DelannoyRecurrenceAndPathInvariants) {
    for (std::size_t n = 0; n <= 6; ++n)
        for (std::size_t m = 0; m <= 6; ++m) {
            if (n + m == 0) continue;
            auto set = oracle::enumerate_paths(n, m);
            std::uint64_t expected = 1;
            if (n >= 1 && m >= 1)
                expected = oracle::delannoy(n - 1, m) + oracle::delannoy(n, m - 1) + oracle::delannoy(n - 1, m - 1);
            EXPECT_EQ(set.paths.size(), expected);
            std::set<Path> unique(set.paths.begin(), set.paths.end());
            EXPECT_EQ(unique.size(), set.paths.size());
            for (const auto& p : set.paths) {
                std::size_t i = 0, j = 0;
                for (State s : p) {
                    i += static_cast<std::size_t>(step(s).dx);
                    j += static_cast<std::size_t>(step(s).dy);
                }
                EXPECT_EQ(i, n);
                EXPECT_EQ(j, m);
                EXPECT_GE(p.size(), std::max(n, m));
                EXPECT_LE(p.size(), n + m);
            }
        }
}

TEST(BruteLogQ, SingleColumnClosedForm) {
    std::mt19937_64 rng(1);
    auto theta = test_support::random_theta(rng);
    const Sequence x{0, 3, 1};
    double expected = std::log(theta.mu()[0]) + 2 * std::log(theta.trans(State::H, State::H));
    for (Symbol s : x) expected += std::log(theta.emissions().f[s]);
    EXPECT_NEAR(oracle::brute_log_q(theta, x, {}), expected, 1e-13);
}

TEST(BruteLogQ, IndependentEmissionsFactorize) {
    const std::vector<double> f{0.1, 0.2, 0.3, 0.4};
    EmissionTables e{f, f, {}};
    for (double a : f)
        for (double b : f) e.h.push_back(a * b);
    const std::array<double, 3> row{0.2, 0.2, 0.6};
    ModelParams theta(TransitionMatrix({row, row, row}), e);
    const Sequence x{0, 2, 3}, y{1, 1};
    double expected = 0.0;
    double walk = 0.0;
    for (const auto& p : oracle::enumerate_paths(3, 2).paths) {
        double w = theta.mu(p[0]);
        for (std::size_t s = 1; s < p.size(); ++s) w *= theta.trans(p[s - 1], p[s]);
        walk += w;
    }
    expected = std::log(walk);
    for (Symbol s : x) expected += std::log(f[s]);
    for (Symbol s : y) expected += std::log(f[s]);
    EXPECT_NEAR(oracle::brute_log_q(theta, x, y), expected, 1e-12);
}

TEST(BruteLogL, LengthFilter) {
    std::mt19937_64 rng(2);
    auto theta = test_support::random_theta(rng);
    const Sequence x{1}, y{2};
    EXPECT_NEAR(oracle::brute_log_l(theta, x, y, 1), std::log(theta.mu()[2] * theta.emissions().joint(1, 2)), 1e-14);
    EXPECT_THROW(oracle::brute_log_l(theta, x, y, 3), Error);
}

TEST(AbsorbingOracle, SingleLetterConvergesToOne) {
    auto theta = test_support::single_letter_iid(0.3);
    auto r = oracle::brute_marginal_absorbing(theta, Sequence(2, 0), Sequence(3, 0), 1e-12);
    EXPECT_NEAR(r.log_value, 0.0, 1e-11);
    EXPECT_LE(r.error_bound, 1e-12);
}

TEST(AbsorbingOracle, MonteCarloPrefixFrequency) {
    auto theta = theta_from_beta(ParametrizationScheme::iid(0.25, 0.05));
    const Sequence x{2}, y{2};
    const double p = std::exp(oracle::brute_marginal_absorbing(theta, x, y, 1e-14).log_value);
    // simulate long enough that both prefixes exist with overwhelming probability
    const int reps = 1'000'000;
    int hits = 0, valid = 0;
    for (int r = 0; r < reps; ++r) {
        auto s = simulate_pair(theta, 40, {555, static_cast<std::uint64_t>(r)});
        if (s.x.empty() || s.y.empty()) continue;
        ++valid;
        if (s.x[0] == 2 && s.y[0] == 2) ++hits;
    }
    ASSERT_EQ(valid, reps);
    const double freq = static_cast<double>(hits) / reps;
    EXPECT_NEAR(freq, p, 4 * std::sqrt(p * (1 - p) / reps));
}

TEST(AbsorbingOracle, StepCap) {
    auto theta = theta_from_beta(ParametrizationScheme::iid(0.25, 0.05));
    EXPECT_THROW(oracle::brute_marginal_absorbing(theta, Sequence{0, 1}, Sequence{1}, 1e-300, 5), Error);
}
