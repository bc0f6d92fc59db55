#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "phmm/dp.hpp"
#include "phmm/error.hpp"
#include "phmm/inference.hpp"
#include "phmm/simulate.hpp"
#include "test_support.hpp"

using namespace phmm;

namespace {

const ParametrizationScheme kIid = ParametrizationScheme::iid(0.25, 0.05);

double peak(std::span<const double> u) {
    double s = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) s -= (u[i] - 0.3 * static_cast<double>(i + 1)) * (u[i] - 0.3 * static_cast<double>(i + 1));
    return s;
}

void expect_round_trip(const Reparametrization& rep, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> coord(-6.0, 6.0);
    for (int draw = 0; draw < 100; ++draw) {
        std::vector<double> u(rep.dim());
        for (double& c : u) c = coord(rng);
        const auto scheme = rep.to_scheme(u);
        const auto back = rep.from_scheme(scheme);
        for (std::size_t k = 0; k < u.size(); ++k) EXPECT_NEAR(back[k], u[k], 1e-10) << rep.free_names()[k];
        EXPECT_NO_THROW(theta_from_beta(scheme, ParamFloor(1e-4)));
    }
}

}  // namespace

TEST(Reparametrization, IidRoundTrip) {
    OptimizerConfig cfg;
    expect_round_trip(Reparametrization(kIid, {"p", "alpha"}, cfg), 1);
    expect_round_trip(Reparametrization(kIid, {"alpha"}, cfg), 2);
}

TEST(Reparametrization, MarkovRoundTrip) {
    OptimizerConfig cfg;
    const auto markov = ParametrizationScheme::markov({});
    // free entries only: the derived row V may have no balancing root, which
    // to_scheme does not need
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> coord(-6.0, 6.0);
    for (const auto& free : {markov.names(), std::vector<std::string>{"pi_HH", "pi_DV", "alpha"}}) {
        Reparametrization rep(markov, free, cfg);
        for (int draw = 0; draw < 100; ++draw) {
            std::vector<double> u(rep.dim());
            for (double& c : u) c = coord(rng);
            const auto back = rep.from_scheme(rep.to_scheme(u));
            for (std::size_t k = 0; k < u.size(); ++k) EXPECT_NEAR(back[k], u[k], 1e-10);
        }
    }
}

TEST(Reparametrization, ImageStaysAboveTheFloor) {
    OptimizerConfig cfg;
    cfg.delta = 0.01;
    const auto markov = ParametrizationScheme::markov({});
    Reparametrization rep(markov, markov.names(), cfg);
    std::vector<double> u{-30, -30, -30, 30, -30, -30};
    const auto v = rep.to_scheme(u).values();
    for (std::size_t k = 0; k + 1 < v.size(); ++k) EXPECT_GE(v[k], cfg.delta);
    EXPECT_GE(v.back(), cfg.alpha_min);
    EXPECT_LE(v.back(), cfg.alpha_max);
}

TEST(Reparametrization, UnknownNameRejected) {
    EXPECT_THROW(Reparametrization(kIid, {"pi_HH"}, OptimizerConfig{}), Error);
    EXPECT_THROW(Reparametrization(kIid, {}, OptimizerConfig{}), Error);
}

TEST(NelderMead, FindsQuadraticPeak) {
    auto r = nelder_mead_max(peak, {2.0, -1.0, 0.0}, 0.5, 1e-12, 1e-7, 5000);
    EXPECT_TRUE(r.converged);
    for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(r.best[i], 0.3 * static_cast<double>(i + 1), 1e-5);
    EXPECT_EQ(r.value, *std::max_element(r.simplex_values.begin(), r.simplex_values.end()));
}

TEST(NelderMead, DegenerateStartAtTheOptimum) {
    // one free coordinate; the start and its two neighbours are collinear and
    // the start is already the best of them
    auto f = [](std::span<const double> u) { return -(u[0] - 0.3) * (u[0] - 0.3); };
    auto r = nelder_mead_max(f, {0.3}, 1e-3, 1e-8, 1e-2, 100);
    EXPECT_NEAR(r.best[0], 0.3, 1e-2);
    EXPECT_DOUBLE_EQ(r.value, 0.0);
}

TEST(NelderMead, ArgmaxInvariantUnderShiftAndScale) {
    const double t = 3000.0;
    auto base = nelder_mead_max(peak, {1.0, 1.0}, 0.5, 1e-10, 1e-6, 4000);
    auto scaled = nelder_mead_max([&](std::span<const double> u) { return peak(u) / t; }, {1.0, 1.0}, 0.5,
                                  1e-10 / t, 1e-6, 4000);
    auto shifted = nelder_mead_max([&](std::span<const double> u) { return peak(u) - 40000.0; }, {1.0, 1.0}, 0.5,
                                   1e-10, 1e-6, 4000);
    EXPECT_EQ(base.evaluations, scaled.evaluations);
    for (std::size_t i = 0; i < 2; ++i) {
        EXPECT_NEAR(base.best[i], scaled.best[i], 1e-12);
        EXPECT_NEAR(base.best[i], shifted.best[i], 1e-4);
    }
}

TEST(NelderMead, NonFiniteValuesAreAvoided) {
    auto f = [](std::span<const double> u) {
        return u[0] > 1.0 ? std::numeric_limits<double>::quiet_NaN() : -(u[0] - 2.0) * (u[0] - 2.0);
    };
    auto r = nelder_mead_max(f, {0.0}, 0.5, 1e-12, 1e-8, 2000);
    EXPECT_LE(r.best[0], 1.0);
    EXPECT_NEAR(r.best[0], 1.0, 1e-4);
}

class MleOnIidData : public ::testing::Test {
protected:
    static void SetUpTestSuite() { sample_ = simulate_pair(theta_from_beta(kIid), 1500, {2024, 0}); }
    static AlignmentSample sample_;
};
AlignmentSample MleOnIidData::sample_;

TEST_F(MleOnIidData, ProfileEstimateIsNearTruth) {
    OptimizerConfig cfg;
    auto r = mle(sample_.x, sample_.y, kIid, {"p"}, cfg, sample_.t());
    ASSERT_EQ(r.free_values.size(), 1u);
    EXPECT_NEAR(r.free_values[0], 0.25, 0.05);
    EXPECT_TRUE(r.converged);
    EXPECT_FALSE(r.weakly_identified);
    EXPECT_EQ(std::get<IidScheme>(r.beta_hat.variant).alpha, 0.05);
    EXPECT_DOUBLE_EQ(r.normalizer, 1500.0);
}

TEST_F(MleOnIidData, CriterionIsTheMaximumOverEveryEvaluatedPoint) {
    OptimizerConfig cfg;
    cfg.multistarts = 2;
    auto r = mle(sample_.x, sample_.y, kIid, {"p", "alpha"}, cfg, sample_.t());
    ASSERT_EQ(r.trace.size(), 2u);
    for (const auto& tr : r.trace) {
        EXPECT_GE(r.criterion_value + 1e-12, tr.criterion_value);
        auto start = kIid.with_values(tr.start);
        EXPECT_GE(r.criterion_value + 1e-12, log_q(theta_from_beta(start), sample_.x, sample_.y).value / 1500.0);
    }
    EXPECT_NEAR(r.criterion_value, log_q(theta_from_beta(r.beta_hat), sample_.x, sample_.y).value / 1500.0, 1e-12);
}

TEST_F(MleOnIidData, NormalizationDoesNotMoveTheArgmax) {
    OptimizerConfig cfg;
    auto a = mle(sample_.x, sample_.y, kIid, {"p"}, cfg, sample_.t());
    cfg.tolerance *= static_cast<double>(sample_.x.size() + sample_.y.size()) / 1500.0;
    auto b = mle(sample_.x, sample_.y, kIid, {"p"}, cfg, 0);
    EXPECT_NEAR(a.free_values[0], b.free_values[0], 1e-6);
    EXPECT_DOUBLE_EQ(b.normalizer, static_cast<double>(sample_.x.size() + sample_.y.size()));
}

TEST_F(MleOnIidData, MixedPrecisionObjectiveAgrees) {
    OptimizerConfig cfg;
    auto a = mle(sample_.x, sample_.y, kIid, {"p"}, cfg, sample_.t());
    cfg.precision = Precision::Mixed;
    cfg.tolerance = 1e-7;
    auto b = mle(sample_.x, sample_.y, kIid, {"p"}, cfg, sample_.t());
    EXPECT_NEAR(a.free_values[0], b.free_values[0], 2e-3);
    EXPECT_NEAR(b.criterion_value, log_q(theta_from_beta(b.beta_hat), sample_.x, sample_.y).value / 1500.0, 1e-12);
}

TEST_F(MleOnIidData, ViterbiStartIsFeasible) {
    OptimizerConfig cfg;
    Reparametrization rep(kIid, {"p", "alpha"}, cfg);
    auto start = viterbi_start(sample_.x, sample_.y, rep, cfg);
    ASSERT_TRUE(start.has_value());
    const auto v = start->values();
    EXPECT_GT(v[0], 0.1);
    EXPECT_LT(v[0], 0.4);
    EXPECT_NO_THROW(theta_from_beta(*start, ParamFloor(cfg.delta)));
}

TEST(Mle, RejectsEmptyInputAndBadConfig) {
    OptimizerConfig cfg;
    Sequence x{0, 1};
    EXPECT_THROW(mle({}, {}, kIid, {"p"}, cfg), Error);
    cfg.multistarts = 0;
    EXPECT_THROW(mle(x, x, kIid, {"p"}, cfg), Error);
}

TEST(Posterior, SinglePointHasAllTheMass) {
    auto g = posterior_from_loglik({kIid}, {-40000.0});
    ASSERT_EQ(g.posterior.size(), 1u);
    EXPECT_DOUBLE_EQ(g.posterior[0], 1.0);
    EXPECT_DOUBLE_EQ(g.log_normalizer, -40000.0);
}

TEST(Posterior, LogOddsEqualTheLikelihoodGap) {
    auto g = posterior_from_loglik({kIid, kIid}, {-40000.0, -39997.5});
    EXPECT_GT(g.posterior[1], g.posterior[0]);
    EXPECT_NEAR(std::log(g.posterior[1] / g.posterior[0]), 2.5, 1e-12);
    EXPECT_EQ(g.mode(), 1u);
}

TEST(Posterior, NormalizedAndPriorWeighted) {
    std::vector<ParametrizationScheme> grid(5, kIid);
    std::vector<double> ll{-41000.0, -40990.0, -40985.0, -40992.0, -41003.0};
    std::vector<double> prior{0.1, 0.1, 0.2, 0.3, 0.3};
    auto g = posterior_from_loglik(grid, ll, prior);
    double s = 0.0;
    for (double p : g.posterior) s += p;
    EXPECT_NEAR(s, 1.0, 1e-12);
    for (std::size_t i = 0; i < grid.size(); ++i)
        EXPECT_NEAR(std::log(g.posterior[i]), std::log(prior[i]) + ll[i] - g.log_normalizer, 1e-9);
    EXPECT_THROW(posterior_from_loglik(grid, ll, {0.5, 0.5}), Error);
    EXPECT_THROW(posterior_from_loglik(grid, ll, {0.5, 0.5, 0.5, 0.0, 0.0}), Error);
}

TEST(Posterior, AxisGridSpacing) {
    auto grid = axis_grid(kIid, "p", 0.05, 0.45, 21);
    ASSERT_EQ(grid.size(), 21u);
    EXPECT_NEAR(std::get<IidScheme>(grid[8].variant).p, 0.21, 1e-15);
    EXPECT_NEAR(std::get<IidScheme>(grid[20].variant).p, 0.45, 1e-15);
    EXPECT_THROW(axis_grid(kIid, "pi_HH", 0, 1, 3), Error);
}

TEST(Posterior, ConcentratesOnNestedData) {
    // mass within one grid step of p0 should not drop when the data double
    const auto grid = axis_grid(kIid, "p", 0.05, 0.45, 21);
    const ModelParams truth = theta_from_beta(kIid);
    auto near_mass = [&](const AlignmentSample& s) {
        auto g = posterior_grid(s.x, s.y, grid);
        return g.posterior[9] + g.posterior[10] + g.posterior[11];
    };
    int nondecreasing = 0;
    const int reps = 50;
    for (int r = 0; r < reps; ++r) {
        auto full = simulate_pair(truth, 1000, {606, static_cast<std::uint64_t>(r)});
        if (near_mass(full) + 1e-12 >= near_mass(prefix(full, 500))) ++nondecreasing;
    }
    EXPECT_GE(nondecreasing, 40);
}
