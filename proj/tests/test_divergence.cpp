#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "phmm/divergence.hpp"
#include "phmm/dp.hpp"
#include "phmm/error.hpp"
#include "test_support.hpp"

using namespace phmm;

namespace {

const ParametrizationScheme kIid = ParametrizationScheme::iid(0.25, 0.05);

const ModelParams& truth() {
    static const ModelParams theta = theta_from_beta(kIid);
    return theta;
}

ModelParams iid(double p, double alpha) { return theta_from_beta(ParametrizationScheme::iid(p, alpha)); }

}  // namespace

TEST(Divergence, ZeroAtTheTruthWithSharedData) {
    auto d = divergence(truth(), truth(), 300, 5, 17, RateTarget::D);
    EXPECT_EQ(d.mean, 0.0);
    EXPECT_EQ(d.se, 0.0);
    EXPECT_TRUE(d.common_random_numbers);
    auto ds = divergence(truth(), truth(), 60, 5, 17, RateTarget::Dstar);
    EXPECT_EQ(ds.mean, 0.0);
    EXPECT_EQ(ds.target, RateTarget::Dstar);
}

TEST(Divergence, EqualsDifferenceOfRatesOnSharedSeeds) {
    const auto other = iid(0.15, 0.08);
    auto w0 = estimate_w(truth(), truth(), 400, 6, 5);
    auto w1 = estimate_w(other, truth(), 400, 6, 5);
    auto d = divergence(other, truth(), 400, 6, 5, RateTarget::D);
    EXPECT_NEAR(d.mean, w0.mean - w1.mean, 1e-12);
    for (std::size_t r = 0; r < 6; ++r) EXPECT_NEAR(d.values[r], w0.values[r] - w1.values[r], 1e-12);
}

TEST(Divergence, RatesAreLogProbabilities) {
    auto w = estimate_w(iid(0.1, 0.05), truth(), 300, 8, 3);
    EXPECT_LE(w.mean, 0.0);
    EXPECT_EQ(w.replicates, 8u);
    double mean = 0.0;
    for (double v : w.values) mean += v / 8.0;
    double ss = 0.0;
    for (double v : w.values) ss += (v - mean) * (v - mean);
    EXPECT_NEAR(w.se, std::sqrt(ss / 7.0) / std::sqrt(8.0), 1e-15);
}

TEST(Divergence, FixedLengthRateIsDominated) {
    std::mt19937_64 rng(4);
    for (int k = 0; k < 5; ++k) {
        const auto theta = test_support::random_theta(rng);
        const auto samples = simulate_replicates(truth(), 120, 4, 100 + k);
        const auto w = replicate_rates(RateTarget::W, theta, samples);
        const auto l = replicate_rates(RateTarget::L, theta, samples);
        for (std::size_t r = 0; r < samples.size(); ++r) EXPECT_LE(l[r], w[r] + 1e-12);
    }
}

TEST(Divergence, FixedLengthCap) {
    EXPECT_THROW(estimate_l(truth(), truth(), kMaxFixedT + 1, 1, 1), Error);
    try {
        divergence(truth(), truth(), 700, 1, 1, RateTarget::Dstar);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::TooLarge);
    }
    EXPECT_THROW(divergence(truth(), truth(), 10, 1, 1, RateTarget::W), Error);
    EXPECT_THROW(estimate_w(truth(), truth(), 0, 1, 1), Error);
}

TEST(Divergence, NonnegativeAroundTheTruth) {
    for (double p : {0.2, 0.3})
        for (double a : {0.03, 0.08}) {
            auto d = divergence(iid(p, a), truth(), 800, 8, 9, RateTarget::D);
            EXPECT_GE(d.mean, -3 * d.se) << p << ' ' << a;
        }
    auto ds = divergence(iid(0.2, 0.05), truth(), 150, 8, 9, RateTarget::Dstar);
    EXPECT_GE(ds.mean, -3 * ds.se);
}

TEST(Divergence, ParallelRunsAreIdentical) {
    auto a = estimate_w(iid(0.2, 0.1), truth(), 300, 6, 42, 1);
    auto b = estimate_w(iid(0.2, 0.1), truth(), 300, 6, 42, 3);
    EXPECT_EQ(a.values, b.values);
}

TEST(Divergence, Equicontinuity) {
    // |t^-1 w_t(θ1) - t^-1 w_t(θ2)| <= 4a/δ on Θ_δ, per replicate
    const double delta = 0.05;
    std::mt19937_64 rng(12);
    std::uniform_real_distribution<double> dist(0.0, 0.01);
    const auto samples = simulate_replicates(truth(), 150, 2, 77);
    for (int pair = 0; pair < 20; ++pair) {
        const auto t1 = test_support::random_theta(rng, delta);
        const auto t2 = test_support::perturbed_theta(rng, t1, dist(rng), delta);
        const double a = t1.distance(t2);
        ASSERT_LE(a, 0.01 + 1e-15);
        ASSERT_TRUE(ParamFloor(delta).contains(t2));
        for (auto target : {RateTarget::W, RateTarget::L}) {
            const auto r1 = replicate_rates(target, t1, samples);
            const auto r2 = replicate_rates(target, t2, samples);
            for (std::size_t r = 0; r < samples.size(); ++r) EXPECT_LE(std::abs(r1[r] - r2[r]), 4 * a / delta);
        }
    }
}

TEST(Divergence, RunningRateStabilizes) {
    const auto full = simulate_pair(truth(), 4000, {321, 0});
    std::vector<double> rates;
    for (std::size_t t : {500, 1000, 2000, 4000}) {
        const auto s = prefix(full, t);
        rates.push_back(log_q(truth(), s.x, s.y).value / static_cast<double>(t));
    }
    const double d1 = std::abs(rates[1] - rates[0]), d2 = std::abs(rates[2] - rates[1]),
                 d3 = std::abs(rates[3] - rates[2]);
    EXPECT_GT(d1, d2);
    EXPECT_GT(d2, d3);
    EXPECT_LE(d3, 0.01);
}

TEST(Divergence, NormalizedExpectationIsNondecreasing) {
    // t^-1 E[w_t] = sup_t, so it increases with t up to Monte-Carlo error
    std::vector<RateEstimate> est;
    for (std::size_t t : {250, 500, 1000}) est.push_back(estimate_w(truth(), truth(), t, 200, 55));
    for (std::size_t i = 0; i + 1 < est.size(); ++i)
        EXPECT_GE(est[i + 1].mean + 2 * std::hypot(est[i].se, est[i + 1].se), est[i].mean);
}

TEST(Surface, SingleCellIsTheRateEstimate) {
    AxisSpec a{"p", 0.25, 0.25, 1}, b{"alpha", 0.05, 0.05, 1};
    auto grid = surface(truth(), kIid, a, b, 300, 4, 8);
    auto w = estimate_w(truth(), truth(), 300, 4, 8);
    ASSERT_EQ(grid.cells.size(), 1u);
    EXPECT_EQ(grid.cells[0].w.mean, w.mean);
    EXPECT_EQ(grid.cells[0].w.values, w.values);
    EXPECT_FALSE(grid.cells[0].l.has_value());
}

TEST(Surface, GridLayoutAndCsv) {
    AxisSpec a{"p", 0.1, 0.3, 3}, b{"alpha", 0.02, 0.1, 2};
    SurfaceOptions opts;
    opts.include_l = true;
    auto grid = surface(truth(), kIid, a, b, 80, 3, 2, opts);
    ASSERT_EQ(grid.cells.size(), 6u);
    EXPECT_DOUBLE_EQ(grid.at(2, 1).value1, 0.3);
    EXPECT_DOUBLE_EQ(grid.at(2, 1).value2, 0.1);
    for (const auto& c : grid.cells) {
        ASSERT_TRUE(c.l.has_value());
        for (std::size_t r = 0; r < 3; ++r) EXPECT_LE(c.l->values[r], c.w.values[r] + 1e-12);
    }
    std::ostringstream os;
    grid.write_csv(os);
    std::istringstream is(os.str());
    std::string line;
    std::getline(is, line);
    EXPECT_EQ(line, kSurfaceCsvHeader);
    std::size_t rows = 0;
    while (std::getline(is, line)) {
        ++rows;
        EXPECT_EQ(std::count(line.begin(), line.end(), ','), 8);
    }
    EXPECT_EQ(rows, 12u);
    EXPECT_LT(grid.argmax(RateTarget::W), 6u);
}

TEST(Surface, RefusesBadRequests) {
    AxisSpec p{"p", 0.1, 0.3, 3};
    EXPECT_THROW(surface(truth(), kIid, p, p, 50, 1, 1), Error);
    EXPECT_THROW(surface(truth(), kIid, p, AxisSpec{"pi_HH", 0, 1, 2}, 50, 1, 1), Error);
    SurfaceOptions opts;
    opts.budget = 1e3;
    try {
        surface(truth(), kIid, p, AxisSpec{"alpha", 0.02, 0.1, 3}, 500, 2, 1, opts);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::BudgetExceeded);
        EXPECT_NE(std::string(e.what()).find("estimated"), std::string::npos);
    }
}
