#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "phmm/model.hpp"
#include "phmm/simulate.hpp"

namespace phmm {

enum class RateTarget { W, L, D, Dstar };

const char* to_string(RateTarget target);

// Monte-Carlo estimate of a normalized log-criterion (w, l) or of a difference
// of two of them on shared datasets (D, D*).
struct RateEstimate {
    RateTarget target = RateTarget::W;
    std::size_t t = 0;
    std::size_t replicates = 0;
    double mean = 0.0;
    double se = 0.0;  // sample sd / sqrt(R); 0 when R = 1
    bool common_random_numbers = false;
    std::vector<double> values;  // per replicate, index order
};

RateEstimate summarize(RateTarget target, std::size_t t, std::vector<double> values, bool crn);

// Fixed-t estimates are cubic in t; above this length they are refused.
inline constexpr std::size_t kMaxFixedT = 600;

// R pairs of length t under theta0, replicate r seeded by (seed, r).
std::vector<AlignmentSample> simulate_replicates(const ModelParams& theta0, std::size_t t, std::size_t replicates,
                                                 std::uint64_t seed, std::size_t jobs = 1);

// t^{-1} log Q or t^{-1} l_t for each sample, in sample order.
std::vector<double> replicate_rates(RateTarget target, const ModelParams& theta,
                                    const std::vector<AlignmentSample>& samples, std::size_t jobs = 1);

RateEstimate estimate_w(const ModelParams& theta, const ModelParams& theta0, std::size_t t, std::size_t replicates,
                        std::uint64_t seed, std::size_t jobs = 1);

// Throws TooLarge when t exceeds kMaxFixedT.
RateEstimate estimate_l(const ModelParams& theta, const ModelParams& theta0, std::size_t t, std::size_t replicates,
                        std::uint64_t seed, std::size_t jobs = 1);

// D(θ|θ0) = w(θ0) - w(θ) or D* with l, from per-replicate differences on the
// same datasets. Exactly 0 when theta == theta0.
RateEstimate divergence(const ModelParams& theta, const ModelParams& theta0, std::size_t t, std::size_t replicates,
                        std::uint64_t seed, RateTarget which, std::size_t jobs = 1);

struct AxisSpec {
    std::string name;
    double lo = 0.0;
    double hi = 0.0;
    std::size_t steps = 1;

    std::vector<double> values() const;
};

struct SurfaceCell {
    double value1 = 0.0;
    double value2 = 0.0;
    RateEstimate w;
    std::optional<RateEstimate> l;
};

struct SurfaceGrid {
    AxisSpec axis1;
    AxisSpec axis2;
    std::size_t t = 0;
    std::size_t replicates = 0;
    std::vector<SurfaceCell> cells;  // axis1-major

    const SurfaceCell& at(std::size_t i1, std::size_t i2) const { return cells.at(i1 * axis2.steps + i2); }
    // Index of the cell with the largest mean for the target (W or L).
    std::size_t argmax(RateTarget target) const;
    void write_csv(std::ostream& os, bool header = true) const;
};

inline constexpr const char* kSurfaceCsvHeader = "axis1_name,axis1_value,axis2_name,axis2_value,target,t,R,mean,se";

// Rough count of DP cell updates for a surface run.
double surface_cost(const ModelParams& theta0, std::size_t cells, std::size_t t, std::size_t replicates,
                    bool include_l);

struct SurfaceOptions {
    bool include_l = false;
    std::size_t jobs = 1;
    double budget = 2e11;  // DP cell updates
};

// Every cell is evaluated on the same R datasets simulated under theta0.
// Throws BudgetExceeded, with the cost estimate in the message, before doing
// any work when the run is too large.
SurfaceGrid surface(const ModelParams& theta0, const ParametrizationScheme& scheme, const AxisSpec& axis1,
                    const AxisSpec& axis2, std::size_t t, std::size_t replicates, std::uint64_t seed,
                    const SurfaceOptions& opts = {});

}  // namespace phmm
