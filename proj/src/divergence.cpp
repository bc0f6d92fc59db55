#include "phmm/divergence.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>

#include "phmm/dp.hpp"
#include "phmm/error.hpp"
#include "phmm/io.hpp"
#include "phmm/parallel.hpp"

namespace phmm {

namespace {

double rate(RateTarget target, const ModelParams& theta, const AlignmentSample& s, DpWorkspace& ws) {
    const double t = static_cast<double>(s.t());
    if (target == RateTarget::W) return log_q(theta, s.x, s.y, &ws).value / t;
    return log_l_fixed_t(theta, s.x, s.y, s.t(), &ws).value / t;
}

void check_l_length(std::size_t t) {
    if (t > kMaxFixedT) {
        throw Error(ErrorCode::TooLarge,
                    "fixed-t estimates are limited to t <= " + std::to_string(kMaxFixedT) + ", got " + std::to_string(t));
    }
}

RateTarget base_target(RateTarget which) { return which == RateTarget::Dstar ? RateTarget::L : RateTarget::W; }

}  // namespace

const char* to_string(RateTarget target) {
    switch (target) {
        case RateTarget::W: return "w";
        case RateTarget::L: return "l";
        case RateTarget::D: return "D";
        case RateTarget::Dstar: return "Dstar";
    }
    return "?";
}

RateEstimate summarize(RateTarget target, std::size_t t, std::vector<double> values, bool crn) {
    if (values.empty()) throw Error(ErrorCode::InvalidArgument, "no replicates");
    RateEstimate est;
    est.target = target;
    est.t = t;
    est.replicates = values.size();
    est.common_random_numbers = crn;
    const double r = static_cast<double>(values.size());
    double sum = 0.0;
    for (double v : values) sum += v;
    est.mean = sum / r;
    if (values.size() > 1) {
        double ss = 0.0;
        for (double v : values) ss += (v - est.mean) * (v - est.mean);
        est.se = std::sqrt(ss / (r - 1)) / std::sqrt(r);
    }
    est.values = std::move(values);
    return est;
}

std::vector<AlignmentSample> simulate_replicates(const ModelParams& theta0, std::size_t t, std::size_t replicates,
                                                 std::uint64_t seed, std::size_t jobs) {
    std::vector<AlignmentSample> out(replicates);
    parallel_for(replicates, jobs, [&](std::size_t r, std::size_t) { out[r] = simulate_pair(theta0, t, {seed, r}); });
    return out;
}

std::vector<double> replicate_rates(RateTarget target, const ModelParams& theta,
                                    const std::vector<AlignmentSample>& samples, std::size_t jobs) {
    if (target != RateTarget::W && target != RateTarget::L)
        throw Error(ErrorCode::InvalidArgument, "per-replicate rates exist for w and l only");
    for (const auto& s : samples) {
        if (s.t() == 0) throw Error(ErrorCode::InvalidArgument, "rates need t >= 1");
        if (target == RateTarget::L) check_l_length(s.t());
    }
    std::vector<double> out(samples.size());
    std::vector<DpWorkspace> ws(resolve_jobs(jobs, samples.size()));
    parallel_for(samples.size(), jobs,
                 [&](std::size_t r, std::size_t worker) { out[r] = rate(target, theta, samples[r], ws[worker]); });
    return out;
}

RateEstimate estimate_w(const ModelParams& theta, const ModelParams& theta0, std::size_t t, std::size_t replicates,
                        std::uint64_t seed, std::size_t jobs) {
    if (t == 0 || replicates == 0) throw Error(ErrorCode::InvalidArgument, "need t >= 1 and R >= 1");
    const auto samples = simulate_replicates(theta0, t, replicates, seed, jobs);
    return summarize(RateTarget::W, t, replicate_rates(RateTarget::W, theta, samples, jobs), false);
}

RateEstimate estimate_l(const ModelParams& theta, const ModelParams& theta0, std::size_t t, std::size_t replicates,
                        std::uint64_t seed, std::size_t jobs) {
    if (t == 0 || replicates == 0) throw Error(ErrorCode::InvalidArgument, "need t >= 1 and R >= 1");
    check_l_length(t);
    const auto samples = simulate_replicates(theta0, t, replicates, seed, jobs);
    return summarize(RateTarget::L, t, replicate_rates(RateTarget::L, theta, samples, jobs), false);
}

RateEstimate divergence(const ModelParams& theta, const ModelParams& theta0, std::size_t t, std::size_t replicates,
                        std::uint64_t seed, RateTarget which, std::size_t jobs) {
    if (which != RateTarget::D && which != RateTarget::Dstar)
        throw Error(ErrorCode::InvalidArgument, "divergence target must be D or Dstar");
    if (t == 0 || replicates == 0) throw Error(ErrorCode::InvalidArgument, "need t >= 1 and R >= 1");
    const RateTarget base = base_target(which);
    if (base == RateTarget::L) check_l_length(t);
    const auto samples = simulate_replicates(theta0, t, replicates, seed, jobs);
    const auto truth = replicate_rates(base, theta0, samples, jobs);
    const auto other = replicate_rates(base, theta, samples, jobs);
    std::vector<double> diff(samples.size());
    for (std::size_t r = 0; r < diff.size(); ++r) diff[r] = truth[r] - other[r];
    return summarize(which, t, std::move(diff), true);
}

std::vector<double> AxisSpec::values() const {
    if (steps == 0) throw Error(ErrorCode::InvalidArgument, "axis '" + name + "' needs at least one step");
    std::vector<double> out(steps);
    for (std::size_t i = 0; i < steps; ++i)
        out[i] = steps == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(steps - 1);
    return out;
}

std::size_t SurfaceGrid::argmax(RateTarget target) const {
    std::size_t best = 0;
    double best_v = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < cells.size(); ++i) {
        double v;
        if (target == RateTarget::W) {
            v = cells[i].w.mean;
        } else if (target == RateTarget::L && cells[i].l) {
            v = cells[i].l->mean;
        } else {
            throw Error(ErrorCode::InvalidArgument, "surface has no values for that target");
        }
        if (v > best_v) {
            best_v = v;
            best = i;
        }
    }
    return best;
}

void SurfaceGrid::write_csv(std::ostream& os, bool header) const {
    if (header) os << kSurfaceCsvHeader << '\n';
    auto row = [&](const SurfaceCell& c, const RateEstimate& e) {
        os << axis1.name << ',' << format_number(c.value1) << ',' << axis2.name << ',' << format_number(c.value2) << ','
           << to_string(e.target) << ',' << e.t << ',' << e.replicates << ',' << format_number(e.mean) << ',' << format_number(e.se) << '\n';
    };
    for (const auto& c : cells) {
        row(c, c.w);
        if (c.l) row(c, *c.l);
    }
}

double surface_cost(const ModelParams& theta0, std::size_t cells, std::size_t t, std::size_t replicates,
                    bool include_l) {
    const auto& mu = theta0.mu();
    const double td = static_cast<double>(t);
    const double n = td * (1 - mu[1]), m = td * (1 - mu[0]);
    double per = n * m;
    if (include_l) per += n * m * std::min(n, m);
    return per * static_cast<double>(cells) * static_cast<double>(replicates);
}

SurfaceGrid surface(const ModelParams& theta0, const ParametrizationScheme& scheme, const AxisSpec& axis1,
                    const AxisSpec& axis2, std::size_t t, std::size_t replicates, std::uint64_t seed,
                    const SurfaceOptions& opts) {
    if (t == 0 || replicates == 0) throw Error(ErrorCode::InvalidArgument, "need t >= 1 and R >= 1");
    const auto pos1 = scheme.find(axis1.name), pos2 = scheme.find(axis2.name);
    if (!pos1 || !pos2)
        throw Error(ErrorCode::InvalidArgument, "surface axes must name parameters of the " + scheme.kind() + " scheme");
    if (*pos1 == *pos2) throw Error(ErrorCode::InvalidArgument, "the two axes must name different parameters");
    if (opts.include_l) check_l_length(t);
    const auto v1 = axis1.values(), v2 = axis2.values();
    const std::size_t ncells = v1.size() * v2.size();
    const double cost = surface_cost(theta0, ncells, t, replicates, opts.include_l);
    if (cost > opts.budget) {
        std::ostringstream os;
        os << "estimated " << cost << " DP cell updates exceeds the budget of " << opts.budget;
        throw Error(ErrorCode::BudgetExceeded, os.str());
    }

    SurfaceGrid grid;
    grid.axis1 = axis1;
    grid.axis2 = axis2;
    grid.t = t;
    grid.replicates = replicates;
    std::vector<ModelParams> thetas;
    auto values = scheme.values();
    for (double a : v1)
        for (double b : v2) {
            values[*pos1] = a;
            values[*pos2] = b;
            thetas.push_back(theta_from_beta(scheme.with_values(values)));
            grid.cells.push_back({a, b, {}, std::nullopt});
        }

    // one dataset per replicate, shared by every cell
    const auto samples = simulate_replicates(theta0, t, replicates, seed, opts.jobs);
    const std::size_t targets = opts.include_l ? 2 : 1;
    std::vector<double> out(ncells * replicates * targets);
    std::vector<DpWorkspace> ws(resolve_jobs(opts.jobs, out.size()));
    parallel_for(out.size(), opts.jobs, [&](std::size_t idx, std::size_t worker) {
        const std::size_t target = idx % targets;
        const std::size_t r = (idx / targets) % replicates;
        const std::size_t cell = idx / (targets * replicates);
        out[idx] = rate(target == 0 ? RateTarget::W : RateTarget::L, thetas[cell], samples[r], ws[worker]);
    });
    for (std::size_t c = 0; c < ncells; ++c) {
        std::vector<double> w(replicates), l(replicates);
        for (std::size_t r = 0; r < replicates; ++r) {
            w[r] = out[(c * replicates + r) * targets];
            if (opts.include_l) l[r] = out[(c * replicates + r) * targets + 1];
        }
        grid.cells[c].w = summarize(RateTarget::W, t, std::move(w), true);
        if (opts.include_l) grid.cells[c].l = summarize(RateTarget::L, t, std::move(l), true);
    }
    return grid;
}

}  // namespace phmm
