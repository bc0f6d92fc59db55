#include "phmm/inference.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <tuple>

#include "phmm/dp.hpp"
#include "phmm/error.hpp"

namespace phmm {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double logistic(double u) { return u >= 0 ? 1.0 / (1.0 + std::exp(-u)) : std::exp(u) / (1.0 + std::exp(u)); }

double logit(double s) {
    if (!(s > 0.0 && s < 1.0)) throw Error(ErrorCode::InvalidArgument, "value outside the reparametrized range");
    return std::log(s / (1.0 - s));
}

// Free coordinates that share a transition row with another named coordinate.
std::optional<std::string> row_partner(const std::string& name) {
    if (name == "pi_HH") return "pi_HV";
    if (name == "pi_HV") return "pi_HH";
    if (name == "pi_DH") return "pi_DV";
    if (name == "pi_DV") return "pi_DH";
    return std::nullopt;
}

bool is_first_of_pair(const std::string& name) { return name == "pi_HH" || name == "pi_DH"; }

}  // namespace

void OptimizerConfig::validate() const {
    if (multistarts == 0 || lattice_per_axis == 0 || max_lattice == 0 || max_evaluations == 0)
        throw Error(ErrorCode::InvalidArgument, "optimizer counts must be positive");
    if (!(coordinate_bound > lattice_spread))
        throw Error(ErrorCode::InvalidArgument, "coordinate bound must exceed the lattice spread");
    if (!(initial_step > 0 && tolerance > 0 && x_tolerance > 0 && lattice_spread >= 0))
        throw Error(ErrorCode::InvalidArgument, "optimizer step and tolerances must be positive");
    if (!(delta > 0 && delta < 1.0 / 3.0)) throw Error(ErrorCode::InvalidArgument, "floor must lie in (0, 1/3)");
    if (!(alpha_min > 0 && alpha_max > alpha_min)) throw Error(ErrorCode::InvalidArgument, "need 0 < alpha_min < alpha_max");
}

Reparametrization::Reparametrization(ParametrizationScheme tmpl, std::vector<std::string> free,
                                     const OptimizerConfig& cfg)
    : tmpl_(std::move(tmpl)), free_(std::move(free)), delta_(cfg.delta), log_amin_(std::log(cfg.alpha_min)),
      log_amax_(std::log(cfg.alpha_max)) {
    cfg.validate();
    if (tmpl_.is_raw()) throw Error(ErrorCode::InvalidArgument, "raw schemes have no named coordinates to estimate");
    if (free_.empty()) throw Error(ErrorCode::InvalidArgument, "no free parameters");
    for (const auto& name : free_) {
        auto pos = tmpl_.find(name);
        if (!pos) throw Error(ErrorCode::InvalidArgument, "unknown parameter '" + name + "' for scheme " + tmpl_.kind());
        if (std::find(slot_.begin(), slot_.end(), *pos) != slot_.end())
            throw Error(ErrorCode::InvalidArgument, "parameter '" + name + "' listed twice");
        slot_.push_back(*pos);
    }
}

std::size_t Reparametrization::alpha_index() const {
    auto it = std::find(free_.begin(), free_.end(), "alpha");
    return static_cast<std::size_t>(it - free_.begin());
}

ParametrizationScheme Reparametrization::to_scheme(std::span<const double> u) const {
    if (u.size() != dim()) throw Error(ErrorCode::InvalidArgument, "coordinate vector has the wrong size");
    auto values = tmpl_.values();
    auto free_pos = [&](const std::string& name) -> std::optional<std::size_t> {
        auto it = std::find(free_.begin(), free_.end(), name);
        if (it == free_.end()) return std::nullopt;
        return static_cast<std::size_t>(it - free_.begin());
    };
    const double d = delta_;
    for (std::size_t k = 0; k < dim(); ++k) {
        const std::string& name = free_[k];
        double& v = values[slot_[k]];
        if (name == "alpha") {
            v = std::exp(log_amin_ + (log_amax_ - log_amin_) * logistic(u[k]));
        } else if (name == "p") {
            v = d + ((1 - d) / 2 - d) * logistic(u[k]);
        } else if (name == "pi_VV") {
            v = d + (1 - 3 * d) * logistic(u[k]);
        } else if (auto partner = row_partner(name)) {
            auto other = free_pos(*partner);
            if (!other) {
                // the partner stays fixed, so the row remainder must keep the floor
                const double fixed = values[*tmpl_.find(*partner)];
                v = d + std::max(0.0, 1 - fixed - 2 * d) * logistic(u[k]);
            } else if (is_first_of_pair(name)) {
                const double m = std::max({u[k], u[*other], 0.0});
                const double ea = std::exp(u[k] - m), eb = std::exp(u[*other] - m), ec = std::exp(-m);
                const double s = ea + eb + ec;
                v = d + (1 - 3 * d) * ea / s;
                values[*tmpl_.find(*partner)] = d + (1 - 3 * d) * eb / s;
            }
        }
    }
    return tmpl_.with_values(values);
}

std::vector<double> Reparametrization::free_values(const ParametrizationScheme& s) const {
    const auto values = s.values();
    std::vector<double> out;
    for (std::size_t k : slot_) out.push_back(values.at(k));
    return out;
}

std::vector<double> Reparametrization::from_scheme(const ParametrizationScheme& s) const {
    const auto values = s.values();
    const double d = delta_;
    std::vector<double> u(dim());
    auto value_of = [&](const std::string& name) { return values[*tmpl_.find(name)]; };
    for (std::size_t k = 0; k < dim(); ++k) {
        const std::string& name = free_[k];
        const double v = values[slot_[k]];
        if (name == "alpha") {
            u[k] = logit((std::log(v) - log_amin_) / (log_amax_ - log_amin_));
        } else if (name == "p") {
            u[k] = logit((v - d) / ((1 - d) / 2 - d));
        } else if (name == "pi_VV") {
            u[k] = logit((v - d) / (1 - 3 * d));
        } else if (auto partner = row_partner(name)) {
            const bool paired = std::find(free_.begin(), free_.end(), *partner) != free_.end();
            if (!paired) {
                u[k] = logit((v - d) / std::max(0.0, 1 - value_of(*partner) - 2 * d));
            } else {
                const double a = (v - d) / (1 - 3 * d);
                const double b = (value_of(*partner) - d) / (1 - 3 * d);
                const double c = 1 - a - b;
                if (!(a > 0 && b > 0 && c > 0)) throw Error(ErrorCode::InvalidArgument, "row outside the floored simplex");
                u[k] = std::log(a / c);
            }
        }
    }
    return u;
}

SimplexResult nelder_mead_max(const std::function<double(std::span<const double>)>& f, std::vector<double> start,
                              double step, double f_tol, double x_tol, std::size_t max_eval) {
    const std::size_t k = start.size();
    // dimension-adaptive coefficients (Gao and Han); the classic 2, 1/2, 1/2 for k <= 2
    const double kd = static_cast<double>(std::max<std::size_t>(k, 2));
    const double expand = 1.0 + 2.0 / kd;
    const double contract = 0.75 - 1.0 / (2.0 * kd);
    const double shrink = 1.0 - 1.0 / kd;
    SimplexResult res;
    // minimize g = -f; non-finite values are +inf
    auto g = [&](const std::vector<double>& p) {
        ++res.evaluations;
        const double v = f(p);
        return std::isfinite(v) ? -v : std::numeric_limits<double>::infinity();
    };
    std::vector<std::vector<double>> pts(k + 1, start);
    for (std::size_t i = 0; i < k; ++i) pts[i + 1][i] += step;
    std::vector<double> vals(k + 1);
    for (std::size_t i = 0; i <= k; ++i) vals[i] = g(pts[i]);

    std::vector<std::size_t> order(k + 1);
    auto sort_simplex = [&] {
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return vals[a] < vals[b]; });
        std::vector<std::vector<double>> p2;
        std::vector<double> v2;
        for (std::size_t i : order) {
            p2.push_back(pts[i]);
            v2.push_back(vals[i]);
        }
        pts.swap(p2);
        vals.swap(v2);
    };
    auto extent = [&] {
        double e = 0.0;
        for (std::size_t i = 1; i <= k; ++i)
            for (std::size_t c = 0; c < k; ++c) e = std::max(e, std::abs(pts[i][c] - pts[0][c]));
        return e;
    };
    auto blend = [&](const std::vector<double>& a, const std::vector<double>& b, double w) {
        std::vector<double> out(k);
        for (std::size_t c = 0; c < k; ++c) out[c] = a[c] + w * (b[c] - a[c]);
        return out;
    };

    sort_simplex();
    while (true) {
        const double spread = vals[k] - vals[0];
        if (std::isfinite(vals[k]) && spread <= f_tol && extent() <= x_tol) {
            res.converged = true;
            break;
        }
        if (res.evaluations >= max_eval) break;

        std::vector<double> centroid(k, 0.0);
        for (std::size_t i = 0; i < k; ++i)
            for (std::size_t c = 0; c < k; ++c) centroid[c] += pts[i][c] / static_cast<double>(k);

        auto xr = blend(centroid, pts[k], -1.0);
        const double fr = g(xr);
        if (fr < vals[0]) {
            auto xe = blend(centroid, pts[k], -expand);
            const double fe = g(xe);
            if (fe < fr) {
                pts[k] = xe;
                vals[k] = fe;
            } else {
                pts[k] = xr;
                vals[k] = fr;
            }
        } else if (fr < vals[k - 1]) {
            pts[k] = xr;
            vals[k] = fr;
        } else {
            const bool outside = fr < vals[k];
            auto xc = outside ? blend(centroid, xr, contract) : blend(centroid, pts[k], contract);
            const double fc = g(xc);
            if (fc < std::min(fr, vals[k])) {
                pts[k] = xc;
                vals[k] = fc;
            } else {
                for (std::size_t i = 1; i <= k; ++i) {
                    pts[i] = blend(pts[0], pts[i], shrink);
                    vals[i] = g(pts[i]);
                }
            }
        }
        sort_simplex();
    }
    res.best = pts[0];
    res.value = std::isfinite(vals[0]) ? -vals[0] : kNegInf;
    res.simplex = pts;
    for (double v : vals) res.simplex_values.push_back(std::isfinite(v) ? -v : kNegInf);
    return res;
}

std::optional<ParametrizationScheme> viterbi_start(std::span<const Symbol> x, std::span<const Symbol> y,
                                                   const Reparametrization& rep, const OptimizerConfig& cfg) {
    const auto& names = rep.free_names();
    const ParametrizationScheme& tmpl = rep.scheme_template();
    auto is_free = [&](const std::string& n) { return std::find(names.begin(), names.end(), n) != names.end(); };
    auto values = tmpl.values();
    auto set = [&](const std::string& n, double v) {
        if (is_free(n)) values[*tmpl.find(n)] = v;
    };
    // neutral point: symmetric in H and V so the stationarity root exists
    set("p", 0.2);
    set("alpha", 0.1);
    set("pi_HH", 0.4);
    set("pi_HV", 0.2);
    set("pi_VV", 0.4);
    set("pi_DH", 0.15);
    set("pi_DV", 0.15);
    const double lo = 2 * cfg.delta, hi = 1 - 2 * cfg.delta;
    auto clamp = [&](double v) { return std::clamp(v, lo, hi); };

    std::optional<ParametrizationScheme> best;
    DpConfig dp;
    if ((x.size() + 1) * (y.size() + 1) > dp.viterbi_cell_cap) return best;
    const auto& f = tmpl.base_f;
    double same = 0.0;
    for (double v : f) same += v * v;

    for (std::size_t round = 0; round < cfg.viterbi_rounds; ++round) {
        const ParametrizationScheme current = tmpl.with_values(values);
        std::optional<ModelParams> theta;
        try {
            theta = theta_from_beta(current);
        } catch (const Error&) {
            break;
        }
        best = current;
        const auto path = viterbi(*theta, x, y, dp).path;
        if (path.empty()) break;
        double c[3][3] = {}, occ[3] = {};
        double diag = 0.0, mismatch = 0.0;
        std::size_t i = 0, j = 0;
        for (std::size_t s = 0; s < path.size(); ++s) {
            const std::size_t a = idx(path[s]);
            occ[a] += 1;
            if (s + 1 < path.size()) c[a][idx(path[s + 1])] += 1;
            if (path[s] == State::D) {
                diag += 1;
                if (x[i] != y[j]) mismatch += 1;
            }
            i += static_cast<std::size_t>(step(path[s]).dx);
            j += static_cast<std::size_t>(step(path[s]).dy);
        }
        auto freq = [&](std::size_t a, std::size_t b, double fallback) {
            const double row = c[a][0] + c[a][1] + c[a][2];
            return row > 0 ? clamp(c[a][b] / row) : fallback;
        };
        const double len = static_cast<double>(path.size());
        if (is_free("p")) values[*tmpl.find("p")] = std::clamp((occ[0] + occ[1]) / (2 * len), lo, 0.5 - lo);
        for (auto [name, a, b] : {std::tuple{"pi_HH", 0, 0}, {"pi_HV", 0, 1}, {"pi_VV", 1, 1}, {"pi_DH", 2, 0},
                                  {"pi_DV", 2, 1}})
            if (is_free(name)) values[*tmpl.find(name)] = freq(a, b, values[*tmpl.find(name)]);
        if (is_free("alpha") && diag > 0 && same < 1) {
            const double sub = std::clamp(mismatch / diag / (1 - same), 1e-6, 0.99);
            values[*tmpl.find("alpha")] = std::clamp(-std::log1p(-sub), cfg.alpha_min * 1.01, cfg.alpha_max * 0.99);
        }
        try {
            theta_from_beta(tmpl.with_values(values), ParamFloor(cfg.delta));
        } catch (const Error&) {
            break;
        }
        best = tmpl.with_values(values);
    }
    return best;
}

EstimateReport mle(std::span<const Symbol> x, std::span<const Symbol> y, const ParametrizationScheme& scheme_template,
                   const std::vector<std::string>& free, const OptimizerConfig& cfg, std::size_t t) {
    if (x.empty() && y.empty()) throw Error(ErrorCode::EmptyInput, "both sequences are empty");
    const Reparametrization rep(scheme_template, free, cfg);
    const std::size_t k = rep.dim();
    const double norm = static_cast<double>(t > 0 ? t : x.size() + y.size());
    const ParamFloor floor(cfg.delta);

    DpWorkspace ws;
    std::size_t evaluations = 0;
    double best_value = kNegInf;
    std::vector<double> best_u;
    auto objective = [&](std::span<const double> u) {
        ++evaluations;
        double v = kNegInf;
        const bool inside = std::all_of(u.begin(), u.end(), [&](double c) { return std::abs(c) <= cfg.coordinate_bound; });
        if (inside) try {
            const ModelParams theta = theta_from_beta(rep.to_scheme(u), floor);
            v = log_q(theta, x, y, &ws, cfg.precision).value / norm;
        } catch (const Error& e) {
            if (e.code() != ErrorCode::NoStationarySolution && e.code() != ErrorCode::FloorViolation) throw;
        }
        if (v > best_value) {
            best_value = v;
            best_u.assign(u.begin(), u.end());
        }
        return v;
    };

    // coarse lattice prescreen
    const std::size_t per_axis = cfg.lattice_per_axis;
    double total_d = std::pow(static_cast<double>(per_axis), static_cast<double>(k));
    const std::size_t total = total_d > 1e15 ? std::size_t(1e15) : static_cast<std::size_t>(total_d);
    const std::size_t count = std::min(total, cfg.max_lattice);
    std::vector<std::pair<double, std::vector<double>>> lattice;
    for (std::size_t s = 0; s < count; ++s) {
        std::size_t code = count == total ? s : static_cast<std::size_t>(static_cast<double>(s) * total_d / count);
        std::vector<double> u(k);
        for (std::size_t c = 0; c < k; ++c) {
            const std::size_t level = code % per_axis;
            code /= per_axis;
            u[c] = per_axis == 1 ? 0.0
                                 : -cfg.lattice_spread + 2 * cfg.lattice_spread * static_cast<double>(level) /
                                                             static_cast<double>(per_axis - 1);
        }
        const double v = objective(u);
        lattice.emplace_back(v, std::move(u));
    }
    if (cfg.viterbi_start) {
        if (auto start = viterbi_start(x, y, rep, cfg)) {
            try {
                auto u = rep.from_scheme(*start);
                for (double& c : u) c = std::clamp(c, -cfg.coordinate_bound, cfg.coordinate_bound);
                const double v = objective(u);
                lattice.emplace_back(v, std::move(u));
            } catch (const Error&) {
                // outside the reparametrized range; the lattice still applies
            }
        }
    }
    if (cfg.template_start) {
        auto u = rep.from_scheme(scheme_template);
        const double v = objective(u);
        lattice.emplace_back(v, std::move(u));
    }
    std::stable_sort(lattice.begin(), lattice.end(), [](const auto& a, const auto& b) { return a.first > b.first; });

    EstimateReport report;
    report.free_names = rep.free_names();
    report.normalizer = norm;
    std::size_t winner = 0;
    const SimplexResult* winning = nullptr;
    std::vector<SimplexResult> runs;
    for (const auto& [v, u] : lattice) {
        if (runs.size() >= cfg.multistarts || !std::isfinite(v)) break;
        // restart from the converged vertex with a fresh simplex until it stops
        // paying off; a collapsed simplex can stall on a ridge
        SimplexResult run = nelder_mead_max(objective, u, cfg.initial_step, cfg.tolerance, cfg.x_tolerance,
                                          cfg.max_evaluations);
        for (std::size_t restart = 0; restart < cfg.restarts && run.converged; ++restart) {
            const std::size_t used = run.evaluations;
            if (used >= cfg.max_evaluations) break;
            SimplexResult again = nelder_mead_max(objective, run.best, cfg.initial_step, cfg.tolerance, cfg.x_tolerance,
                                                  cfg.max_evaluations - used);
            again.evaluations += used;
            const bool improved = again.value > run.value + cfg.tolerance;
            run = std::move(again);
            if (!improved) break;
        }
        runs.push_back(std::move(run));
        const auto& r = runs.back();
        StartTrace tr;
        tr.start = rep.free_values(rep.to_scheme(u));
        tr.end = rep.free_values(rep.to_scheme(r.best));
        tr.criterion_value = r.value;
        tr.evaluations = r.evaluations;
        tr.converged = r.converged;
        report.trace.push_back(std::move(tr));
    }
    if (!std::isfinite(best_value))
        throw Error(ErrorCode::NotConverged, "no start reached a finite likelihood");
    for (std::size_t i = 0; i < runs.size(); ++i)
        if (!winning || runs[i].value > winning->value) {
            winning = &runs[i];
            winner = i;
        }

    report.beta_hat = rep.to_scheme(best_u);
    report.free_values = rep.free_values(report.beta_hat);
    report.criterion_value = cfg.precision == Precision::Double
                                 ? best_value
                                 : log_q(theta_from_beta(report.beta_hat), x, y, &ws).value / norm;
    report.evaluations = evaluations;
    report.converged = winning && report.trace[winner].converged;

    // α flat across a final simplex that is still stretched along α
    const std::size_t ai = rep.alpha_index();
    if (winning && ai < k && k >= 2 && std::holds_alternative<IidScheme>(scheme_template.variant)) {
        const auto& sv = winning->simplex_values;
        const double range = *std::max_element(sv.begin(), sv.end()) - *std::min_element(sv.begin(), sv.end());
        double alpha_extent = 0.0, other_extent = 0.0;
        for (const auto& p : winning->simplex)
            for (std::size_t c = 0; c < k; ++c) {
                const double e = std::abs(p[c] - winning->simplex[0][c]);
                (c == ai ? alpha_extent : other_extent) = std::max(c == ai ? alpha_extent : other_extent, e);
            }
        report.weakly_identified = range < 10 * cfg.tolerance && alpha_extent > other_extent;
    }
    return report;
}

std::size_t PosteriorGrid::mode() const {
    return static_cast<std::size_t>(std::max_element(posterior.begin(), posterior.end()) - posterior.begin());
}

PosteriorGrid posterior_from_loglik(std::vector<ParametrizationScheme> grid, std::vector<double> log_likelihood,
                                    std::vector<double> prior) {
    if (grid.empty()) throw Error(ErrorCode::InvalidArgument, "posterior grid is empty");
    if (log_likelihood.size() != grid.size()) throw Error(ErrorCode::InvalidArgument, "one log-likelihood per grid point");
    if (prior.empty()) prior.assign(grid.size(), 1.0 / static_cast<double>(grid.size()));
    if (prior.size() != grid.size()) throw Error(ErrorCode::InvalidArgument, "one prior mass per grid point");
    double total = 0.0;
    for (double p : prior) {
        if (!(p >= 0)) throw Error(ErrorCode::InvalidArgument, "prior masses must be nonnegative");
        total += p;
    }
    if (std::abs(total - 1.0) > 1e-12) throw Error(ErrorCode::InvalidArgument, "prior masses must sum to 1");

    PosteriorGrid out;
    out.points = std::move(grid);
    out.prior = std::move(prior);
    out.log_likelihood = std::move(log_likelihood);
    std::vector<double> lw(out.points.size());
    double mx = kNegInf;
    for (std::size_t i = 0; i < lw.size(); ++i) {
        lw[i] = out.prior[i] > 0 ? std::log(out.prior[i]) + out.log_likelihood[i] : kNegInf;
        mx = std::max(mx, lw[i]);
    }
    if (!std::isfinite(mx)) throw Error(ErrorCode::InvalidArgument, "every grid point has zero posterior weight");
    double s = 0.0;
    for (double v : lw) s += std::exp(v - mx);
    out.log_normalizer = mx + std::log(s);
    // relative to the max, not logZ: v - logZ loses digits when |logZ| is large
    for (double v : lw) out.posterior.push_back(std::exp(v - mx) / s);
    return out;
}

PosteriorGrid posterior_grid(std::span<const Symbol> x, std::span<const Symbol> y,
                             const std::vector<ParametrizationScheme>& grid, std::vector<double> prior) {
    if (x.empty() && y.empty()) throw Error(ErrorCode::EmptyInput, "both sequences are empty");
    DpWorkspace ws;
    std::vector<double> ll;
    for (const auto& s : grid) ll.push_back(log_q(theta_from_beta(s), x, y, &ws).value);
    return posterior_from_loglik(grid, std::move(ll), std::move(prior));
}

std::vector<ParametrizationScheme> axis_grid(const ParametrizationScheme& base, const std::string& name, double lo,
                                             double hi, std::size_t steps) {
    auto pos = base.find(name);
    if (!pos) throw Error(ErrorCode::InvalidArgument, "unknown parameter '" + name + "'");
    if (steps == 0) throw Error(ErrorCode::InvalidArgument, "grid needs at least one point");
    std::vector<ParametrizationScheme> out;
    auto values = base.values();
    for (std::size_t i = 0; i < steps; ++i) {
        values[*pos] = steps == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(steps - 1);
        out.push_back(base.with_values(values));
    }
    return out;
}

}  // namespace phmm
