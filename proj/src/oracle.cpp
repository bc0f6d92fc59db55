#include "phmm/oracle.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "phmm/error.hpp"

namespace phmm::oracle {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void extend(std::size_t n, std::size_t m, Path& prefix, std::vector<Path>& out) {
    if (n == 0 && m == 0) {
        out.push_back(prefix);
        return;
    }
    if (n >= 1) {
        prefix.push_back(State::H);
        extend(n - 1, m, prefix, out);
        prefix.pop_back();
    }
    if (m >= 1) {
        prefix.push_back(State::V);
        extend(n, m - 1, prefix, out);
        prefix.pop_back();
    }
    if (n >= 1 && m >= 1) {
        prefix.push_back(State::D);
        extend(n - 1, m - 1, prefix, out);
        prefix.pop_back();
    }
}

// Plain product, no logs until the end.
double path_probability(const ModelParams& theta, const Path& path, std::span<const Symbol> x,
                        std::span<const Symbol> y) {
    const auto& e = theta.emissions();
    double p = theta.mu(path.front());
    std::size_t i = 0, j = 0;
    for (std::size_t s = 0; s < path.size(); ++s) {
        if (s > 0) p *= theta.trans(path[s - 1], path[s]);
        if (path[s] == State::H) p *= e.f[x[i++]];
        else if (path[s] == State::V) p *= e.g[y[j++]];
        else p *= e.joint(x[i++], y[j++]);
    }
    return p;
}

double walk_probability(const ModelParams& theta, const Path& path) {
    double p = theta.mu(path.front());
    for (std::size_t s = 1; s < path.size(); ++s) p *= theta.trans(path[s - 1], path[s]);
    return p;
}

double to_log(double p) { return p > 0.0 ? std::log(p) : kNegInf; }

}  // namespace

std::uint64_t delannoy(std::size_t n, std::size_t m) {
    std::vector<std::vector<std::uint64_t>> d(n + 1, std::vector<std::uint64_t>(m + 1, 1));
    for (std::size_t i = 1; i <= n; ++i)
        for (std::size_t j = 1; j <= m; ++j) d[i][j] = d[i - 1][j] + d[i][j - 1] + d[i - 1][j - 1];
    return d[n][m];
}

PathSet enumerate_paths(std::size_t n, std::size_t m, std::uint64_t limit) {
    if (n + m == 0) throw Error(ErrorCode::EmptyInput, "no paths end at the origin");
    if (delannoy(n, m) > limit)
        throw Error(ErrorCode::TooLarge, "E_{" + std::to_string(n) + "," + std::to_string(m) + "} exceeds the enumeration limit");
    PathSet set{n, m, {}};
    Path prefix;
    extend(n, m, prefix, set.paths);
    return set;
}

double brute_log_q(const ModelParams& theta, std::span<const Symbol> x, std::span<const Symbol> y) {
    double total = 0.0;
    for (const auto& path : enumerate_paths(x.size(), y.size()).paths) total += path_probability(theta, path, x, y);
    return to_log(total);
}

double brute_log_l(const ModelParams& theta, std::span<const Symbol> x, std::span<const Symbol> y, std::size_t t) {
    const std::size_t n = x.size(), m = y.size();
    if (t < std::max(n, m) || t > n + m) throw Error(ErrorCode::InvalidLength, "t outside [n v m, n + m]");
    double total = 0.0;
    for (const auto& path : enumerate_paths(n, m).paths)
        if (path.size() == t) total += path_probability(theta, path, x, y);
    return to_log(total);
}

double brute_max_log_path(const ModelParams& theta, std::span<const Symbol> x, std::span<const Symbol> y) {
    double best = 0.0;
    for (const auto& path : enumerate_paths(x.size(), y.size()).paths)
        best = std::max(best, path_probability(theta, path, x, y));
    return to_log(best);
}

double brute_prob_endpoint(const ModelParams& theta, std::size_t n, std::size_t m, std::size_t t) {
    double total = 0.0;
    for (const auto& path : enumerate_paths(n, m).paths)
        if (path.size() == t) total += walk_probability(theta, path);
    return total;
}

AbsorbingResult brute_marginal_absorbing(const ModelParams& theta, std::span<const Symbol> x,
                                         std::span<const Symbol> y, double tol, std::size_t max_steps) {
    const std::size_t n = x.size(), m = y.size();
    if (n + m == 0) throw Error(ErrorCode::EmptyInput, "both prefixes empty");
    const auto& e = theta.emissions();
    const auto hx = e.h_x();
    const auto hy = e.h_y();

    // factor for entering state s at clamped position (i, j) -> new position
    auto factor = [&](State s, std::size_t i, std::size_t j) {
        const bool xi = i < n;  // next x symbol still observed
        const bool yj = j < m;
        switch (s) {
            case State::H: return xi ? e.f[x[i]] : 1.0;
            case State::V: return yj ? e.g[y[j]] : 1.0;
            case State::D:
                if (xi && yj) return e.joint(x[i], y[j]);
                if (xi) return hx[x[i]];
                if (yj) return hy[y[j]];
                return 1.0;
        }
        return 0.0;
    };
    auto advance = [&](State s, std::size_t& i, std::size_t& j) {
        i = std::min(n, i + static_cast<std::size_t>(step(s).dx));
        j = std::min(m, j + static_cast<std::size_t>(step(s).dy));
    };

    // mass[(i * (m + 1) + j) * 3 + s] after the current step
    const std::size_t cells = (n + 1) * (m + 1) * 3;
    std::vector<double> mass(cells, 0.0), next(cells, 0.0);
    double absorbed = 0.0;

    for (State s : kStates) {
        std::size_t i = 0, j = 0;
        const double p = theta.mu(s) * factor(s, i, j);
        advance(s, i, j);
        if (i == n && j == m) absorbed += p;
        else mass[(i * (m + 1) + j) * 3 + idx(s)] += p;
    }

    std::size_t steps = 1;
    while (true) {
        double pending = 0.0;
        for (double v : mass) pending += v;
        if (pending <= tol) return {to_log(absorbed), pending, steps};
        if (steps >= max_steps) throw Error(ErrorCode::NotConverged, "absorbing oracle hit its step cap");

        std::fill(next.begin(), next.end(), 0.0);
        for (std::size_t i0 = 0; i0 <= n; ++i0)
            for (std::size_t j0 = 0; j0 <= m; ++j0)
                for (State from : kStates) {
                    const double v = mass[(i0 * (m + 1) + j0) * 3 + idx(from)];
                    if (v == 0.0) continue;
                    for (State to : kStates) {
                        std::size_t i = i0, j = j0;
                        const double p = v * theta.trans(from, to) * factor(to, i, j);
                        advance(to, i, j);
                        if (i == n && j == m) absorbed += p;
                        else next[(i * (m + 1) + j) * 3 + idx(to)] += p;
                    }
                }
        std::swap(mass, next);
        ++steps;
    }
}

}  // namespace phmm::oracle
