#include "phmm/dp.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <type_traits>

#include "phmm/error.hpp"

namespace phmm {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
// Values below this, relative to the running diagonal maximum, are dropped
// so the kernels never touch subnormals.
constexpr double kTiny = 1e-290;

inline double flush(double v) { return v < kTiny ? 0.0 : v; }

inline double logsumexp3(double a, double b, double c) {
    const double mx = std::max({a, b, c});
    if (mx == kNegInf) return kNegInf;
    return mx + std::log(std::exp(a - mx) + std::exp(b - mx) + std::exp(c - mx));
}

inline double logsumexp2(double a, double b) {
    const double mx = std::max(a, b);
    if (mx == kNegInf) return kNegInf;
    return mx + std::log(std::exp(a - mx) + std::exp(b - mx));
}

inline double safe_log(double p) { return p > 0.0 ? std::log(p) : kNegInf; }

void require_nonempty(std::size_t n, std::size_t m) {
    if (n == 0 && m == 0) throw Error(ErrorCode::EmptyInput, "both sequences are empty");
}

// Per-cell emission probabilities for the observed pair.
struct ObservedEmissions {
    std::span<const Symbol> x;
    std::span<const Symbol> y;
    const EmissionTables& e;

    double h_step(std::size_t i) const { return e.f[x[i - 1]]; }
    double v_step(std::size_t j) const { return e.g[y[j - 1]]; }
    double d_step(std::size_t i, std::size_t j) const { return e.joint(x[i - 1], y[j - 1]); }
};

struct Transitions {
    // t[from][to]
    Matrix3 t;
    Stationary mu;

    explicit Transitions(const ModelParams& theta) : t(theta.pi().entries()), mu(theta.mu()) {}
};

// Emission factors laid out for the forward kernel: fx[i] = f(x_i),
// gy[j] = g(y_j), and h(x_i, y_j) = joint[xrow[i] + ycol[j]] (1-based).
struct EmissionArrays {
    std::vector<double> fx, gy, joint;
    std::vector<std::uint32_t> xrow, ycol;
    // gy and ycol reversed (index m - j), so that walking i up a diagonal
    // walks these arrays forward too
    std::vector<double> gy_rev;
    std::vector<std::uint32_t> ycol_rev;

    // When h(a, b) = s f(a) g(b) + [a = b] d(a), as for substitution models,
    // the kernel evaluates that form instead of a table lookup, which keeps
    // its inner loop free of gathers. xs and ys_rev hold symbols as doubles.
    bool split = false;
    double s = 0.0;
    std::vector<double> dx, xs, ys_rev;

    void reverse_y() {
        gy_rev.assign(gy.rbegin(), gy.rend());
        ycol_rev.assign(ycol.rbegin(), ycol.rend());
    }

    void try_split(const EmissionTables& e, std::span<const Symbol> x, std::span<const Symbol> y) {
        const std::size_t k = e.alphabet_size();
        double scale = 0.0;
        for (std::size_t a = 0; a < k && scale == 0.0; ++a)
            for (std::size_t b = 0; b < k; ++b)
                if (a != b && e.f[a] * e.g[b] > 0) {
                    scale = e.joint(static_cast<Symbol>(a), static_cast<Symbol>(b)) / (e.f[a] * e.g[b]);
                    break;
                }
        for (std::size_t a = 0; a < k; ++a)
            for (std::size_t b = 0; b < k; ++b) {
                const double h = e.joint(static_cast<Symbol>(a), static_cast<Symbol>(b));
                if (a != b && std::abs(h - scale * e.f[a] * e.g[b]) > 1e-14 * h) return;
            }
        split = true;
        s = scale;
        dx.assign(x.size() + 1, 0.0);
        xs.assign(x.size() + 1, -1.0);
        ys_rev.assign(y.size() + 1, -2.0);
        for (std::size_t i = 1; i <= x.size(); ++i) {
            const Symbol a = x[i - 1];
            dx[i] = e.joint(a, a) - scale * e.f[a] * e.g[a];
            xs[i] = a;
        }
        for (std::size_t j = 1; j <= y.size(); ++j) ys_rev[y.size() - j] = y[j - 1];
    }

    EmissionArrays(const EmissionTables& e, std::span<const Symbol> x, std::span<const Symbol> y)
        : fx(x.size() + 1, 0.0), gy(y.size() + 1, 0.0), joint(e.h), xrow(x.size() + 1, 0), ycol(y.size() + 1, 0) {
        const auto k = static_cast<std::uint32_t>(e.alphabet_size());
        for (std::size_t i = 1; i <= x.size(); ++i) {
            fx[i] = e.f[x[i - 1]];
            xrow[i] = x[i - 1] * k;
        }
        for (std::size_t j = 1; j <= y.size(); ++j) {
            gy[j] = e.g[y[j - 1]];
            ycol[j] = y[j - 1];
        }
        reverse_y();
        try_split(e, x, y);
    }

    // every factor equal to one: the walk alone
    EmissionArrays(std::size_t n, std::size_t m)
        : fx(n + 1, 1.0), gy(m + 1, 1.0), joint{1.0}, xrow(n + 1, 0), ycol(m + 1, 0) {
        reverse_y();
    }
};

// Kernel-side copies of the emission factors in the working precision. y-side
// arrays are reversed (index m - j) so walking i up a diagonal walks them
// forward too.
template <typename Real>
struct KernelArrays {
    std::vector<Real> fx, gy, joint, xs, ys, dx;
    std::vector<std::uint32_t> xrow, ycol;

    explicit KernelArrays(const EmissionArrays& em)
        : fx(em.fx.begin(), em.fx.end()),
          gy(em.gy_rev.begin(), em.gy_rev.end()),
          joint(em.joint.begin(), em.joint.end()),
          xs(em.xs.begin(), em.xs.end()),
          ys(em.ys_rev.begin(), em.ys_rev.end()),
          dx(em.dx.begin(), em.dx.end()),
          xrow(em.xrow),
          ycol(em.ycol_rev) {}
};

template <typename Real>
std::vector<Real>& kernel_buffer(DpWorkspace& ws, std::size_t size) {
    if constexpr (std::is_same_v<Real, float>) {
        return ws.float_buffer(size);
    } else {
        return ws.buffer(0, size);
    }
}

// Forward pass over anti-diagonals k = i + j. Each diagonal is stored
// relative to its own log scale, chosen from the previous diagonal's maximum
// so that no separate rescaling pass is needed; the returned number is the log
// of the summed terminal cell. Scales are always accumulated in double.
template <bool Split, typename Real>
double forward_kernel(const Transitions& tr, std::size_t n, std::size_t m, const EmissionArrays& em, DpWorkspace& ws) {
    // relative cutoff well above the type's subnormal range
    constexpr Real tiny = std::is_same_v<Real, float> ? Real(1e-30) : Real(kTiny);
    const KernelArrays<Real> ka(em);
    // diagonal slot s, state q lives at plane 3 * s + q, indexed by i
    const std::size_t w = n + 1;
    auto& buf = kernel_buffer<Real>(ws, 9 * w);
    auto plane = [&](std::size_t k, std::size_t q) { return buf.data() + (3 * (k % 3) + q) * w; };
    const auto& t = tr.t;
    const Real* __restrict fx = ka.fx.data();
    const Real* __restrict joint = ka.joint.data();
    const std::uint32_t* __restrict xrow = ka.xrow.data();
    const Real* __restrict xs = ka.xs.data();
    const Real* __restrict dx = ka.dx.data();
    const Real sub = static_cast<Real>(em.s);
    double scale1 = 0.0;  // diagonal k - 1
    double scale2 = 0.0;  // diagonal k - 2
    double max1 = 1.0;    // largest stored value on diagonal k - 1

    for (std::size_t k = 1; k <= n + m; ++k) {
        Real* __restrict ch = plane(k, 0);
        Real* __restrict cv = plane(k, 1);
        Real* __restrict cd = plane(k, 2);
        const Real* __restrict h1 = plane(k + 2, 0);
        const Real* __restrict v1 = plane(k + 2, 1);
        const Real* __restrict d1 = plane(k + 2, 2);
        const Real* __restrict h2 = plane(k + 1, 0);
        const Real* __restrict v2 = plane(k + 1, 1);
        const Real* __restrict d2 = plane(k + 1, 2);
        const std::size_t lo = k > m ? k - m : 0;
        const std::size_t hi = std::min(n, k);
        // y-side factors for cell i of this diagonal sit at offset i
        const Real* __restrict gy = ka.gy.data() + (m - k);
        const std::uint32_t* __restrict ycol = ka.ycol.data() + (m - k);
        const Real* __restrict ys = Split ? ka.ys.data() + (m - k) : nullptr;

        const double scale = max1 > 0.0 ? scale1 + std::log(max1) : scale1;
        const double r1 = std::exp(scale1 - scale);
        const double r2 = std::exp(scale2 - scale);
        // transition weights with the diagonal rescaling folded in
        const Real hh = Real(t[0][0] * r1), vh = Real(t[1][0] * r1), dh = Real(t[2][0] * r1);
        const Real hv = Real(t[0][1] * r1), vv = Real(t[1][1] * r1), dv = Real(t[2][1] * r1);
        const Real hd = Real(t[0][2] * r2), vd = Real(t[1][2] * r2), dd = Real(t[2][2] * r2);
        const Real mu_h = Real(tr.mu[0] * r1), mu_v = Real(tr.mu[1] * r1), mu_d = Real(tr.mu[2] * r2);
        Real mx = 0;

        auto general = [&](std::size_t i) {
            const std::size_t j = k - i;
            Real a = 0, b = 0, c = 0;
            if (i >= 1) a = fx[i] * (k == 1 ? mu_h : h1[i - 1] * hh + v1[i - 1] * vh + d1[i - 1] * dh);
            if (j >= 1) b = gy[i] * (k == 1 ? mu_v : h1[i] * hv + v1[i] * vv + d1[i] * dv);
            if (i >= 1 && j >= 1)
                c = joint[xrow[i] + ycol[i]] * (k == 2 ? mu_d : h2[i - 1] * hd + v2[i - 1] * vd + d2[i - 1] * dd);
            ch[i] = a < tiny ? Real(0) : a;
            cv[i] = b < tiny ? Real(0) : b;
            cd[i] = c < tiny ? Real(0) : c;
            mx = std::max({mx, a, b, c});
        };

        // interior cells have all three predecessors on real diagonals
        const std::size_t in_lo = std::max<std::size_t>(lo, 1);
        const std::size_t in_hi = std::min(hi, k - 1);
        if (k <= 2 || in_lo > in_hi) {
            for (std::size_t i = lo; i <= hi; ++i) general(i);
        } else {
            if (lo < in_lo) general(lo);
            Real imx = 0;
#pragma omp simd reduction(max : imx)
            for (std::size_t i = in_lo; i <= in_hi; ++i) {
                const Real a = fx[i] * (h1[i - 1] * hh + v1[i - 1] * vh + d1[i - 1] * dh);
                const Real b = gy[i] * (h1[i] * hv + v1[i] * vv + d1[i] * dv);
                Real hxy;
                if constexpr (Split) {
                    const Real d = dx[i];
                    hxy = fx[i] * gy[i] * sub + (xs[i] == ys[i] ? d : Real(0));
                } else {
                    hxy = joint[xrow[i] + ycol[i]];
                }
                const Real c = hxy * (h2[i - 1] * hd + v2[i - 1] * vd + d2[i - 1] * dd);
                ch[i] = a < tiny ? Real(0) : a;
                cv[i] = b < tiny ? Real(0) : b;
                cd[i] = c < tiny ? Real(0) : c;
                const Real local = a > b ? a : b;
                imx = imx > local ? imx : local;
                imx = imx > c ? imx : c;
            }
            mx = std::max(mx, imx);
            if (hi > in_hi) general(hi);
        }
        scale2 = scale1;
        scale1 = scale;
        max1 = static_cast<double>(mx);
    }

    const std::size_t last = (n + m) % 3;
    const double total = static_cast<double>(buf[(3 * last) * w + n]) + static_cast<double>(buf[(3 * last + 1) * w + n]) +
                         static_cast<double>(buf[(3 * last + 2) * w + n]);
    return total > 0.0 ? scale1 + std::log(total) : kNegInf;
}

double forward_antidiagonal(const Transitions& tr, std::size_t n, std::size_t m, const EmissionArrays& em,
                            DpWorkspace& ws, Precision precision = Precision::Double) {
    if (precision == Precision::Mixed)
        return em.split ? forward_kernel<true, float>(tr, n, m, em, ws) : forward_kernel<false, float>(tr, n, m, em, ws);
    return em.split ? forward_kernel<true, double>(tr, n, m, em, ws) : forward_kernel<false, double>(tr, n, m, em, ws);
}

// Same traversal with an extra coordinate: the number of diagonal steps taken
// so far. Only cells that can still finish with exactly `diag_steps` diagonal
// moves are filled.
double forward_fixed_length(const Transitions& tr, const ObservedEmissions& emit, std::size_t n, std::size_t m,
                            std::size_t diag_steps, DpWorkspace& ws) {
    const std::size_t dw = diag_steps + 1;
    const std::size_t w = (n + 1) * dw;  // per state, per diagonal
    auto& buf = ws.buffer(1, 9 * w);
    std::fill(buf.begin(), buf.end(), 0.0);
    const auto& t = tr.t;
    double scale1 = 0.0, scale2 = 0.0;

    auto at = [dw](std::size_t i, std::size_t c) { return i * dw + c; };

    for (std::size_t k = 1; k <= n + m; ++k) {
        double* cur = buf.data() + 3 * w * (k % 3);
        const double* p1 = buf.data() + 3 * w * ((k + 2) % 3);
        const double* p2 = buf.data() + 3 * w * ((k + 1) % 3);
        const std::size_t lo = k > m ? k - m : 0;
        const std::size_t hi = std::min(n, k);
        const double base = std::max(scale1, scale2);
        const double r1 = std::exp(scale1 - base);
        const double r2 = std::exp(scale2 - base);
        double mx = 0.0;

        for (std::size_t i = lo; i <= hi; ++i) {
            const std::size_t j = k - i;
            const std::size_t c_max = std::min({diag_steps, i, j});
            const std::size_t remaining = std::min(n - i, m - j);
            const std::size_t c_min = diag_steps > remaining ? diag_steps - remaining : 0;
            for (std::size_t s = 0; s < 3; ++s)
                std::fill_n(cur + s * w + at(i, 0), dw, 0.0);
            if (c_min > c_max) continue;

            const double eh = i >= 1 ? emit.h_step(i) : 0.0;
            const double ev = j >= 1 ? emit.v_step(j) : 0.0;
            const double ed = (i >= 1 && j >= 1) ? emit.d_step(i, j) : 0.0;

            for (std::size_t c = c_min; c <= c_max; ++c) {
                double vh = 0.0, vv = 0.0, vd = 0.0;
                if (i >= 1) {
                    const std::size_t a = at(i - 1, c);
                    const double in = (k == 1) ? (c == 0 ? tr.mu[0] : 0.0)
                                               : p1[a] * t[0][0] + p1[w + a] * t[1][0] + p1[2 * w + a] * t[2][0];
                    vh = flush(eh * in * r1);
                }
                if (j >= 1) {
                    const std::size_t a = at(i, c);
                    const double in = (k == 1) ? (c == 0 ? tr.mu[1] : 0.0)
                                               : p1[a] * t[0][1] + p1[w + a] * t[1][1] + p1[2 * w + a] * t[2][1];
                    vv = flush(ev * in * r1);
                }
                if (i >= 1 && j >= 1 && c >= 1) {
                    const std::size_t a = at(i - 1, c - 1);
                    const double in = (k == 2) ? (c == 1 ? tr.mu[2] : 0.0)
                                               : p2[a] * t[0][2] + p2[w + a] * t[1][2] + p2[2 * w + a] * t[2][2];
                    vd = flush(ed * in * r2);
                }
                const std::size_t a = at(i, c);
                cur[a] = vh;
                cur[w + a] = vv;
                cur[2 * w + a] = vd;
                mx = std::max({mx, vh, vv, vd});
            }
        }

        double scale = base;
        if (mx > 0.0) {
            const double inv = 1.0 / mx;
            for (std::size_t s = 0; s < 3; ++s)
                for (std::size_t i = lo; i <= hi; ++i)
                    for (std::size_t c = 0; c < dw; ++c) cur[s * w + at(i, c)] *= inv;
            scale = base + std::log(mx);
        }
        scale2 = scale1;
        scale1 = scale;
    }

    const double* last = buf.data() + 3 * w * ((n + m) % 3);
    const std::size_t a = at(n, diag_steps);
    const double total = last[a] + last[w + a] + last[2 * w + a];
    return total > 0.0 ? scale1 + std::log(total) : kNegInf;
}

}  // namespace

const char* to_string(Criterion c) {
    switch (c) {
        case Criterion::Q: return "q";
        case Criterion::FixedT: return "fixed-t";
        case Criterion::Marginal: return "marginal";
    }
    return "?";
}

bool LogLikResult::zero_probability() const { return value == kNegInf; }

std::vector<double>& DpWorkspace::buffer(std::size_t slot, std::size_t size) {
    if (buffers_.size() <= slot) buffers_.resize(slot + 1);
    auto& b = buffers_[slot];
    if (b.size() < size) b.resize(size);
    return b;
}

std::vector<float>& DpWorkspace::float_buffer(std::size_t size) {
    if (float_buffer_.size() < size) float_buffer_.resize(size);
    return float_buffer_;
}

LogLikResult log_q(const ModelParams& theta, std::span<const Symbol> x, std::span<const Symbol> y,
                   DpWorkspace* ws, Precision precision) {
    require_nonempty(x.size(), y.size());
    DpWorkspace local;
    DpWorkspace& work = ws ? *ws : local;
    const EmissionArrays em(theta.emissions(), x, y);
    return {forward_antidiagonal(Transitions(theta), x.size(), y.size(), em, work, precision), Criterion::Q, x.size(),
            y.size(), std::nullopt};
}

LogLikResult log_q_full(const ModelParams& theta, std::span<const Symbol> x, std::span<const Symbol> y) {
    const std::size_t n = x.size(), m = y.size();
    require_nonempty(n, m);
    const auto& e = theta.emissions();
    std::array<std::array<double, 3>, 3> lt{};
    for (State a : kStates)
        for (State b : kStates) lt[idx(a)][idx(b)] = safe_log(theta.trans(a, b));
    std::array<double, 3> lmu{safe_log(theta.mu()[0]), safe_log(theta.mu()[1]), safe_log(theta.mu()[2])};

    // f[(i * (m + 1) + j) * 3 + state]
    std::vector<double> fwd((n + 1) * (m + 1) * 3, kNegInf);
    auto cell = [m](std::size_t i, std::size_t j) { return (i * (m + 1) + j) * 3; };
    auto incoming = [&](std::size_t i, std::size_t j, std::size_t to) {
        if (i == 0 && j == 0) return lmu[to];
        const double* p = &fwd[cell(i, j)];
        return logsumexp3(p[0] + lt[0][to], p[1] + lt[1][to], p[2] + lt[2][to]);
    };
    for (std::size_t i = 0; i <= n; ++i) {
        for (std::size_t j = 0; j <= m; ++j) {
            if (i == 0 && j == 0) continue;
            double* c = &fwd[cell(i, j)];
            if (i >= 1) c[0] = safe_log(e.f[x[i - 1]]) + incoming(i - 1, j, 0);
            if (j >= 1) c[1] = safe_log(e.g[y[j - 1]]) + incoming(i, j - 1, 1);
            if (i >= 1 && j >= 1) c[2] = safe_log(e.joint(x[i - 1], y[j - 1])) + incoming(i - 1, j - 1, 2);
        }
    }
    const double* last = &fwd[cell(n, m)];
    return {logsumexp3(last[0], last[1], last[2]), Criterion::Q, n, m, std::nullopt};
}

LogLikResult log_l_fixed_t(const ModelParams& theta, std::span<const Symbol> x, std::span<const Symbol> y,
                           std::size_t t, DpWorkspace* ws) {
    const std::size_t n = x.size(), m = y.size();
    require_nonempty(n, m);
    if (t < std::max(n, m) || t > n + m)
        throw Error(ErrorCode::InvalidLength, "t = " + std::to_string(t) + " outside [" +
                                                  std::to_string(std::max(n, m)) + ", " + std::to_string(n + m) + "]");
    DpWorkspace local;
    DpWorkspace& work = ws ? *ws : local;
    const Transitions tr(theta);
    const ObservedEmissions emit{x, y, theta.emissions()};
    return {forward_fixed_length(tr, emit, n, m, n + m - t, work), Criterion::FixedT, n, m, t};
}

// Suffix recursion: P_e(i, j) is the probability of emitting x_{i+1..n} and
// y_{j+1..m} given the chain enters state e with i and j symbols already
// consumed. Once a sequence is exhausted its further emissions are summed
// out: h collapses to a marginal, and steps along the exhausted axis form a
// geometric run.
LogLikResult log_marginal(const ModelParams& theta, std::span<const Symbol> x, std::span<const Symbol> y) {
    const std::size_t n = x.size(), m = y.size();
    require_nonempty(n, m);
    const auto& e = theta.emissions();
    // every emission is certain, so the prefixes are too; the recursion would
    // only reproduce 1 up to rounding
    if (e.f.size() == 1 && e.f[0] == 1.0 && e.g[0] == 1.0 && e.h[0] == 1.0)
        return {0.0, Criterion::Marginal, n, m, std::nullopt};
    const auto hx = e.h_x();
    const auto hy = e.h_y();
    std::array<std::array<double, 3>, 3> lt{};
    for (State a : kStates)
        for (State b : kStates) lt[idx(a)][idx(b)] = safe_log(theta.trans(a, b));
    const double stay_h = safe_log(1.0 - theta.trans(State::H, State::H));
    const double stay_v = safe_log(1.0 - theta.trans(State::V, State::V));

    // rows i and i + 1, each 3 * (m + 1): [state * (m + 1) + j]
    const std::size_t w = m + 1;
    std::vector<double> next(3 * w, kNegInf), cur(3 * w, kNegInf);
    auto cont = [&](const std::vector<double>& row, std::size_t j, std::size_t from) {
        return logsumexp3(lt[from][0] + row[j], lt[from][1] + row[w + j], lt[from][2] + row[2 * w + j]);
    };

    for (std::size_t ii = n + 1; ii-- > 0;) {
        const std::size_t i = ii;
        for (std::size_t jj = m + 1; jj-- > 0;) {
            const std::size_t j = jj;
            double ph, pv, pd;
            if (i == n && j == m) {
                ph = pv = pd = 0.0;
            } else if (i < n && j < m) {
                ph = safe_log(e.f[x[i]]) + cont(next, j, 0);
                pv = safe_log(e.g[y[j]]) + cont(cur, j + 1, 1);
                pd = safe_log(e.joint(x[i], y[j])) + cont(next, j + 1, 2);
            } else if (i < n) {  // y exhausted
                ph = safe_log(e.f[x[i]]) + cont(next, m, 0);
                pd = safe_log(hx[x[i]]) + cont(next, m, 2);
                pv = logsumexp2(lt[1][0] + ph, lt[1][2] + pd) - stay_v;
            } else {  // x exhausted
                pv = safe_log(e.g[y[j]]) + cont(cur, j + 1, 1);
                pd = safe_log(hy[y[j]]) + cont(cur, j + 1, 2);
                ph = logsumexp2(lt[0][1] + pv, lt[0][2] + pd) - stay_h;
            }
            cur[j] = ph;
            cur[w + j] = pv;
            cur[2 * w + j] = pd;
        }
        std::swap(cur, next);
    }
    // after the final swap, `next` holds row 0
    const auto& mu = theta.mu();
    const double value = logsumexp3(safe_log(mu[0]) + next[0], safe_log(mu[1]) + next[w], safe_log(mu[2]) + next[2 * w]);
    return {std::min(value, 0.0), Criterion::Marginal, n, m, std::nullopt};
}

ViterbiResult viterbi(const ModelParams& theta, std::span<const Symbol> x, std::span<const Symbol> y,
                      const DpConfig& cfg) {
    const std::size_t n = x.size(), m = y.size();
    require_nonempty(n, m);
    const std::size_t cells = (n + 1) * (m + 1);
    if (cells > cfg.viterbi_cell_cap)
        throw Error(ErrorCode::SizeCap, "traceback needs " + std::to_string(cells) + " cells, cap is " +
                                            std::to_string(cfg.viterbi_cell_cap));
    const auto& e = theta.emissions();
    std::array<std::array<double, 3>, 3> lt{};
    for (State a : kStates)
        for (State b : kStates) lt[idx(a)][idx(b)] = safe_log(theta.trans(a, b));
    const std::array<double, 3> lmu{safe_log(theta.mu()[0]), safe_log(theta.mu()[1]), safe_log(theta.mu()[2])};
    std::vector<double> lf, lg, lh;
    for (double v : e.f) lf.push_back(safe_log(v));
    for (double v : e.g) lg.push_back(safe_log(v));
    for (double v : e.h) lh.push_back(safe_log(v));
    const std::size_t K = e.alphabet_size();

    constexpr std::uint8_t kOrigin = 3;
    std::vector<std::uint8_t> back(cells * 3, kOrigin);
    const std::size_t w = m + 1;
    std::vector<double> prev(3 * w, kNegInf), cur(3 * w, kNegInf);

    // best predecessor into state `to`; strict comparison keeps the first of
    // equal candidates, so ties resolve H < V < D
    auto best = [&](const std::vector<double>& row, std::size_t j, std::size_t to) {
        std::uint8_t arg = 0;
        double val = row[j] + lt[0][to];
        for (std::uint8_t s = 1; s < 3; ++s) {
            const double v = row[s * w + j] + lt[s][to];
            if (v > val) {
                val = v;
                arg = s;
            }
        }
        return std::pair{val, arg};
    };

    for (std::size_t i = 0; i <= n; ++i) {
        std::fill(cur.begin(), cur.end(), kNegInf);
        for (std::size_t j = 0; j <= m; ++j) {
            if (i == 0 && j == 0) continue;
            const std::size_t c = (i * w + j) * 3;
            if (i >= 1) {
                auto [val, arg] = (i == 1 && j == 0) ? std::pair{lmu[0], kOrigin} : best(prev, j, 0);
                cur[j] = lf[x[i - 1]] + val;
                back[c] = arg;
            }
            if (j >= 1) {
                auto [val, arg] = (i == 0 && j == 1) ? std::pair{lmu[1], kOrigin} : best(cur, j - 1, 1);
                cur[w + j] = lg[y[j - 1]] + val;
                back[c + 1] = arg;
            }
            if (i >= 1 && j >= 1) {
                auto [val, arg] = (i == 1 && j == 1) ? std::pair{lmu[2], kOrigin} : best(prev, j - 1, 2);
                cur[2 * w + j] = lh[x[i - 1] * K + y[j - 1]] + val;
                back[c + 2] = arg;
            }
        }
        std::swap(prev, cur);
    }

    std::uint8_t s = 0;
    double val = prev[m];
    for (std::uint8_t k = 1; k < 3; ++k)
        if (prev[k * w + m] > val) {
            val = prev[k * w + m];
            s = k;
        }

    ViterbiResult out;
    out.log_prob = val;
    if (val == kNegInf) return out;
    std::size_t i = n, j = m;
    while (true) {
        const State st = kStates[s];
        out.path.push_back(st);
        const std::uint8_t from = back[(i * w + j) * 3 + s];
        i -= static_cast<std::size_t>(step(st).dx);
        j -= static_cast<std::size_t>(step(st).dy);
        if (from == kOrigin) break;
        s = from;
    }
    std::reverse(out.path.begin(), out.path.end());
    return out;
}

double log_hitting_prob(const ModelParams& theta, std::size_t n, std::size_t m) {
    require_nonempty(n, m);
    DpWorkspace ws;
    return forward_antidiagonal(Transitions(theta), n, m, EmissionArrays(n, m), ws);
}

double log_path_prob(const ModelParams& theta, std::span<const State> path, std::span<const Symbol> x,
                     std::span<const Symbol> y) {
    if (path.empty()) return x.empty() && y.empty() ? 0.0 : kNegInf;
    const auto& e = theta.emissions();
    double lp = safe_log(theta.mu(path[0]));
    std::size_t i = 0, j = 0;
    for (std::size_t s = 0; s < path.size(); ++s) {
        if (s > 0) lp += safe_log(theta.trans(path[s - 1], path[s]));
        switch (path[s]) {
            case State::H:
                if (i >= x.size()) return kNegInf;
                lp += safe_log(e.f[x[i++]]);
                break;
            case State::V:
                if (j >= y.size()) return kNegInf;
                lp += safe_log(e.g[y[j++]]);
                break;
            case State::D:
                if (i >= x.size() || j >= y.size()) return kNegInf;
                lp += safe_log(e.joint(x[i++], y[j++]));
                break;
        }
    }
    return (i == x.size() && j == y.size()) ? lp : kNegInf;
}

}  // namespace phmm
