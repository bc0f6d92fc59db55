#include "phmm/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include <boost/math/tools/roots.hpp>

#include "phmm/error.hpp"

namespace phmm {

std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::InvalidArgument: return "InvalidArgument";
        case ErrorCode::NonIrreducible: return "NonIrreducible";
        case ErrorCode::InvalidRate: return "InvalidRate";
        case ErrorCode::NoStationarySolution: return "NoStationarySolution";
        case ErrorCode::FloorViolation: return "FloorViolation";
        case ErrorCode::EmptyInput: return "EmptyInput";
        case ErrorCode::InvalidLength: return "InvalidLength";
        case ErrorCode::SizeCap: return "SizeCap";
        case ErrorCode::TooLarge: return "TooLarge";
        case ErrorCode::NotConverged: return "NotConverged";
        case ErrorCode::BudgetExceeded: return "BudgetExceeded";
        case ErrorCode::Parse: return "ParseError";
        case ErrorCode::Io: return "IoError";
    }
    return "Unknown";
}

namespace {

constexpr double kSimplexTol = 1e-12;
constexpr double kStationaryTol = 1e-10;

void check_probability_vector(std::span<const double> v, const char* what) {
    if (v.empty()) throw Error(ErrorCode::InvalidArgument, std::string(what) + " is empty");
    double sum = 0.0;
    for (double x : v) {
        if (!(x >= 0.0) || !std::isfinite(x))
            throw Error(ErrorCode::InvalidArgument, std::string(what) + " has a negative or non-finite entry");
        sum += x;
    }
    if (std::abs(sum - 1.0) > kSimplexTol) {
        std::ostringstream os;
        os << what << " sums to " << sum << ", not 1";
        throw Error(ErrorCode::InvalidArgument, os.str());
    }
}

}  // namespace

char to_char(State s) {
    switch (s) {
        case State::H: return 'H';
        case State::V: return 'V';
        case State::D: return 'D';
    }
    return '?';
}

State state_from_char(char c) {
    switch (c) {
        case 'H': return State::H;
        case 'V': return State::V;
        case 'D': return State::D;
        default: throw Error(ErrorCode::Parse, std::string("unknown hidden state '") + c + "'");
    }
}

Alphabet::Alphabet(std::string symbols) : symbols_(std::move(symbols)) {
    if (symbols_.empty()) throw Error(ErrorCode::InvalidArgument, "alphabet must not be empty");
    if (symbols_.size() > 255) throw Error(ErrorCode::InvalidArgument, "alphabet too large");
    index_.fill(-1);
    for (std::size_t i = 0; i < symbols_.size(); ++i) {
        auto c = static_cast<unsigned char>(symbols_[i]);
        if (index_[c] != -1)
            throw Error(ErrorCode::InvalidArgument, std::string("duplicate alphabet symbol '") + symbols_[i] + "'");
        index_[c] = static_cast<int>(i);
    }
}

Symbol Alphabet::index(char c) const {
    int i = index_[static_cast<unsigned char>(c)];
    if (i < 0) throw Error(ErrorCode::Parse, std::string("symbol '") + c + "' not in alphabet " + symbols_);
    return static_cast<Symbol>(i);
}

Sequence Alphabet::encode(std::string_view text) const {
    Sequence out;
    out.reserve(text.size());
    for (char c : text) out.push_back(index(c));
    return out;
}

std::string Alphabet::decode(std::span<const Symbol> seq) const {
    std::string out;
    out.reserve(seq.size());
    for (Symbol s : seq) out.push_back(symbol(s));
    return out;
}

TransitionMatrix::TransitionMatrix(const Matrix3& entries) : p_(entries) {
    for (const auto& row : p_) check_probability_vector(row, "transition row");
}

std::vector<double> EmissionTables::h_x() const {
    const std::size_t k = f.size();
    std::vector<double> out(k, 0.0);
    for (std::size_t a = 0; a < k; ++a)
        for (std::size_t b = 0; b < k; ++b) out[a] += h[a * k + b];
    return out;
}

std::vector<double> EmissionTables::h_y() const {
    const std::size_t k = f.size();
    std::vector<double> out(k, 0.0);
    for (std::size_t a = 0; a < k; ++a)
        for (std::size_t b = 0; b < k; ++b) out[b] += h[a * k + b];
    return out;
}

void EmissionTables::validate() const {
    if (g.size() != f.size() || h.size() != f.size() * f.size())
        throw Error(ErrorCode::InvalidArgument, "emission tables disagree on alphabet size");
    check_probability_vector(f, "f");
    check_probability_vector(g, "g");
    check_probability_vector(h, "h");
}

// Diagonal cofactors of I - π (Markov chain tree theorem for three states).
Stationary stationary_distribution(const TransitionMatrix& pi) {
    const auto& p = pi.entries();
    Stationary w{
        (1 - p[1][1]) * (1 - p[2][2]) - p[1][2] * p[2][1],
        (1 - p[0][0]) * (1 - p[2][2]) - p[0][2] * p[2][0],
        (1 - p[0][0]) * (1 - p[1][1]) - p[0][1] * p[1][0],
    };
    const double total = w[0] + w[1] + w[2];
    if (!(total > 1e-14)) throw Error(ErrorCode::NonIrreducible, "transition matrix has no unique stationary distribution");
    for (double& x : w) x = std::max(0.0, x / total);

    for (std::size_t j = 0; j < 3; ++j) {
        double lhs = 0.0;
        for (std::size_t i = 0; i < 3; ++i) lhs += w[i] * p[i][j];
        if (std::abs(lhs - w[j]) > kStationaryTol)
            throw Error(ErrorCode::NonIrreducible, "stationary distribution failed the balance check");
    }
    return w;
}

ModelParams::ModelParams(TransitionMatrix pi, EmissionTables emissions)
    : pi_(pi), emissions_(std::move(emissions)), mu_(stationary_distribution(pi_)) {
    emissions_.validate();
}

ModelParams ModelParams::swapped() const {
    const auto& p = pi_.entries();
    // permutation H <-> V, D fixed
    constexpr std::array<std::size_t, 3> perm{1, 0, 2};
    Matrix3 q{};
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 3; ++j) q[i][j] = p[perm[i]][perm[j]];
    EmissionTables e;
    e.f = emissions_.g;
    e.g = emissions_.f;
    const std::size_t k = alphabet_size();
    e.h.resize(k * k);
    for (std::size_t a = 0; a < k; ++a)
        for (std::size_t b = 0; b < k; ++b) e.h[b * k + a] = emissions_.h[a * k + b];
    return {TransitionMatrix(q), std::move(e)};
}

double ModelParams::distance(const ModelParams& other) const {
    if (other.alphabet_size() != alphabet_size())
        throw Error(ErrorCode::InvalidArgument, "distance between models over different alphabets");
    double d = 0.0;
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 3; ++j)
            d = std::max(d, std::abs(pi_.entries()[i][j] - other.pi_.entries()[i][j]));
    auto sup = [&d](const std::vector<double>& a, const std::vector<double>& b) {
        for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
    };
    sup(emissions_.f, other.emissions_.f);
    sup(emissions_.g, other.emissions_.g);
    sup(emissions_.h, other.emissions_.h);
    return d;
}

ParamFloor::ParamFloor(double d) : delta(d) {
    if (!(d > 0.0 && d < 1.0 / 3.0)) throw Error(ErrorCode::InvalidArgument, "floor must lie in (0, 1/3)");
}

bool ParamFloor::contains(const ModelParams& theta) const {
    for (const auto& row : theta.pi().entries())
        for (double x : row)
            if (x < delta) return false;
    const auto& e = theta.emissions();
    auto above = [this](const std::vector<double>& v) {
        return std::all_of(v.begin(), v.end(), [this](double x) { return x >= delta; });
    };
    return above(e.f) && above(e.g) && above(e.h);
}

EmissionTables substitution_emissions(std::span<const double> f, double alpha) {
    if (!(alpha > 0.0) || !std::isfinite(alpha))
        throw Error(ErrorCode::InvalidRate, "substitution rate must be positive and finite");
    check_probability_vector(f, "equilibrium distribution");
    const std::size_t k = f.size();
    const double keep = std::exp(-alpha);
    const double sub = -std::expm1(-alpha);
    EmissionTables e;
    e.f.assign(f.begin(), f.end());
    e.g = e.f;
    e.h.assign(k * k, 0.0);
    for (std::size_t a = 0; a < k; ++a)
        for (std::size_t b = 0; b < k; ++b) e.h[a * k + b] = f[a] * (sub * f[b] + (a == b ? keep : 0.0));
    return e;
}

EmissionTables substitution_emissions_limit_zero(std::span<const double> f) {
    check_probability_vector(f, "equilibrium distribution");
    const std::size_t k = f.size();
    EmissionTables e;
    e.f.assign(f.begin(), f.end());
    e.g = e.f;
    e.h.assign(k * k, 0.0);
    for (std::size_t a = 0; a < k; ++a) e.h[a * k + a] = f[a];
    return e;
}

ParametrizationScheme ParametrizationScheme::iid(double p, double alpha, std::vector<double> f) {
    return {IidScheme{p, alpha}, std::move(f)};
}

ParametrizationScheme ParametrizationScheme::markov(const MarkovScheme& m, std::vector<double> f) {
    return {m, std::move(f)};
}

ParametrizationScheme ParametrizationScheme::raw(const ModelParams& theta) {
    return {RawScheme{theta.pi().entries(), theta.emissions()}, theta.emissions().f};
}

std::string ParametrizationScheme::kind() const {
    if (std::holds_alternative<IidScheme>(variant)) return "iid";
    if (std::holds_alternative<MarkovScheme>(variant)) return "markov";
    return "raw";
}

std::vector<std::string> ParametrizationScheme::names() const {
    if (std::holds_alternative<IidScheme>(variant)) return {"p", "alpha"};
    if (std::holds_alternative<MarkovScheme>(variant)) return {"pi_HH", "pi_HV", "pi_DV", "pi_VV", "pi_DH", "alpha"};
    return {};
}

std::vector<double> ParametrizationScheme::values() const {
    if (const auto* s = std::get_if<IidScheme>(&variant)) return {s->p, s->alpha};
    if (const auto* s = std::get_if<MarkovScheme>(&variant))
        return {s->pi_hh, s->pi_hv, s->pi_dv, s->pi_vv, s->pi_dh, s->alpha};
    return {};
}

ParametrizationScheme ParametrizationScheme::with_values(std::span<const double> beta) const {
    if (beta.size() != names().size())
        throw Error(ErrorCode::InvalidArgument, "parameter vector has the wrong dimension for a " + kind() + " scheme");
    ParametrizationScheme out = *this;
    if (std::holds_alternative<IidScheme>(variant)) {
        out.variant = IidScheme{beta[0], beta[1]};
    } else if (std::holds_alternative<MarkovScheme>(variant)) {
        out.variant = MarkovScheme{beta[0], beta[1], beta[2], beta[3], beta[4], beta[5]};
    }
    return out;
}

std::optional<std::size_t> ParametrizationScheme::find(std::string_view name) const {
    const auto n = names();
    for (std::size_t i = 0; i < n.size(); ++i)
        if (n[i] == name) return i;
    return std::nullopt;
}

namespace {

bool open_unit(double x) { return x > 0.0 && x < 1.0; }

double stationary_gap(double pi_hh, double pi_hv, double pi_dh, double pi_dv, double pi_vv, double pi_vh) {
    Matrix3 p{{{pi_hh, pi_hv, 1 - pi_hh - pi_hv}, {pi_vh, pi_vv, 1 - pi_vv - pi_vh}, {pi_dh, pi_dv, 1 - pi_dh - pi_dv}}};
    // cofactor form, unnormalized; positive normalization does not change the sign
    const double mh = (1 - p[1][1]) * (1 - p[2][2]) - p[1][2] * p[2][1];
    const double mv = (1 - p[0][0]) * (1 - p[2][2]) - p[0][2] * p[2][0];
    const double total = mh + mv + (1 - p[0][0]) * (1 - p[1][1]) - p[0][1] * p[1][0];
    return (mh - mv) / total;
}

}  // namespace

Matrix3 constrained_markov_matrix(const MarkovScheme& m) {
    const double pi_hd = 1 - m.pi_hh - m.pi_hv;
    const double pi_dd = 1 - m.pi_dh - m.pi_dv;
    if (!open_unit(m.pi_hh) || !open_unit(m.pi_hv) || !open_unit(m.pi_dv) || !open_unit(m.pi_vv) ||
        !open_unit(m.pi_dh) || !open_unit(pi_hd) || !open_unit(pi_dd))
        throw Error(ErrorCode::InvalidArgument, "constrained Markov entries must lie in (0,1) with rows summing to 1");

    const double upper = 1 - m.pi_vv;
    auto gap = [&](double pi_vh) { return stationary_gap(m.pi_hh, m.pi_hv, m.pi_dh, m.pi_dv, m.pi_vv, pi_vh); };
    const double g_lo = gap(0.0);
    const double g_hi = gap(upper);
    if (!(g_lo * g_hi < 0.0))
        throw Error(ErrorCode::NoStationarySolution, "no pi_VH in (0, 1 - pi_VV) balances the H and V frequencies");
    auto done = [](double a, double b) { return b - a <= 1e-15; };
    std::uintmax_t iters = 200;
    auto [lo, hi] = boost::math::tools::bisect(gap, 0.0, upper, done, iters);
    double pi_vh = 0.5 * (lo + hi);
    if (std::abs(gap(pi_vh)) > 1e-12 || !(pi_vh > 0.0 && pi_vh < upper))
        throw Error(ErrorCode::NoStationarySolution, "root solve for pi_VH did not reach tolerance");
    return {{{m.pi_hh, m.pi_hv, pi_hd}, {pi_vh, m.pi_vv, upper - pi_vh}, {m.pi_dh, m.pi_dv, pi_dd}}};
}

MarkovScheme markov_free_entries(const TransitionMatrix& pi, double alpha) {
    const auto& p = pi.entries();
    return {p[0][0], p[0][1], p[2][1], p[1][1], p[2][0], alpha};
}

ModelParams theta_from_beta(const ParametrizationScheme& scheme, std::optional<ParamFloor> floor) {
    auto build = [&]() -> ModelParams {
        if (const auto* s = std::get_if<IidScheme>(&scheme.variant)) {
            if (!(s->p > 0.0 && s->p < 0.5)) throw Error(ErrorCode::InvalidArgument, "i.i.d. scheme requires 0 < p < 1/2");
            const std::array<double, 3> row{s->p, s->p, 1 - 2 * s->p};
            return {TransitionMatrix(Matrix3{row, row, row}), substitution_emissions(scheme.base_f, s->alpha)};
        }
        if (const auto* s = std::get_if<MarkovScheme>(&scheme.variant)) {
            if (!(s->alpha > 0.0)) throw Error(ErrorCode::InvalidRate, "substitution rate must be positive");
            return {TransitionMatrix(constrained_markov_matrix(*s)), substitution_emissions(scheme.base_f, s->alpha)};
        }
        const auto& r = std::get<RawScheme>(scheme.variant);
        return {TransitionMatrix(r.pi), r.emissions};
    };
    ModelParams theta = build();
    if (floor && !floor->contains(theta)) {
        std::ostringstream os;
        os << "parameter outside the floor set, delta = " << floor->delta;
        throw Error(ErrorCode::FloorViolation, os.str());
    }
    return theta;
}

AssumptionReport check_assumptions(const ModelParams& theta) {
    const auto& e = theta.emissions();
    const std::size_t k = e.alphabet_size();
    AssumptionReport rep;
    for (std::size_t a = 0; a < k; ++a)
        for (std::size_t b = 0; b < k; ++b)
            rep.max_independence_gap = std::max(rep.max_independence_gap, std::abs(e.h[a * k + b] - e.f[a] * e.g[b]));
    rep.a1_identifiable = rep.max_independence_gap > 1e-9;
    rep.a2_p_equals_q = std::abs(theta.mu()[0] - theta.mu()[1]) <= kStationaryTol;
    const auto hx = e.h_x();
    const auto hy = e.h_y();
    for (std::size_t a = 0; a < k; ++a) {
        rep.max_marginal_gap = std::max(rep.max_marginal_gap, std::abs(hx[a] - e.f[a]));
        rep.max_marginal_gap = std::max(rep.max_marginal_gap, std::abs(hy[a] - e.g[a]));
    }
    rep.a3_marginal_match = rep.max_marginal_gap <= kStationaryTol;
    return rep;
}

bool is_in_theta_exp(const ModelParams& theta, const ModelParams& theta0, double tol) {
    const auto& m = theta.mu();
    const auto& m0 = theta0.mu();
    const double ax = m[0] + m[2], ay = m[1] + m[2];
    const double bx = m0[0] + m0[2], by = m0[1] + m0[2];
    return std::abs(ax * by - ay * bx) > tol;
}

}  // namespace phmm
