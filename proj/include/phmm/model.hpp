#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace phmm {

// Hidden states of the pair chain. The numeric values are the row/column
// indices used by every matrix in the library: H < V < D.
enum class State : std::uint8_t { H = 0, V = 1, D = 2 };

inline constexpr std::array<State, 3> kStates{State::H, State::V, State::D};
inline constexpr std::size_t kNumStates = 3;

struct Step {
    int dx;
    int dy;
};

constexpr Step step(State s) {
    switch (s) {
        case State::H: return {1, 0};
        case State::V: return {0, 1};
        case State::D: return {1, 1};
    }
    return {0, 0};
}

constexpr std::size_t idx(State s) { return static_cast<std::size_t>(s); }

char to_char(State s);
State state_from_char(char c);

using Symbol = std::uint8_t;
using Sequence = std::vector<Symbol>;
using Path = std::vector<State>;

class Alphabet {
public:
    explicit Alphabet(std::string symbols = "ACGT");

    std::size_t size() const { return symbols_.size(); }
    char symbol(Symbol s) const { return symbols_.at(s); }
    const std::string& symbols() const { return symbols_; }
    Symbol index(char c) const;

    Sequence encode(std::string_view text) const;
    std::string decode(std::span<const Symbol> seq) const;

    bool operator==(const Alphabet& other) const { return symbols_ == other.symbols_; }

private:
    std::string symbols_;
    std::array<int, 256> index_{};
};

using Matrix3 = std::array<std::array<double, 3>, 3>;

// Row-stochastic 3x3 matrix in (H, V, D) order.
class TransitionMatrix {
public:
    explicit TransitionMatrix(const Matrix3& entries);

    double operator()(State from, State to) const { return p_[idx(from)][idx(to)]; }
    const Matrix3& entries() const { return p_; }

private:
    Matrix3 p_;
};

// f and g are distributions over the alphabet, h a joint distribution stored
// row-major (h[a * K + b] = h(a, b)).
struct EmissionTables {
    std::vector<double> f;
    std::vector<double> g;
    std::vector<double> h;

    std::size_t alphabet_size() const { return f.size(); }
    double joint(Symbol a, Symbol b) const { return h[a * f.size() + b]; }
    std::vector<double> h_x() const;
    std::vector<double> h_y() const;

    // Throws InvalidArgument unless every table is a probability vector
    // within 1e-12.
    void validate() const;
};

// Stationary distribution (p, q, r) of the hidden chain, (H, V, D) order.
using Stationary = std::array<double, 3>;

Stationary stationary_distribution(const TransitionMatrix& pi);

// θ = (π, f, g, h). μ is always derived from π.
class ModelParams {
public:
    ModelParams(TransitionMatrix pi, EmissionTables emissions);

    const TransitionMatrix& pi() const { return pi_; }
    const EmissionTables& emissions() const { return emissions_; }
    const Stationary& mu() const { return mu_; }
    std::size_t alphabet_size() const { return emissions_.alphabet_size(); }

    double trans(State from, State to) const { return pi_(from, to); }
    double mu(State s) const { return mu_[idx(s)]; }

    ModelParams with_pi(const TransitionMatrix& pi) const { return {pi, emissions_}; }

    // Relabels the two sequences: H<->V in π, f<->g, h transposed.
    ModelParams swapped() const;

    // Sup-norm over all entries of π, f, g, h.
    double distance(const ModelParams& other) const;

private:
    TransitionMatrix pi_;
    EmissionTables emissions_;
    Stationary mu_;
};

// Θ_δ membership: every entry of π, f, g, h at least delta.
struct ParamFloor {
    double delta = 1e-4;

    ParamFloor() = default;
    explicit ParamFloor(double d);
    bool contains(const ModelParams& theta) const;
};

EmissionTables substitution_emissions(std::span<const double> f, double alpha);

// Boundary probe for alpha = 0, where h is the diagonal f(x)1{x=y}. Kept
// separate so substitution_emissions can reject alpha <= 0.
EmissionTables substitution_emissions_limit_zero(std::span<const double> f);

struct IidScheme {
    double p = 0.25;
    double alpha = 0.05;
};

struct MarkovScheme {
    double pi_hh = 0.5;
    double pi_hv = 0.2;
    double pi_dv = 0.1;
    double pi_vv = 0.6;
    double pi_dh = 0.2;
    double alpha = 0.05;
};

struct RawScheme {
    Matrix3 pi;
    EmissionTables emissions;
};

// β together with the known equilibrium letter distribution.
struct ParametrizationScheme {
    std::variant<IidScheme, MarkovScheme, RawScheme> variant;
    std::vector<double> base_f{0.25, 0.25, 0.25, 0.25};

    static ParametrizationScheme iid(double p, double alpha, std::vector<double> f = {0.25, 0.25, 0.25, 0.25});
    static ParametrizationScheme markov(const MarkovScheme& m, std::vector<double> f = {0.25, 0.25, 0.25, 0.25});
    static ParametrizationScheme raw(const ModelParams& theta);

    bool is_raw() const { return std::holds_alternative<RawScheme>(variant); }
    std::string kind() const;

    // Named β coordinates. Raw schemes have none.
    std::vector<std::string> names() const;
    std::vector<double> values() const;
    ParametrizationScheme with_values(std::span<const double> beta) const;
    std::optional<std::size_t> find(std::string_view name) const;
};

ModelParams theta_from_beta(const ParametrizationScheme& scheme, std::optional<ParamFloor> floor = std::nullopt);

// Solves for (π_VH, π_VD) given the five free entries so that μ_H = μ_V.
Matrix3 constrained_markov_matrix(const MarkovScheme& m);

// Inverse of the constrained map: reads the five free entries off a matrix.
MarkovScheme markov_free_entries(const TransitionMatrix& pi, double alpha);

struct AssumptionReport {
    bool a1_identifiable = false;
    bool a2_p_equals_q = false;
    bool a3_marginal_match = false;
    double max_marginal_gap = 0.0;
    double max_independence_gap = 0.0;
};

AssumptionReport check_assumptions(const ModelParams& theta);

// E[ε_1] under θ is not a positive multiple of E[ε_1] under θ0.
bool is_in_theta_exp(const ModelParams& theta, const ModelParams& theta0, double tol = 1e-12);

}  // namespace phmm
