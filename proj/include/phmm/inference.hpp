#pragma once

#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "phmm/dp.hpp"
#include "phmm/model.hpp"

namespace phmm {

struct OptimizerConfig {
    std::size_t multistarts = 5;      // Nelder-Mead runs, launched from the best lattice points
    std::size_t lattice_per_axis = 3;  // prescreen lattice resolution in unconstrained coordinates
    std::size_t max_lattice = 64;      // cap on prescreen evaluations
    double lattice_spread = 1.5;       // lattice half-width in unconstrained coordinates
    bool template_start = false;       // also screen the template's own free values
    bool viterbi_start = true;         // also screen a start read off Viterbi alignment counts
    std::size_t viterbi_rounds = 2;
    double initial_step = 0.5;         // simplex edge in unconstrained coordinates
    std::size_t max_evaluations = 2000;  // per start, restarts included
    std::size_t restarts = 3;          // fresh simplices around a converged point
    double tolerance = 1e-8;           // on the normalized criterion t^{-1} w_t
    double x_tolerance = 1e-4;         // simplex extent in unconstrained coordinates
    double coordinate_bound = 12.0;    // |u_i| beyond this scores -inf, so boundary optima converge
    double delta = 1e-4;               // probability floor
    // objective precision; the reported criterion is always recomputed in double
    Precision precision = Precision::Double;
    double alpha_min = 5e-3;
    double alpha_max = 5.0;

    void validate() const;
};

// Maps the free β coordinates of a scheme to and from R^k. Probabilities land
// in (δ, upper) through logistic or floored-softmax maps; α through a log map
// into [alpha_min, alpha_max]. Coordinates not listed as free keep the values
// of the template.
class Reparametrization {
public:
    Reparametrization(ParametrizationScheme tmpl, std::vector<std::string> free, const OptimizerConfig& cfg);

    std::size_t dim() const { return free_.size(); }
    const std::vector<std::string>& free_names() const { return free_; }
    const ParametrizationScheme& scheme_template() const { return tmpl_; }

    ParametrizationScheme to_scheme(std::span<const double> u) const;
    // Throws InvalidArgument if the scheme's free values lie outside the
    // image of the map.
    std::vector<double> from_scheme(const ParametrizationScheme& s) const;
    std::vector<double> free_values(const ParametrizationScheme& s) const;
    // Position of α among the free coordinates, or dim() if α is fixed.
    std::size_t alpha_index() const;

private:
    ParametrizationScheme tmpl_;
    std::vector<std::string> free_;
    std::vector<std::size_t> slot_;  // index into tmpl_.names()
    double delta_;
    double log_amin_;
    double log_amax_;
};

// Maximizes f over R^k with the Nelder-Mead simplex method. Non-finite values
// count as -inf. Stops when the spread of f over the simplex is at most
// f_tol and its extent at most x_tol, or after max_eval evaluations.
struct SimplexResult {
    std::vector<double> best;
    double value = -std::numeric_limits<double>::infinity();
    std::size_t evaluations = 0;
    bool converged = false;
    std::vector<std::vector<double>> simplex;  // final vertices, best first
    std::vector<double> simplex_values;
};

SimplexResult nelder_mead_max(const std::function<double(std::span<const double>)>& f, std::vector<double> start,
                              double step, double f_tol, double x_tol, std::size_t max_eval);

// Data-driven start: align with a neutral θ, read transition frequencies and
// the mismatch rate off the Viterbi path, re-align with the result, repeat.
// Only free coordinates change. Empty when the pair is too large for a
// traceback or no feasible θ comes out.
std::optional<ParametrizationScheme> viterbi_start(std::span<const Symbol> x, std::span<const Symbol> y,
                                                   const Reparametrization& rep, const OptimizerConfig& cfg);

struct StartTrace {
    std::vector<double> start;  // β values of the free coordinates
    std::vector<double> end;
    double criterion_value = 0.0;
    std::size_t evaluations = 0;
    bool converged = false;
};

struct EstimateReport {
    ParametrizationScheme beta_hat;
    std::vector<std::string> free_names;
    std::vector<double> free_values;
    double criterion_value = 0.0;  // normalized log Q at beta_hat
    double normalizer = 1.0;       // t, or n + m when t is unknown
    std::size_t evaluations = 0;   // lattice prescreen plus every start
    bool converged = false;        // the winning start met the tolerance
    bool weakly_identified = false;
    std::vector<StartTrace> trace;
};

// β̂ = argmax over the free coordinates of log Q(x, y | θ(β)). The reported
// criterion is divided by t (pass 0 when t is unknown to use n + m), which
// leaves the argmax unchanged. Throws NotConverged only when no start reached
// a finite value.
EstimateReport mle(std::span<const Symbol> x, std::span<const Symbol> y, const ParametrizationScheme& scheme_template,
                   const std::vector<std::string>& free, const OptimizerConfig& cfg, std::size_t t = 0);

struct PosteriorGrid {
    std::vector<ParametrizationScheme> points;
    std::vector<double> prior;
    std::vector<double> log_likelihood;  // w_t at each point
    std::vector<double> posterior;
    double log_normalizer = 0.0;  // log Σ prior_i exp(w_t,i)

    std::size_t mode() const;
};

// Posterior over a finite grid. An empty prior means uniform.
PosteriorGrid posterior_grid(std::span<const Symbol> x, std::span<const Symbol> y,
                             const std::vector<ParametrizationScheme>& grid, std::vector<double> prior = {});

// Grid quadrature from already computed log-likelihoods.
PosteriorGrid posterior_from_loglik(std::vector<ParametrizationScheme> grid, std::vector<double> log_likelihood,
                                    std::vector<double> prior = {});

// `steps` evenly spaced values of one named coordinate, others from `base`.
std::vector<ParametrizationScheme> axis_grid(const ParametrizationScheme& base, const std::string& name, double lo,
                                             double hi, std::size_t steps);

}  // namespace phmm
