#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <string>
#include <vector>

#include "phmm/divergence.hpp"
#include "phmm/dp.hpp"
#include "phmm/error.hpp"
#include "phmm/experiment.hpp"
#include "phmm/inference.hpp"
#include "phmm/io.hpp"
#include "phmm/simulate.hpp"

namespace py = pybind11;
using namespace phmm;

namespace {

std::string path_text(const Path& path) {
    std::string s;
    for (State st : path) s += to_char(st);
    return s;
}

std::vector<double> default_f(const Alphabet& a, std::optional<std::vector<double>> f) {
    if (f) return *f;
    return std::vector<double>(a.size(), 1.0 / static_cast<double>(a.size()));
}

py::dict report_dict(const EstimateReport& r) {
    py::dict d;
    py::dict values;
    for (std::size_t i = 0; i < r.free_names.size(); ++i) values[py::str(r.free_names[i])] = r.free_values[i];
    d["values"] = values;
    d["criterion"] = r.criterion_value;
    d["normalizer"] = r.normalizer;
    d["evaluations"] = r.evaluations;
    d["converged"] = r.converged;
    d["weakly_identified"] = r.weakly_identified;
    return d;
}

py::dict rate_dict(const RateEstimate& r) {
    py::dict d;
    d["target"] = to_string(r.target);
    d["t"] = r.t;
    d["replicates"] = r.replicates;
    d["mean"] = r.mean;
    d["se"] = r.se;
    d["values"] = r.values;
    return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Pair hidden Markov model likelihoods, estimation and divergence rates.";
    m.attr("__version__") = version();

    static py::exception<Error> error(m, "PhmmError", PyExc_ValueError);
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const Error& e) {
            if (e.code() == ErrorCode::Io)
                PyErr_SetString(PyExc_OSError, e.what());
            else
                error(e.what());
        }
    });

    py::class_<ModelSpec>(m, "Model")
        .def_static(
            "iid",
            [](double p, double alpha, std::string symbols, std::optional<std::vector<double>> f) {
                Alphabet a(symbols);
                return ModelSpec{a, ParametrizationScheme::iid(p, alpha, default_f(a, f))};
            },
            py::arg("p"), py::arg("alpha"), py::arg("symbols") = "ACGT", py::arg("f") = py::none())
        .def_static(
            "markov",
            [](double pi_HH, double pi_HV, double pi_DV, double pi_VV, double pi_DH, double alpha, std::string symbols,
               std::optional<std::vector<double>> f) {
                Alphabet a(symbols);
                return ModelSpec{a, ParametrizationScheme::markov({pi_HH, pi_HV, pi_DV, pi_VV, pi_DH, alpha},
                                                                  default_f(a, f))};
            },
            py::arg("pi_HH"), py::arg("pi_HV"), py::arg("pi_DV"), py::arg("pi_VV"), py::arg("pi_DH"),
            py::arg("alpha"), py::arg("symbols") = "ACGT", py::arg("f") = py::none())
        .def_static("parse", [](const std::string& text) { return parse_model(text); }, py::arg("text"))
        .def_static("load", [](const std::string& path) { return load_model(path); }, py::arg("path"))
        .def("to_text", &format_model)
        .def_property_readonly("kind", [](const ModelSpec& s) { return s.scheme.kind(); })
        .def_property_readonly("symbols", [](const ModelSpec& s) { return s.alphabet.symbols(); })
        .def_property_readonly("names", [](const ModelSpec& s) { return s.scheme.names(); })
        .def_property_readonly("values", [](const ModelSpec& s) { return s.scheme.values(); })
        .def("with_values",
             [](const ModelSpec& s, const std::vector<double>& v) { return ModelSpec{s.alphabet, s.scheme.with_values(v)}; })
        .def("transition_matrix", [](const ModelSpec& s) { return s.theta().pi().entries(); })
        .def("stationary", [](const ModelSpec& s) { return s.theta().mu(); })
        .def("__repr__", [](const ModelSpec& s) {
            std::string r = "Model(" + s.scheme.kind();
            const auto names = s.scheme.names();
            const auto values = s.scheme.values();
            for (std::size_t i = 0; i < names.size(); ++i) r += ", " + names[i] + "=" + format_number(values[i]);
            return r + ")";
        });

    m.def(
        "log_q",
        [](const ModelSpec& s, const std::string& x, const std::string& y) {
            return log_q(s.theta(), s.alphabet.encode(x), s.alphabet.encode(y)).value;
        },
        py::arg("model"), py::arg("x"), py::arg("y"), "log Q: sum over every alignment ending at (n, m)");
    m.def(
        "log_l_fixed_t",
        [](const ModelSpec& s, const std::string& x, const std::string& y, std::size_t t) {
            return log_l_fixed_t(s.theta(), s.alphabet.encode(x), s.alphabet.encode(y), t).value;
        },
        py::arg("model"), py::arg("x"), py::arg("y"), py::arg("t"), "log probability of the pair with Z_t = (n, m)");
    m.def(
        "log_marginal",
        [](const ModelSpec& s, const std::string& x, const std::string& y) {
            return log_marginal(s.theta(), s.alphabet.encode(x), s.alphabet.encode(y)).value;
        },
        py::arg("model"), py::arg("x"), py::arg("y"), "log probability of the two prefixes");
    m.def(
        "viterbi",
        [](const ModelSpec& s, const std::string& x, const std::string& y) {
            const auto r = viterbi(s.theta(), s.alphabet.encode(x), s.alphabet.encode(y));
            return py::make_tuple(r.log_prob, path_text(r.path));
        },
        py::arg("model"), py::arg("x"), py::arg("y"), "(log probability, path over H, V, D)");

    m.def(
        "simulate",
        [](const ModelSpec& s, std::size_t t, std::uint64_t seed, std::uint64_t replicate) {
            const auto r = simulate_pair(s.theta(), t, {seed, replicate});
            return py::make_tuple(s.alphabet.decode(r.x), s.alphabet.decode(r.y), path_text(r.path));
        },
        py::arg("model"), py::arg("t"), py::arg("seed"), py::arg("replicate") = 0, "(x, y, path)");

    m.def(
        "mle",
        [](const ModelSpec& s, const std::string& x, const std::string& y, std::optional<std::vector<std::string>> free,
           std::optional<std::size_t> t, std::size_t multistarts, const std::string& precision) {
            if (precision != "double" && precision != "mixed")
                throw Error(ErrorCode::InvalidArgument, "precision must be 'double' or 'mixed'");
            OptimizerConfig cfg;
            cfg.multistarts = multistarts;
            cfg.precision = precision == "mixed" ? Precision::Mixed : Precision::Double;
            const auto xs = s.alphabet.encode(x), ys = s.alphabet.encode(y);
            const auto names = free ? *free : s.scheme.names();
            EstimateReport r;
            {
                py::gil_scoped_release release;
                r = mle(xs, ys, s.scheme, names, cfg, t.value_or(0));
            }
            return report_dict(r);
        },
        py::arg("model"), py::arg("x"), py::arg("y"), py::arg("free") = py::none(), py::arg("t") = py::none(),
        py::arg("multistarts") = OptimizerConfig{}.multistarts, py::arg("precision") = "double",
        "Maximum-likelihood estimate of the free coordinates; the model supplies the fixed ones.");

    m.def(
        "divergence",
        [](const ModelSpec& s, const ModelSpec& s0, std::size_t t, std::size_t replicates, std::uint64_t seed,
           const std::string& target, std::size_t jobs) {
            if (target != "w" && target != "l") throw Error(ErrorCode::InvalidArgument, "target must be 'w' or 'l'");
            RateEstimate r;
            {
                py::gil_scoped_release release;
                r = divergence(s.theta(), s0.theta(), t, replicates, seed, target == "w" ? RateTarget::D : RateTarget::Dstar,
                               jobs);
            }
            return rate_dict(r);
        },
        py::arg("model"), py::arg("truth"), py::arg("t"), py::arg("replicates"), py::arg("seed"),
        py::arg("target") = "w", py::arg("jobs") = 1, "Monte Carlo divergence rate with common random numbers");

    m.def("presets", &ExperimentConfig::preset_names);
    m.def(
        "experiment_config",
        [](const std::string& preset, const std::vector<std::string>& overrides) {
            auto c = ExperimentConfig::preset(preset);
            for (const auto& o : overrides) c.set(o);
            ExperimentPlan::from(c);
            return c.to_text();
        },
        py::arg("preset"), py::arg("overrides") = std::vector<std::string>{},
        "Canonical config text of a preset with overrides applied");
    m.def(
        "run_experiment",
        [](const std::string& preset, const std::vector<std::string>& overrides, const std::string& out,
           std::size_t jobs) {
            auto c = ExperimentConfig::preset(preset);
            for (const auto& o : overrides) c.set(o);
            const auto plan = ExperimentPlan::from(c);
            ExperimentResult result;
            {
                py::gil_scoped_release release;
                result = run_experiment(plan, jobs);
            }
            py::dict summary;
            for (const auto& er : result.estimation) {
                py::list rows;
                for (const auto& s : er.summary(plan.truth)) {
                    py::dict d;
                    d["parameter"] = s.name;
                    d["truth"] = s.truth;
                    d["mean"] = s.mean;
                    d["sd"] = s.sd;
                    d["min"] = s.min;
                    d["max"] = s.max;
                    rows.append(d);
                }
                summary[py::str(er.study.name)] = rows;
            }
            for (const auto& pr : result.posteriors)
                summary[py::str("posterior." + pr.study.name)] = pr.modes_near_truth(plan.truth);
            if (!out.empty()) {
                OutputDir dir(out);
                write_experiment(result, c, dir);
                dir.finish({"python run_experiment " + preset, c.hash(), plan.seed, result.seconds, result.evaluations, {}});
            }
            return summary;
        },
        py::arg("preset"), py::arg("overrides") = std::vector<std::string>{}, py::arg("out") = "",
        py::arg("jobs") = 1,
        "Run a preset; returns per-study summaries and, for posteriors, the count of modes near the truth");
}
