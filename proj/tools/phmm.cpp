#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "phmm/divergence.hpp"
#include "phmm/dp.hpp"
#include "phmm/error.hpp"
#include "phmm/experiment.hpp"
#include "phmm/inference.hpp"
#include "phmm/io.hpp"

using namespace phmm;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitNumeric = 3;
constexpr int kExitIo = 4;

int exit_code(ErrorCode code) {
    switch (code) {
        case ErrorCode::Io: return kExitIo;
        case ErrorCode::NotConverged:
        case ErrorCode::NoStationarySolution:
        case ErrorCode::BudgetExceeded: return kExitNumeric;
        default: return kExitUsage;
    }
}

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

// Sends `text` to the named file, or to standard output when no name is given.
void emit(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-")
        std::cout << text;
    else
        write_file_atomic(path, text);
}

struct PairInput {
    std::string model;
    std::string pair;
    std::string x;
    std::string y;

    void add_to(CLI::App* cmd) {
        cmd->add_option("-m,--model", model, "model file")->required();
        cmd->add_option("--pair", pair, "file holding x and y as its first two records");
        cmd->add_option("-x,--x", x, "file whose first record is x");
        cmd->add_option("-y,--y", y, "file whose first record is y");
    }
};

struct LoadedPair {
    ModelSpec spec;
    Sequence x;
    Sequence y;
};

std::string first_record(const std::string& path) {
    auto recs = load_sequences(path);
    if (recs.empty()) throw Error(ErrorCode::Parse, path + ": no sequence records");
    return recs[0].text;
}

LoadedPair load_pair(const PairInput& in) {
    LoadedPair p{load_model(in.model), {}, {}};
    std::string xs, ys;
    if (!in.pair.empty()) {
        if (!in.x.empty() || !in.y.empty()) throw Error(ErrorCode::InvalidArgument, "use either --pair or --x/--y");
        auto recs = load_sequences(in.pair);
        if (recs.size() < 2) throw Error(ErrorCode::Parse, in.pair + ": expected two sequence records");
        xs = recs[0].text;
        ys = recs[1].text;
    } else {
        if (in.x.empty() || in.y.empty()) throw Error(ErrorCode::InvalidArgument, "need --pair or both --x and --y");
        xs = first_record(in.x);
        ys = first_record(in.y);
    }
    p.x = p.spec.alphabet.encode(xs);
    p.y = p.spec.alphabet.encode(ys);
    return p;
}

std::vector<std::string> split_names(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s + ",") {
        if (c == ',' || c == ' ') {
            if (!cur.empty()) out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    return out;
}

AxisSpec parse_axis(const std::string& text, const ParametrizationScheme& scheme) {
    std::istringstream in(text);
    AxisSpec a;
    double steps = 0;
    if (!(in >> a.name >> a.lo >> a.hi >> steps) || !(in >> std::ws).eof() || !(steps >= 1) ||
        steps != std::floor(steps))
        throw Error(ErrorCode::InvalidArgument, "axis '" + text + "': expected 'name lo hi steps'");
    if (!scheme.find(a.name)) throw Error(ErrorCode::InvalidArgument, "axis '" + text + "': unknown parameter");
    a.steps = static_cast<std::size_t>(steps);
    return a;
}

// Shared experiment flags: preset < --config < --set < dedicated flags.
struct ConfigInput {
    std::string preset;
    std::string config;
    std::vector<std::string> overrides;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> replicates;
    std::optional<std::size_t> t;

    void add_to(CLI::App* cmd) {
        cmd->add_option("--preset", preset, "preset name")
            ->check(CLI::IsMember(ExperimentConfig::preset_names()));
        cmd->add_option("--config", config, "config file");
        cmd->add_option("--set", overrides, "override, section.key=value (repeatable)");
        cmd->add_option("--seed", seed, "root seed");
        cmd->add_option("-R,--replicates", replicates, "replicate count");
        cmd->add_option("-t,--t", t, "path length");
    }

    ExperimentConfig build() const {
        if (preset.empty() && config.empty()) throw Error(ErrorCode::InvalidArgument, "need --preset or --config");
        ExperimentConfig c = config.empty() ? ExperimentConfig::preset(preset) : ExperimentConfig::load(config);
        if (!preset.empty() && !config.empty()) {
            auto base = ExperimentConfig::preset(preset);
            base.merge(c.doc());
            c = base;
        }
        for (const auto& o : overrides) c.set(o);
        if (seed) c.set("experiment.seed=" + std::to_string(*seed));
        if (replicates) c.set("experiment.replicates=" + std::to_string(*replicates));
        if (t) c.set("experiment.t=" + std::to_string(*t));
        return c;
    }
};

std::string hex_crc(std::string_view text) {
    char buf[9];
    std::snprintf(buf, sizeof buf, "%08x", crc32(text));
    return buf;
}

std::string command_line(int argc, char** argv) {
    std::string s;
    for (int i = 0; i < argc; ++i) {
        if (i) s += ' ';
        s += argv[i];
    }
    return s;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Pair-HMM likelihoods, estimation and divergence experiments", "phmm"};
    app.set_version_flag("--version", std::string(version()));
    app.require_subcommand(1);
    const std::string invocation = command_line(argc, argv);

    // simulate
    ConfigInput sim_cfg;
    std::string sim_out;
    std::size_t sim_jobs = 1;
    auto* sim = app.add_subcommand("simulate", "simulate replicate alignments and sequences");
    sim_cfg.add_to(sim);
    sim->add_option("-o,--out", sim_out, "output directory")->required();
    sim->add_option("-j,--jobs", sim_jobs, "worker threads")->check(CLI::PositiveNumber);

    // loglik
    PairInput ll_in;
    std::string ll_criterion = "q";
    std::optional<std::size_t> ll_t;
    std::string ll_csv;
    auto* ll = app.add_subcommand("loglik", "log-likelihood of one sequence pair");
    ll_in.add_to(ll);
    ll->add_option("-c,--criterion", ll_criterion, "q | fixed-t | marginal")
        ->check(CLI::IsMember({"q", "fixed-t", "marginal"}));
    ll->add_option("-t,--t", ll_t, "path length for fixed-t");
    ll->add_option("--csv", ll_csv, "also write a one-row CSV here");

    // viterbi
    PairInput vt_in;
    std::string vt_csv;
    auto* vt = app.add_subcommand("viterbi", "most probable alignment path");
    vt_in.add_to(vt);
    vt->add_option("--csv", vt_csv, "also write a one-row CSV here");

    // mle
    PairInput mle_in;
    std::string mle_free;
    std::optional<std::size_t> mle_t;
    std::size_t mle_starts = OptimizerConfig{}.multistarts;
    std::string mle_precision = "double";
    std::string mle_csv;
    auto* mle_cmd = app.add_subcommand("mle", "maximum-likelihood estimate from one pair");
    mle_in.add_to(mle_cmd);
    mle_cmd->add_option("--free", mle_free, "estimated coordinates, comma separated (default: all)");
    mle_cmd->add_option("-t,--t", mle_t, "known path length, used as the normalizer");
    mle_cmd->add_option("--multistarts", mle_starts, "Nelder-Mead starts")->check(CLI::PositiveNumber);
    mle_cmd->add_option("--precision", mle_precision, "double | mixed")->check(CLI::IsMember({"double", "mixed"}));
    mle_cmd->add_option("--csv", mle_csv, "write the estimate CSV here instead of standard output");

    // posterior
    PairInput post_in;
    std::string post_axis;
    std::string post_csv;
    auto* post = app.add_subcommand("posterior", "flat-prior grid posterior along one coordinate");
    post_in.add_to(post);
    post->add_option("--axis", post_axis, "'name lo hi steps'")->required();
    post->add_option("--csv", post_csv, "write the grid CSV here instead of standard output");

    // divergence
    std::string div_model, div_theta, div_target = "w", div_csv;
    std::size_t div_t = 2000, div_reps = 20, div_jobs = 1;
    std::uint64_t div_seed = 1;
    auto* div = app.add_subcommand("divergence", "Monte Carlo divergence rate D(theta|theta0)");
    div->add_option("-m,--model", div_model, "true model theta0")->required();
    div->add_option("--theta", div_theta, "model compared against the truth")->required();
    div->add_option("--target", div_target, "w | l")->check(CLI::IsMember({"w", "l"}));
    div->add_option("-t,--t", div_t, "path length")->check(CLI::PositiveNumber);
    div->add_option("-R,--replicates", div_reps, "replicate count")->check(CLI::PositiveNumber);
    div->add_option("--seed", div_seed, "root seed");
    div->add_option("-j,--jobs", div_jobs, "worker threads")->check(CLI::PositiveNumber);
    div->add_option("--csv", div_csv, "write the CSV here instead of standard output");

    // surface
    std::string surf_model, surf_axis1, surf_axis2, surf_out;
    std::size_t surf_t = 2000, surf_reps = 20, surf_jobs = 1;
    std::uint64_t surf_seed = 1;
    bool surf_l = false;
    auto* surf = app.add_subcommand("surface", "w (and l) rates over a one- or two-axis grid");
    surf->add_option("-m,--model", surf_model, "true model theta0; must be a named scheme")->required();
    surf->add_option("--axis1", surf_axis1, "'name lo hi steps'")->required();
    surf->add_option("--axis2", surf_axis2, "'name lo hi steps'");
    surf->add_option("-t,--t", surf_t, "path length")->check(CLI::PositiveNumber);
    surf->add_option("-R,--replicates", surf_reps, "replicate count")->check(CLI::PositiveNumber);
    surf->add_option("--seed", surf_seed, "root seed");
    surf->add_flag("--include-l", surf_l, "also estimate the fixed-t rate");
    surf->add_option("-j,--jobs", surf_jobs, "worker threads")->check(CLI::PositiveNumber);
    surf->add_option("-o,--out", surf_out, "output directory")->required();

    // experiment
    ConfigInput exp_cfg;
    std::string exp_out;
    std::size_t exp_jobs = 1;
    bool exp_dry = false, exp_quiet = false;
    auto* exp = app.add_subcommand("experiment", "run a preset or configured experiment");
    exp_cfg.add_to(exp);
    exp->add_option("-o,--out", exp_out, "output directory");
    exp->add_option("-j,--jobs", exp_jobs, "worker threads")->check(CLI::PositiveNumber);
    exp->add_flag("--dry-run", exp_dry, "print the resolved config and cost estimate, then stop");
    exp->add_flag("-q,--quiet", exp_quiet, "no progress messages");
    exp->final_callback([&] {
        if (!exp_dry && exp_out.empty()) throw CLI::RequiredError("--out");
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kExitUsage;
    }

    const auto start = std::chrono::steady_clock::now();
    try {
        if (*sim) {
            const auto config = sim_cfg.build();
            const auto plan = ExperimentPlan::from(config);
            OutputDir out(sim_out);
            out.write("config.ini", config.to_text());
            write_samples(simulate_plan(plan, sim_jobs), plan.alphabet, plan.seed, out);
            out.finish({invocation, config.hash(), plan.seed, seconds_since(start), 0, {}});
            std::cerr << "wrote " << plan.replicates << " replicates to " << sim_out << '\n';
        } else if (*ll) {
            const auto p = load_pair(ll_in);
            const auto theta = p.spec.theta();
            LogLikResult r;
            if (ll_criterion == "q") {
                r = log_q(theta, p.x, p.y);
            } else if (ll_criterion == "fixed-t") {
                if (!ll_t) throw Error(ErrorCode::InvalidArgument, "fixed-t needs --t");
                r = log_l_fixed_t(theta, p.x, p.y, *ll_t);
            } else {
                r = log_marginal(theta, p.x, p.y);
            }
            std::cout << format_number(r.value) << '\n';
            if (!ll_csv.empty())
                write_file_atomic(ll_csv, std::string("criterion,n,m,t,log_value\n") + to_string(r.criterion) + ',' +
                                              std::to_string(r.n) + ',' + std::to_string(r.m) + ',' +
                                              (r.t ? std::to_string(*r.t) : "") + ',' + format_number(r.value) +
                                              '\n');
        } else if (*vt) {
            const auto p = load_pair(vt_in);
            const auto r = viterbi(p.spec.theta(), p.x, p.y);
            std::string path;
            for (State s : r.path) path += to_char(s);
            std::cout << format_number(r.log_prob) << '\n' << path << '\n';
            if (!vt_csv.empty())
                write_file_atomic(vt_csv, "n,m,length,log_prob,path\n" + std::to_string(p.x.size()) + ',' +
                                              std::to_string(p.y.size()) + ',' + std::to_string(r.path.size()) +
                                              ',' + format_number(r.log_prob) + ',' + path + '\n');
        } else if (*mle_cmd) {
            const auto p = load_pair(mle_in);
            const auto& tmpl = p.spec.scheme;
            if (tmpl.is_raw()) throw Error(ErrorCode::InvalidArgument, "mle needs a named scheme in the model file");
            auto free = mle_free.empty() ? tmpl.names() : split_names(mle_free);
            OptimizerConfig cfg;
            cfg.multistarts = mle_starts;
            cfg.precision = mle_precision == "mixed" ? Precision::Mixed : Precision::Double;
            const auto r = mle(p.x, p.y, tmpl, free, cfg, mle_t.value_or(0));
            EstimationResult er{{"mle", free}, {{0, r}}};
            std::ostringstream os;
            er.write_csv(os, 0);
            emit(mle_csv, os.str());
            if (!r.converged) {
                std::cerr << "phmm: optimizer did not meet its tolerance\n";
                return kExitNumeric;
            }
        } else if (*post) {
            const auto p = load_pair(post_in);
            const auto axis = parse_axis(post_axis, p.spec.scheme);
            const auto g = posterior_grid(p.x, p.y, axis_grid(p.spec.scheme, axis.name, axis.lo, axis.hi, axis.steps));
            const auto values = axis.values();
            std::ostringstream os;
            os << axis.name << ",log_likelihood,posterior\n";
            for (std::size_t i = 0; i < values.size(); ++i)
                os << format_number(values[i]) << ',' << format_number(g.log_likelihood[i]) << ','
                   << format_number(g.posterior[i]) << '\n';
            emit(post_csv, os.str());
            std::cerr << "mode " << axis.name << " = " << format_number(values[g.mode()]) << '\n';
        } else if (*div) {
            const auto theta0 = load_model(div_model).theta();
            const auto theta = load_model(div_theta).theta();
            const auto target = div_target == "w" ? RateTarget::D : RateTarget::Dstar;
            const auto r = divergence(theta, theta0, div_t, div_reps, div_seed, target, div_jobs);
            std::ostringstream os;
            os << "target,t,replicates,seed,mean,se\n"
               << to_string(r.target) << ',' << r.t << ',' << r.replicates << ',' << div_seed << ','
               << format_number(r.mean) << ',' << format_number(r.se) << '\n';
            emit(div_csv, os.str());
        } else if (*surf) {
            const auto spec = load_model(surf_model);
            if (spec.scheme.is_raw()) throw Error(ErrorCode::InvalidArgument, "surface needs a named scheme");
            const auto a1 = parse_axis(surf_axis1, spec.scheme);
            AxisSpec a2;
            if (!surf_axis2.empty()) {
                a2 = parse_axis(surf_axis2, spec.scheme);
            } else {
                // degenerate second axis at the truth of the first free coordinate
                a2.name = a1.name == spec.scheme.names()[0] ? spec.scheme.names().back() : spec.scheme.names()[0];
                a2.lo = a2.hi = spec.scheme.values()[*spec.scheme.find(a2.name)];
                a2.steps = 1;
            }
            SurfaceOptions opts;
            opts.include_l = surf_l;
            opts.jobs = surf_jobs;
            const auto grid = surface(spec.theta(), spec.scheme, a1, a2, surf_t, surf_reps, surf_seed, opts);
            OutputDir out(surf_out);
            std::ostringstream os;
            grid.write_csv(os);
            out.write("model.ini", format_model(spec));
            out.write("surface.csv", os.str());
            out.finish({invocation, hex_crc(format_model(spec)), surf_seed, seconds_since(start), 0, {}});
        } else if (*exp) {
            const auto config = exp_cfg.build();
            const auto plan = ExperimentPlan::from(config);
            for (const auto& w : plan.warnings()) std::cerr << "warning: " << w << '\n';
            if (exp_dry) {
                std::cout << config.to_text() << "\n# config hash " << config.hash() << ", estimated "
                          << format_number(plan.cost()) << " DP cell updates\n";
                return 0;
            }
            ProgressFn progress;
            if (!exp_quiet) progress = [](const std::string& msg) { std::cerr << msg << '\n'; };
            const auto result = run_experiment(plan, exp_jobs, progress);
            OutputDir out(exp_out);
            write_experiment(result, config, out);
            out.finish({invocation, config.hash(), plan.seed, result.seconds, result.evaluations, {}});
            if (!exp_quiet) std::cerr << "wrote " << out.files().size() << " files to " << exp_out << '\n';
        }
    } catch (const Error& e) {
        std::cerr << "phmm: " << e.what() << '\n';
        return exit_code(e.code());
    } catch (const std::exception& e) {
        std::cerr << "phmm: " << e.what() << '\n';
        return kExitNumeric;
    }
    return 0;
}
