#include "phmm/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <mutex>
#include <ostream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "phmm/error.hpp"
#include "phmm/parallel.hpp"

#ifndef PHMM_VERSION
#define PHMM_VERSION "0.0.0"
#endif

namespace phmm {

namespace {

constexpr const char* kIidDesk = R"([experiment]
preset = exp-iid-desk
seed = 20150901
t = 3000
replicates = 50
budget = 1e12

[alphabet]
symbols = ACGT

[scheme]
kind = iid
p = 0.25
alpha = 0.05
f = 0.25 0.25 0.25 0.25

[optimizer]
multistarts = 2
precision = double
tolerance = 1e-8
x_tolerance = 1e-3

[study.profile-p]
free = p

[study.profile-alpha]
free = alpha

[study.joint]
free = p alpha

[posterior.p]
axis = p
lo = 0.05
hi = 0.45
steps = 21
)";

// the Markov likelihood has a second mode with π_HV at the floor; one start
// from the lattice and one from Viterbi counts cover both
constexpr const char* kMarkovDesk = R"([experiment]
preset = exp-markov-desk
seed = 20150902
t = 3000
replicates = 50
budget = 1e12

[alphabet]
symbols = ACGT

[scheme]
kind = markov
pi_HH = 0.5
pi_HV = 0.2
pi_DV = 0.1
pi_VV = 0.6
pi_DH = 0.2
alpha = 0.05
f = 0.25 0.25 0.25 0.25

[optimizer]
multistarts = 2
restarts = 1
precision = mixed
tolerance = 1e-7
x_tolerance = 1e-2

[study.joint]
free = pi_HH pi_HV pi_DV pi_VV pi_DH alpha
)";

constexpr const char* kSurfaceDesk = R"([experiment]
preset = surface-iid-desk
seed = 20150903
t = 2000
replicates = 20
budget = 1e12

[alphabet]
symbols = ACGT

[scheme]
kind = iid
p = 0.25
alpha = 0.05
f = 0.25 0.25 0.25 0.25

[surface.p-w]
axis1 = p 0.05 0.45 17
axis2 = alpha 0.05 0.05 1
t = 2000
replicates = 20
include_l = false

[surface.alpha-w]
axis1 = alpha 0.02 0.1 9
axis2 = p 0.25 0.25 1
t = 2000
replicates = 20
include_l = false

[surface.p-l]
axis1 = p 0.05 0.45 17
axis2 = alpha 0.05 0.05 1
t = 400
replicates = 30
include_l = true

[surface.alpha-l]
axis1 = alpha 0.02 0.1 9
axis2 = p 0.25 0.25 1
t = 400
replicates = 30
include_l = true
)";

const std::map<std::string, const char*, std::less<>>& presets() {
    static const std::map<std::string, const char*, std::less<>> table{
        {"exp-iid-desk", kIidDesk}, {"exp-markov-desk", kMarkovDesk}, {"surface-iid-desk", kSurfaceDesk}};
    return table;
}

const std::set<std::string>& allowed_keys(const std::string& section) {
    static const std::map<std::string, std::set<std::string>> table{
        {"experiment", {"preset", "seed", "t", "replicates", "budget"}},
        {"alphabet", {"symbols"}},
        {"scheme", {"kind", "p", "alpha", "pi_HH", "pi_HV", "pi_DV", "pi_VV", "pi_DH", "f"}},
        {"optimizer",
         {"multistarts", "lattice_per_axis", "max_lattice", "lattice_spread", "template_start", "viterbi_start",
          "viterbi_rounds", "initial_step", "max_evaluations", "restarts", "tolerance", "x_tolerance",
          "coordinate_bound", "delta", "alpha_min", "alpha_max", "precision"}},
        {"study", {"free"}},
        {"posterior", {"axis", "lo", "hi", "steps"}},
        {"surface", {"axis1", "axis2", "t", "replicates", "include_l"}},
    };
    static const std::set<std::string> none;
    auto it = table.find(section);
    return it == table.end() ? none : it->second;
}

// "study.joint" -> ("study", "joint"); plain sections have an empty name
std::pair<std::string, std::string> split_section(const std::string& section) {
    auto dot = section.find('.');
    if (dot == std::string::npos) return {section, ""};
    return {section.substr(0, dot), section.substr(dot + 1)};
}

void check_keys(const KeyValueDoc& doc) {
    for (const auto& section : doc.sections()) {
        const auto [kind, name] = split_section(section);
        const bool named = kind == "study" || kind == "posterior" || kind == "surface";
        if (allowed_keys(kind).empty() || named == name.empty()) doc.fail(section, "", "unknown section");
        for (const auto& key : doc.keys(section))
            if (!allowed_keys(kind).count(key)) doc.fail(section, key, "unknown key");
    }
}

bool boolean(const KeyValueDoc& doc, const std::string& section, const std::string& key) {
    const std::string v = doc.require(section, key);
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    doc.fail(section, key, "expected true or false, got '" + v + "'");
}

std::size_t positive(const KeyValueDoc& doc, const std::string& section, const std::string& key) {
    const auto v = doc.integer(section, key);
    if (v == 0) doc.fail(section, key, "must be positive");
    return static_cast<std::size_t>(v);
}

AxisSpec axis_spec(const KeyValueDoc& doc, const std::string& section, const std::string& key,
                   const ParametrizationScheme& truth) {
    std::istringstream in(doc.require(section, key));
    AxisSpec a;
    double steps = 0;
    if (!(in >> a.name >> a.lo >> a.hi >> steps) || !(in >> std::ws).eof())
        doc.fail(section, key, "expected 'name lo hi steps'");
    if (!truth.find(a.name)) doc.fail(section, key, "unknown parameter '" + a.name + "'");
    if (!(steps >= 1) || steps != std::floor(steps)) doc.fail(section, key, "steps must be a positive integer");
    a.steps = static_cast<std::size_t>(steps);
    return a;
}

OptimizerConfig optimizer_config(const KeyValueDoc& doc) {
    OptimizerConfig c;
    const std::string s = "optimizer";
    auto size = [&](const char* key, std::size_t& field) {
        if (doc.has(s, key)) field = static_cast<std::size_t>(doc.integer(s, key));
    };
    auto real = [&](const char* key, double& field) {
        if (doc.has(s, key)) field = doc.number(s, key);
    };
    auto flag = [&](const char* key, bool& field) {
        if (doc.has(s, key)) field = boolean(doc, s, key);
    };
    size("multistarts", c.multistarts);
    size("lattice_per_axis", c.lattice_per_axis);
    size("max_lattice", c.max_lattice);
    real("lattice_spread", c.lattice_spread);
    flag("template_start", c.template_start);
    flag("viterbi_start", c.viterbi_start);
    size("viterbi_rounds", c.viterbi_rounds);
    real("initial_step", c.initial_step);
    size("max_evaluations", c.max_evaluations);
    size("restarts", c.restarts);
    real("tolerance", c.tolerance);
    real("x_tolerance", c.x_tolerance);
    real("coordinate_bound", c.coordinate_bound);
    real("delta", c.delta);
    real("alpha_min", c.alpha_min);
    real("alpha_max", c.alpha_max);
    if (doc.has(s, "precision")) {
        const std::string p = doc.require(s, "precision");
        if (p == "double") {
            c.precision = Precision::Double;
        } else if (p == "mixed") {
            c.precision = Precision::Mixed;
        } else {
            doc.fail(s, "precision", "expected double or mixed, got '" + p + "'");
        }
    }
    try {
        c.validate();
    } catch (const Error& e) {
        doc.fail(s, "", e.what());
    }
    return c;
}

double mean_cells(const ModelParams& theta, std::size_t t) {
    const auto& mu = theta.mu();
    const double td = static_cast<double>(t);
    return td * (1 - mu[1]) * td * (1 - mu[0]);
}

double sample_sd(const std::vector<double>& v, double mean) {
    if (v.size() < 2) return 0.0;
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

std::string index_name(const char* prefix, std::size_t r, const char* suffix) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%s%04zu%s", prefix, r, suffix);
    return buf;
}

std::string hex8(std::uint32_t v) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%08x", v);
    return buf;
}

}  // namespace

const char* version() { return PHMM_VERSION; }

ExperimentConfig ExperimentConfig::preset(std::string_view name) {
    auto it = presets().find(name);
    if (it == presets().end()) {
        std::string known;
        for (const auto& n : preset_names()) known += (known.empty() ? "" : ", ") + n;
        throw Error(ErrorCode::InvalidArgument, "unknown preset '" + std::string(name) + "' (known: " + known + ")");
    }
    ExperimentConfig c;
    c.doc_ = KeyValueDoc::parse(it->second, "preset " + it->first);
    return c;
}

std::vector<std::string> ExperimentConfig::preset_names() {
    std::vector<std::string> out;
    for (const auto& [name, text] : presets()) out.push_back(name);
    return out;
}

ExperimentConfig ExperimentConfig::parse(std::string_view text, std::string source) {
    const auto doc = KeyValueDoc::parse(text, std::move(source));
    check_keys(doc);
    ExperimentConfig c;
    if (auto name = doc.get("experiment", "preset")) {
        try {
            c = preset(*name);
        } catch (const Error& e) {
            doc.fail("experiment", "preset", e.what());
        }
    }
    c.merge(doc);
    return c;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) { return parse(read_file(path), path.string()); }

void ExperimentConfig::merge(const KeyValueDoc& doc) {
    check_keys(doc);
    // a new kind of scheme brings its own coordinates
    if (auto kind = doc.get("scheme", "kind"); kind && doc_.get("scheme", "kind") != kind) doc_.erase_section("scheme");
    doc_.merge(doc);
}

void ExperimentConfig::set(std::string_view assignment) {
    const auto eq = assignment.find('=');
    const auto dot = assignment.substr(0, eq).rfind('.');
    if (eq == std::string_view::npos || dot == std::string_view::npos || dot == 0)
        throw Error(ErrorCode::InvalidArgument, "override '" + std::string(assignment) + "' is not section.key=value");
    auto trim = [](std::string_view s) {
        while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
        while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
        return std::string(s);
    };
    KeyValueDoc one;
    one.set(trim(assignment.substr(0, dot)), trim(assignment.substr(dot + 1, eq - dot - 1)),
            trim(assignment.substr(eq + 1)), "override '" + std::string(assignment) + "'");
    merge(one);
}

std::string ExperimentConfig::hash() const { return hex8(crc32(to_text())); }

ExperimentPlan ExperimentPlan::from(const ExperimentConfig& config) {
    const KeyValueDoc& doc = config.doc();
    check_keys(doc);
    ExperimentPlan plan;
    plan.preset = doc.get("experiment", "preset").value_or("custom");
    plan.seed = doc.integer("experiment", "seed");
    plan.t = static_cast<std::size_t>(doc.integer("experiment", "t"));
    plan.replicates = positive(doc, "experiment", "replicates");
    if (doc.has("experiment", "budget")) {
        plan.budget = doc.number("experiment", "budget");
        if (!(plan.budget > 0)) doc.fail("experiment", "budget", "must be positive");
    }
    const ModelSpec model = parse_model(doc);
    if (model.scheme.is_raw()) doc.fail("scheme", "", "experiments need an iid or markov scheme");
    plan.alphabet = model.alphabet;
    plan.truth = model.scheme;
    plan.optimizer = optimizer_config(doc);

    for (const auto& section : doc.sections()) {
        const auto [kind, name] = split_section(section);
        if (kind == "study") {
            EstimationStudy st{name, {}};
            std::istringstream in(doc.require(section, "free"));
            for (std::string n; in >> n;) {
                if (!plan.truth.find(n)) doc.fail(section, "free", "unknown parameter '" + n + "'");
                st.free.push_back(n);
            }
            if (st.free.empty()) doc.fail(section, "free", "no parameters listed");
            plan.studies.push_back(std::move(st));
        } else if (kind == "posterior") {
            PosteriorStudy ps{name, doc.require(section, "axis"), doc.number(section, "lo"), doc.number(section, "hi"),
                              positive(doc, section, "steps")};
            if (!plan.truth.find(ps.axis)) doc.fail(section, "axis", "unknown parameter '" + ps.axis + "'");
            plan.posteriors.push_back(std::move(ps));
        } else if (kind == "surface") {
            SurfaceStudy ss;
            ss.name = name;
            ss.axis1 = axis_spec(doc, section, "axis1", plan.truth);
            if (doc.has(section, "axis2")) {
                ss.axis2 = axis_spec(doc, section, "axis2", plan.truth);
            } else {
                // the first other coordinate, held at its true value
                const auto names = plan.truth.names();
                const auto values = plan.truth.values();
                for (std::size_t i = 0; i < names.size(); ++i)
                    if (names[i] != ss.axis1.name) {
                        ss.axis2 = {names[i], values[i], values[i], 1};
                        break;
                    }
            }
            if (ss.axis1.name == ss.axis2.name) doc.fail(section, "axis2", "must differ from axis1");
            ss.t = positive(doc, section, "t");
            ss.replicates = positive(doc, section, "replicates");
            ss.include_l = doc.has(section, "include_l") && boolean(doc, section, "include_l");
            if (ss.include_l && ss.t > kMaxFixedT)
                doc.fail(section, "t", "fixed-t surfaces are limited to t <= " + std::to_string(kMaxFixedT));
            plan.surfaces.push_back(std::move(ss));
        }
    }
    return plan;
}

double ExperimentPlan::cost() const {
    const ModelParams theta0 = theta_from_beta(truth);
    const double cells = mean_cells(theta0, t);
    const double reps = static_cast<double>(replicates);
    double total = 0.0;
    for (const auto& st : studies) {
        const double k = static_cast<double>(st.free.size());
        const double lattice = std::min(std::pow(static_cast<double>(optimizer.lattice_per_axis), k),
                                        static_cast<double>(optimizer.max_lattice));
        // typical Nelder-Mead evaluations per start, from desk runs
        const double per_start = 25.0 * (k + 1) * (k + 1);
        total += reps * (lattice + static_cast<double>(optimizer.multistarts) * per_start) * cells;
    }
    for (const auto& ps : posteriors) total += reps * static_cast<double>(ps.steps) * cells;
    for (const auto& ss : surfaces)
        total += surface_cost(theta0, ss.axis1.steps * ss.axis2.steps, ss.t, ss.replicates, ss.include_l);
    return total;
}

void ExperimentPlan::check_budget() const {
    const double c = cost();
    if (c > budget) {
        std::ostringstream os;
        os << "estimated " << c << " DP cell updates exceeds the budget of " << budget
           << "; raise experiment.budget to run it anyway";
        throw Error(ErrorCode::BudgetExceeded, os.str());
    }
}

std::vector<std::string> ExperimentPlan::warnings() const {
    std::vector<std::string> out;
    const bool estimates = !studies.empty() || !posteriors.empty();
    if (estimates && (t > 3000 || replicates > 50)) {
        std::ostringstream os;
        os << "t=" << t << ", R=" << replicates << " is beyond desk scale (t=3000, R=50); estimated cost " << cost()
           << " DP cell updates";
        out.push_back(os.str());
    }
    for (const auto& ss : surfaces)
        if (ss.t > 2000 || ss.replicates > 50)
            out.push_back("surface " + ss.name + " at t=" + std::to_string(ss.t) + ", R=" +
                          std::to_string(ss.replicates) + " is beyond desk scale");
    return out;
}

std::vector<ParameterSummary> EstimationResult::summary(const ParametrizationScheme& truth) const {
    std::vector<ParameterSummary> out;
    const auto tv = truth.values();
    for (std::size_t c = 0; c < study.free.size(); ++c) {
        std::vector<double> v;
        for (const auto& row : rows) v.push_back(row.report.free_values.at(c));
        ParameterSummary s;
        s.name = study.free[c];
        s.truth = tv[*truth.find(s.name)];
        if (!v.empty()) {
            double sum = 0.0;
            for (double x : v) sum += x;
            s.mean = sum / static_cast<double>(v.size());
            s.sd = sample_sd(v, s.mean);
            s.min = *std::min_element(v.begin(), v.end());
            s.max = *std::max_element(v.begin(), v.end());
        }
        out.push_back(s);
    }
    return out;
}

std::string estimates_csv_header(const std::vector<std::string>& names) {
    std::string h = "replicate_index,seed";
    for (const auto& n : names) h += "," + n;
    return h + ",criterion,evaluations,converged,weakly_identified";
}

void EstimationResult::write_csv(std::ostream& os, std::uint64_t seed) const {
    os << estimates_csv_header(study.free) << '\n';
    for (const auto& row : rows) {
        os << row.replicate << ',' << seed;
        for (double v : row.report.free_values) os << ',' << format_number(v);
        os << ',' << format_number(row.report.criterion_value) << ',' << row.report.evaluations << ','
           << (row.report.converged ? 1 : 0) << ',' << (row.report.weakly_identified ? 1 : 0) << '\n';
    }
}

std::size_t PosteriorResult::truth_index(const ParametrizationScheme& truth) const {
    const double v = truth.values()[*truth.find(study.axis)];
    std::size_t best = 0;
    for (std::size_t i = 1; i < axis_values.size(); ++i)
        if (std::abs(axis_values[i] - v) < std::abs(axis_values[best] - v)) best = i;
    return best;
}

std::size_t PosteriorResult::modes_near_truth(const ParametrizationScheme& truth) const {
    const std::size_t ti = truth_index(truth);
    std::size_t count = 0;
    for (const auto& row : rows) {
        const std::size_t m = row.grid.mode();
        if ((m > ti ? m - ti : ti - m) <= 1) ++count;
    }
    return count;
}

void PosteriorResult::write_csv(std::ostream& os, std::uint64_t seed) const {
    os << "replicate_index,seed," << study.axis << ",log_likelihood,posterior\n";
    for (const auto& row : rows)
        for (std::size_t i = 0; i < axis_values.size(); ++i)
            os << row.replicate << ',' << seed << ',' << format_number(axis_values[i]) << ','
               << format_number(row.grid.log_likelihood[i]) << ',' << format_number(row.grid.posterior[i]) << '\n';
}

void PosteriorResult::write_summary_csv(std::ostream& os, std::uint64_t seed, const ParametrizationScheme& truth) const {
    const std::size_t ti = truth_index(truth);
    os << "replicate_index,seed,mode,mode_posterior,mass_near_truth,mode_near_truth\n";
    for (const auto& row : rows) {
        const std::size_t m = row.grid.mode();
        double near = 0.0;
        for (std::size_t i = ti > 0 ? ti - 1 : 0; i <= std::min(ti + 1, axis_values.size() - 1); ++i)
            near += row.grid.posterior[i];
        os << row.replicate << ',' << seed << ',' << format_number(axis_values[m]) << ','
           << format_number(row.grid.posterior[m]) << ',' << format_number(near) << ','
           << ((m > ti ? m - ti : ti - m) <= 1 ? 1 : 0) << '\n';
    }
}

ExperimentResult run_experiment(const ExperimentPlan& plan, std::size_t jobs, const ProgressFn& progress) {
    const auto start = std::chrono::steady_clock::now();
    auto say = [&](const std::string& msg) {
        if (progress) progress(msg);
    };
    if ((!plan.studies.empty() || !plan.posteriors.empty()) && (plan.t == 0 || plan.replicates == 0))
        throw Error(ErrorCode::InvalidArgument, "estimation needs t >= 1 and replicates >= 1");
    plan.check_budget();
    ExperimentResult result;
    result.plan = plan;
    const ModelParams theta0 = theta_from_beta(plan.truth);
    const std::size_t R = plan.replicates;

    std::vector<AlignmentSample> samples;
    if (!plan.studies.empty() || !plan.posteriors.empty()) {
        say("simulating " + std::to_string(R) + " replicates at t=" + std::to_string(plan.t));
        samples = simulate_replicates(theta0, plan.t, R, plan.seed, jobs);
    }

    std::mutex mu;
    for (const auto& st : plan.studies) {
        EstimationResult er;
        er.study = st;
        er.rows.resize(R);
        std::size_t done = 0;
        parallel_for(R, jobs, [&](std::size_t r, std::size_t) {
            er.rows[r] = {r, mle(samples[r].x, samples[r].y, plan.truth, st.free, plan.optimizer, plan.t)};
            std::lock_guard lock(mu);
            ++done;
            if (done % 10 == 0 || done == R)
                say("study " + st.name + ": " + std::to_string(done) + "/" + std::to_string(R) + " replicates");
        });
        for (const auto& row : er.rows) result.evaluations += row.report.evaluations;
        result.estimation.push_back(std::move(er));
    }

    for (const auto& ps : plan.posteriors) {
        PosteriorResult pr;
        pr.study = ps;
        const auto grid = axis_grid(plan.truth, ps.axis, ps.lo, ps.hi, ps.steps);
        for (const auto& g : grid) pr.axis_values.push_back(g.values()[*g.find(ps.axis)]);
        pr.rows.resize(R);
        parallel_for(R, jobs, [&](std::size_t r, std::size_t) {
            pr.rows[r] = {r, posterior_grid(samples[r].x, samples[r].y, grid)};
        });
        say("posterior " + ps.name + ": done");
        result.evaluations += static_cast<std::uint64_t>(R * ps.steps);
        result.posteriors.push_back(std::move(pr));
    }

    for (const auto& ss : plan.surfaces) {
        SurfaceOptions opts;
        opts.include_l = ss.include_l;
        opts.jobs = jobs;
        opts.budget = plan.budget;
        say("surface " + ss.name + ": " + std::to_string(ss.axis1.steps * ss.axis2.steps) + " cells, t=" +
            std::to_string(ss.t) + ", R=" + std::to_string(ss.replicates));
        result.surfaces.push_back({ss, surface(theta0, plan.truth, ss.axis1, ss.axis2, ss.t, ss.replicates, plan.seed, opts)});
        result.evaluations +=
            static_cast<std::uint64_t>(ss.axis1.steps * ss.axis2.steps * ss.replicates * (ss.include_l ? 2 : 1));
    }
    result.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return result;
}

std::string RunManifest::to_json() const {
    nlohmann::ordered_json j;
    j["tool"] = "phmm";
    j["version"] = version();
    j["command"] = command;
    j["config_hash"] = config_hash;
    j["seed"] = seed;
    j["wall_clock_seconds"] = wall_seconds;
    j["evaluations"] = evaluations;
    auto arr = nlohmann::ordered_json::array();
    for (const auto& f : files) arr.push_back({{"path", f.path}, {"crc32", hex8(f.crc32)}, {"bytes", f.bytes}});
    j["files"] = std::move(arr);
    return j.dump(2) + "\n";
}

OutputDir::OutputDir(std::filesystem::path root) : root_(std::move(root)) {
    std::error_code ec;
    std::filesystem::create_directories(root_, ec);
    if (ec) throw Error(ErrorCode::Io, "cannot create " + root_.string() + ": " + ec.message());
}

void OutputDir::write(const std::string& name, std::string_view content) {
    write_file_atomic(root_ / name, content);
    files_.push_back({name, crc32(content), content.size()});
}

void OutputDir::finish(RunManifest manifest) {
    manifest.files = files_;
    write_file_atomic(root_ / "manifest.json", manifest.to_json());
}

void write_experiment(const ExperimentResult& result, const ExperimentConfig& config, OutputDir& out) {
    const auto& plan = result.plan;
    out.write("config.ini", config.to_text());
    std::ostringstream summary;
    summary << kSummaryCsvHeader << '\n';
    for (const auto& er : result.estimation) {
        std::ostringstream os;
        er.write_csv(os, plan.seed);
        out.write("estimates_" + er.study.name + ".csv", os.str());
        for (const auto& s : er.summary(plan.truth))
            summary << er.study.name << ',' << s.name << ',' << format_number(s.truth) << ',' << format_number(s.mean)
                    << ',' << format_number(s.sd) << ',' << format_number(s.min) << ',' << format_number(s.max) << ','
                    << er.rows.size() << '\n';
    }
    if (!result.estimation.empty()) out.write("summary.csv", summary.str());
    for (const auto& pr : result.posteriors) {
        std::ostringstream os, ss;
        pr.write_csv(os, plan.seed);
        pr.write_summary_csv(ss, plan.seed, plan.truth);
        out.write("posterior_" + pr.study.name + ".csv", os.str());
        out.write("posterior_" + pr.study.name + "_summary.csv", ss.str());
    }
    for (const auto& sr : result.surfaces) {
        std::ostringstream os;
        sr.grid.write_csv(os);
        out.write("surface_" + sr.study.name + ".csv", os.str());
    }
}

std::vector<AlignmentSample> simulate_plan(const ExperimentPlan& plan, std::size_t jobs) {
    return simulate_replicates(theta_from_beta(plan.truth), plan.t, plan.replicates, plan.seed, jobs);
}

void write_samples(const std::vector<AlignmentSample>& samples, const Alphabet& alphabet, std::uint64_t seed,
                   OutputDir& out) {
    std::ostringstream endpoints;
    endpoints << "replicate_index,seed,t,n,m\n";
    for (std::size_t r = 0; r < samples.size(); ++r) {
        const auto& s = samples[r];
        out.write(index_name("rep_", r, ".fa"),
                  format_fasta({{"x", alphabet.decode(s.x)}, {"y", alphabet.decode(s.y)}}));
        std::string path;
        for (State st : s.path) path += to_char(st);
        out.write(index_name("rep_", r, ".path"), path + "\n");
        endpoints << r << ',' << seed << ',' << s.t() << ',' << s.x.size() << ',' << s.y.size() << '\n';
    }
    out.write("endpoints.csv", endpoints.str());
}

}  // namespace phmm
