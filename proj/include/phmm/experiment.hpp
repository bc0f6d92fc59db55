#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "phmm/divergence.hpp"
#include "phmm/inference.hpp"
#include "phmm/io.hpp"

namespace phmm {

const char* version();

// Experiment configuration: one key-value document. Precedence, lowest first:
// preset, config file, `section.key=value` overrides. Sections:
//
//   [experiment]        preset, seed, t, replicates, budget
//   [alphabet]          symbols
//   [scheme]            truth, as in a model file
//   [optimizer]         OptimizerConfig fields, precision = double | mixed
//   [study.NAME]        free = names of the estimated coordinates
//   [posterior.NAME]    axis, lo, hi, steps (flat prior)
//   [surface.NAME]      axis1 = "name lo hi steps", axis2 (optional), t,
//                       replicates, include_l = true | false
class ExperimentConfig {
public:
    static ExperimentConfig preset(std::string_view name);
    static std::vector<std::string> preset_names();
    // A config file names its preset in [experiment] preset; without one it
    // must be complete on its own.
    static ExperimentConfig parse(std::string_view text, std::string source = "<config>");
    static ExperimentConfig load(const std::filesystem::path& path);

    void merge(const KeyValueDoc& doc);
    // "section.key=value"; the section may itself contain dots.
    void set(std::string_view assignment);

    const KeyValueDoc& doc() const { return doc_; }
    std::string to_text() const { return doc_.to_text(); }
    // crc32 of the canonical text, as 8 hex digits.
    std::string hash() const;

private:
    KeyValueDoc doc_;
};

struct EstimationStudy {
    std::string name;
    std::vector<std::string> free;
};

struct PosteriorStudy {
    std::string name;
    std::string axis;
    double lo = 0.0;
    double hi = 0.0;
    std::size_t steps = 1;
};

struct SurfaceStudy {
    std::string name;
    AxisSpec axis1;
    AxisSpec axis2;
    std::size_t t = 0;
    std::size_t replicates = 0;
    bool include_l = false;
};

// Typed view of a configuration. Parse errors name the origin of the value.
struct ExperimentPlan {
    std::string preset;
    std::uint64_t seed = 0;
    std::size_t t = 0;
    std::size_t replicates = 0;
    double budget = 1e12;  // DP cell updates
    Alphabet alphabet;
    ParametrizationScheme truth;
    OptimizerConfig optimizer;
    std::vector<EstimationStudy> studies;
    std::vector<PosteriorStudy> posteriors;
    std::vector<SurfaceStudy> surfaces;

    static ExperimentPlan from(const ExperimentConfig& config);

    // Rough DP cell-update count for the whole run.
    double cost() const;
    // Throws BudgetExceeded with the cost estimate.
    void check_budget() const;
    // Notes for runs beyond desk scale.
    std::vector<std::string> warnings() const;
};

struct EstimateRow {
    std::size_t replicate = 0;
    EstimateReport report;
};

struct ParameterSummary {
    std::string name;
    double truth = 0.0;
    double mean = 0.0;
    double sd = 0.0;
    double min = 0.0;
    double max = 0.0;
};

struct EstimationResult {
    EstimationStudy study;
    std::vector<EstimateRow> rows;  // replicate order

    std::vector<ParameterSummary> summary(const ParametrizationScheme& truth) const;
    void write_csv(std::ostream& os, std::uint64_t seed) const;
};

struct PosteriorRow {
    std::size_t replicate = 0;
    PosteriorGrid grid;
};

struct PosteriorResult {
    PosteriorStudy study;
    std::vector<double> axis_values;
    std::vector<PosteriorRow> rows;

    // Grid index closest to the truth value of the axis.
    std::size_t truth_index(const ParametrizationScheme& truth) const;
    // Replicates whose posterior mode is within one grid step of the truth.
    std::size_t modes_near_truth(const ParametrizationScheme& truth) const;
    void write_csv(std::ostream& os, std::uint64_t seed) const;
    void write_summary_csv(std::ostream& os, std::uint64_t seed, const ParametrizationScheme& truth) const;
};

struct SurfaceResult {
    SurfaceStudy study;
    SurfaceGrid grid;
};

struct ExperimentResult {
    ExperimentPlan plan;
    std::vector<EstimationResult> estimation;
    std::vector<PosteriorResult> posteriors;
    std::vector<SurfaceResult> surfaces;
    std::uint64_t evaluations = 0;  // likelihood evaluations over the whole run
    double seconds = 0.0;
};

using ProgressFn = std::function<void(const std::string&)>;

// Every estimation and posterior study runs on the same replicates, seeded by
// (seed, replicate index); each surface simulates its own at its own t.
ExperimentResult run_experiment(const ExperimentPlan& plan, std::size_t jobs = 1, const ProgressFn& progress = {});

std::string estimates_csv_header(const std::vector<std::string>& names);
inline constexpr const char* kSummaryCsvHeader = "study,parameter,truth,mean,sd,min,max,replicates";

struct ManifestFile {
    std::string path;  // relative to the output directory
    std::uint32_t crc32 = 0;
    std::uint64_t bytes = 0;
};

struct RunManifest {
    std::string command;
    std::string config_hash;
    std::uint64_t seed = 0;
    double wall_seconds = 0.0;
    std::uint64_t evaluations = 0;
    std::vector<ManifestFile> files;

    std::string to_json() const;
};

// Collects output files in one directory, each written atomically, and
// writes manifest.json last.
class OutputDir {
public:
    explicit OutputDir(std::filesystem::path root);

    void write(const std::string& name, std::string_view content);
    const std::vector<ManifestFile>& files() const { return files_; }
    const std::filesystem::path& root() const { return root_; }
    void finish(RunManifest manifest);

private:
    std::filesystem::path root_;
    std::vector<ManifestFile> files_;
};

// All CSVs of an experiment plus config.ini.
void write_experiment(const ExperimentResult& result, const ExperimentConfig& config, OutputDir& out);

// Sample files for replicates 0..R-1 under the plan's truth at its t.
std::vector<AlignmentSample> simulate_plan(const ExperimentPlan& plan, std::size_t jobs = 1);
// rep_NNNN.fa holds records x and y, rep_NNNN.path one line over {H, V, D};
// endpoints.csv lists t, n and m per replicate.
void write_samples(const std::vector<AlignmentSample>& samples, const Alphabet& alphabet, std::uint64_t seed,
                   OutputDir& out);

}  // namespace phmm
