#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "phmm/model.hpp"

namespace phmm {

// Key-value text document with [section] headers, `key = value` lines and
// whole-line comments starting with '#' or ';'. Parse errors carry the source
// name and line number.
class KeyValueDoc {
public:
    static KeyValueDoc parse(std::string_view text, std::string source = "<input>");
    static KeyValueDoc load(const std::filesystem::path& path);

    bool has_section(const std::string& section) const;
    bool has(const std::string& section, const std::string& key) const;
    std::optional<std::string> get(const std::string& section, const std::string& key) const;
    std::vector<std::string> keys(const std::string& section) const;

    // Throw Parse with the offending line when the value is missing or bad.
    std::string require(const std::string& section, const std::string& key) const;
    double number(const std::string& section, const std::string& key) const;
    std::vector<double> numbers(const std::string& section, const std::string& key) const;
    std::uint64_t integer(const std::string& section, const std::string& key) const;

    [[noreturn]] void fail(const std::string& section, const std::string& key, const std::string& what) const;
    const std::string& source() const { return source_; }

    std::vector<std::string> sections() const;
    // "file:line" for parsed values, or whatever origin was passed to set().
    std::string origin(const std::string& section, const std::string& key = "") const;
    void set(const std::string& section, const std::string& key, const std::string& value, const std::string& origin);
    void erase_section(const std::string& section);
    // Values (and their origins) from `other` replace those here.
    void merge(const KeyValueDoc& other);
    // Sections and keys in sorted order, one `key = value` per line.
    std::string to_text() const;

private:
    std::string source_;
    std::map<std::string, std::map<std::string, std::string>> values_;
    std::map<std::string, std::string> origins_;  // "section.key" or "section" -> location
};

// A model file: alphabet plus either a named scheme or a raw θ.
//
//   [alphabet]
//   symbols = ACGT
//   [scheme]
//   kind = iid            (or markov)
//   p = 0.25
//   alpha = 0.05
//   f = 0.25 0.25 0.25 0.25
//
// Raw models replace [scheme] with [pi] (rows H, V, D), [f] and [g]
// (key `values`) and [h] (one row per symbol, keyed by the symbol).
struct ModelSpec {
    Alphabet alphabet;
    ParametrizationScheme scheme;

    ModelParams theta() const { return theta_from_beta(scheme); }
};

ModelSpec parse_model(const KeyValueDoc& doc);
ModelSpec parse_model(std::string_view text, std::string source = "<model>");
ModelSpec load_model(const std::filesystem::path& path);
std::string format_model(const ModelSpec& spec);

struct SequenceRecord {
    std::string name;
    std::string text;
};

// FASTA when the first non-blank line starts with '>', otherwise one sequence
// per non-blank line.
std::vector<SequenceRecord> parse_sequences(std::string_view text);
std::vector<SequenceRecord> load_sequences(const std::filesystem::path& path);
std::string format_fasta(const std::vector<SequenceRecord>& records, std::size_t width = 60);

std::string read_file(const std::filesystem::path& path);
// Writes through a temporary file and a rename.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

// %.12g, the fixed output format for every number the tools print.
std::string format_number(double v);

std::uint32_t crc32(std::string_view data);

}  // namespace phmm
