#include "phmm/io.hpp"

#include <boost/crc.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <system_error>

#include "phmm/error.hpp"

namespace phmm {

namespace {

std::string trim(std::string_view s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return std::string(s.substr(a, b - a));
}

std::optional<double> to_double(std::string_view s) {
    double v = 0.0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size()) return std::nullopt;
    return v;
}

std::string join(std::span<const double> v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) out += (i ? " " : "") + format_number(v[i]);
    return out;
}

}  // namespace

KeyValueDoc KeyValueDoc::parse(std::string_view text, std::string source) {
    KeyValueDoc doc;
    doc.source_ = std::move(source);
    boost::property_tree::ptree tree;
    std::istringstream in{std::string(text)};
    try {
        boost::property_tree::read_ini(in, tree);
    } catch (const boost::property_tree::ini_parser_error& e) {
        throw Error(ErrorCode::Parse, doc.source_ + ":" + std::to_string(e.line()) + ": " + e.message());
    }
    for (const auto& [section, body] : tree) {
        if (body.empty()) throw Error(ErrorCode::Parse, doc.source_ + ": key '" + section + "' outside any section");
        for (const auto& [key, value] : body) doc.values_[section][key] = trim(value.data());
    }
    // the tree drops positions, so recover them for error messages
    std::istringstream lines{std::string(text)};
    std::string line, section;
    for (std::size_t no = 1; std::getline(lines, line); ++no) {
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#' || t[0] == ';') continue;
        if (t.front() == '[' && t.back() == ']') {
            section = trim(std::string_view(t).substr(1, t.size() - 2));
            doc.origins_.emplace(section, doc.source_ + ":" + std::to_string(no));
        } else if (auto eq = t.find('='); eq != std::string::npos) {
            doc.origins_.emplace(section + "." + trim(std::string_view(t).substr(0, eq)),
                                 doc.source_ + ":" + std::to_string(no));
        }
    }
    return doc;
}

KeyValueDoc KeyValueDoc::load(const std::filesystem::path& path) { return parse(read_file(path), path.string()); }

bool KeyValueDoc::has_section(const std::string& section) const { return values_.count(section) != 0; }

bool KeyValueDoc::has(const std::string& section, const std::string& key) const { return get(section, key).has_value(); }

std::optional<std::string> KeyValueDoc::get(const std::string& section, const std::string& key) const {
    auto s = values_.find(section);
    if (s == values_.end()) return std::nullopt;
    auto k = s->second.find(key);
    if (k == s->second.end()) return std::nullopt;
    return k->second;
}

std::vector<std::string> KeyValueDoc::keys(const std::string& section) const {
    std::vector<std::string> out;
    auto s = values_.find(section);
    if (s != values_.end())
        for (const auto& [k, v] : s->second) out.push_back(k);
    return out;
}

std::vector<std::string> KeyValueDoc::sections() const {
    std::vector<std::string> out;
    for (const auto& [s, body] : values_) out.push_back(s);
    return out;
}

std::string KeyValueDoc::origin(const std::string& section, const std::string& key) const {
    auto it = origins_.find(key.empty() ? section : section + "." + key);
    if (it == origins_.end()) it = origins_.find(section);
    return it == origins_.end() ? source_ : it->second;
}

void KeyValueDoc::set(const std::string& section, const std::string& key, const std::string& value,
                      const std::string& origin) {
    values_[section][key] = trim(value);
    origins_[section + "." + key] = origin;
    origins_.emplace(section, origin);
}

void KeyValueDoc::erase_section(const std::string& section) {
    values_.erase(section);
    const std::string prefix = section + ".";
    std::erase_if(origins_, [&](const auto& kv) { return kv.first == section || kv.first.starts_with(prefix); });
}

void KeyValueDoc::merge(const KeyValueDoc& other) {
    for (const auto& [section, body] : other.values_)
        for (const auto& [key, value] : body) set(section, key, value, other.origin(section, key));
}

std::string KeyValueDoc::to_text() const {
    std::string out;
    for (const auto& [section, body] : values_) {
        if (!out.empty()) out += "\n";
        out += "[" + section + "]\n";
        for (const auto& [key, value] : body) out += key + " = " + value + "\n";
    }
    return out;
}

void KeyValueDoc::fail(const std::string& section, const std::string& key, const std::string& what) const {
    const std::string where = origin(section, key);
    const std::string name = key.empty() ? "[" + section + "]" : "[" + section + "] " + key;
    throw Error(ErrorCode::Parse, where + ": " + name + ": " + what);
}

std::string KeyValueDoc::require(const std::string& section, const std::string& key) const {
    auto v = get(section, key);
    if (!v) fail(section, key, "missing");
    return *v;
}

double KeyValueDoc::number(const std::string& section, const std::string& key) const {
    const std::string s = require(section, key);
    auto v = to_double(s);
    if (!v) fail(section, key, "expected a number, got '" + s + "'");
    return *v;
}

std::vector<double> KeyValueDoc::numbers(const std::string& section, const std::string& key) const {
    std::istringstream in(require(section, key));
    std::vector<double> out;
    std::string tok;
    while (in >> tok) {
        auto v = to_double(tok);
        if (!v) fail(section, key, "expected numbers, got '" + tok + "'");
        out.push_back(*v);
    }
    return out;
}

std::uint64_t KeyValueDoc::integer(const std::string& section, const std::string& key) const {
    const std::string s = require(section, key);
    std::uint64_t v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size()) fail(section, key, "expected a nonnegative integer, got '" + s + "'");
    return v;
}

ModelSpec parse_model(const KeyValueDoc& doc) {
    Alphabet alphabet;
    if (doc.has("alphabet", "symbols")) {
        try {
            alphabet = Alphabet(doc.require("alphabet", "symbols"));
        } catch (const Error& e) {
            doc.fail("alphabet", "symbols", e.what());
        }
    }
    const std::size_t k = alphabet.size();
    auto sized = [&](const std::string& section, const std::string& key) {
        auto v = doc.numbers(section, key);
        if (v.size() != k)
            doc.fail(section, key, "expected " + std::to_string(k) + " values, got " + std::to_string(v.size()));
        return v;
    };

    ParametrizationScheme scheme;
    auto guarded = [&](const std::string& section, auto&& build) {
        try {
            return build();
        } catch (const Error& e) {
            if (e.code() == ErrorCode::Parse) throw;
            doc.fail(section, "", e.what());
        }
    };
    if (doc.has_section("scheme")) {
        const std::string kind = doc.require("scheme", "kind");
        std::vector<double> f(k, 1.0 / static_cast<double>(k));
        if (doc.has("scheme", "f")) f = sized("scheme", "f");
        if (kind == "iid") {
            const double p = doc.number("scheme", "p"), alpha = doc.number("scheme", "alpha");
            scheme = guarded("scheme", [&] { return ParametrizationScheme::iid(p, alpha, f); });
        } else if (kind == "markov") {
            MarkovScheme m;
            m.pi_hh = doc.number("scheme", "pi_HH");
            m.pi_hv = doc.number("scheme", "pi_HV");
            m.pi_dv = doc.number("scheme", "pi_DV");
            m.pi_vv = doc.number("scheme", "pi_VV");
            m.pi_dh = doc.number("scheme", "pi_DH");
            m.alpha = doc.number("scheme", "alpha");
            scheme = guarded("scheme", [&] { return ParametrizationScheme::markov(m, f); });
        } else {
            doc.fail("scheme", "kind", "unknown scheme '" + kind + "' (expected iid or markov)");
        }
        // surface construction errors (no stationary solution and the like) here
        guarded("scheme", [&] { return theta_from_beta(scheme); });
    } else if (doc.has_section("pi")) {
        Matrix3 pi{};
        const char* rows[3] = {"H", "V", "D"};
        for (std::size_t r = 0; r < 3; ++r) {
            auto row = doc.numbers("pi", rows[r]);
            if (row.size() != 3) doc.fail("pi", rows[r], "expected 3 values in (H, V, D) order");
            std::copy(row.begin(), row.end(), pi[r].begin());
        }
        EmissionTables e;
        e.f = sized("f", "values");
        e.g = sized("g", "values");
        for (std::size_t a = 0; a < k; ++a) {
            auto row = sized("h", std::string(1, alphabet.symbol(static_cast<Symbol>(a))));
            e.h.insert(e.h.end(), row.begin(), row.end());
        }
        const auto theta = guarded("pi", [&] { return ModelParams(TransitionMatrix(pi), e); });
        scheme = ParametrizationScheme::raw(theta);
    } else {
        throw Error(ErrorCode::Parse, doc.source() + ": model needs a [scheme] section or [pi], [f], [g], [h]");
    }
    return {alphabet, scheme};
}

ModelSpec parse_model(std::string_view text, std::string source) {
    return parse_model(KeyValueDoc::parse(text, std::move(source)));
}

ModelSpec load_model(const std::filesystem::path& path) { return parse_model(KeyValueDoc::load(path)); }

std::string format_model(const ModelSpec& spec) {
    std::ostringstream os;
    os << "[alphabet]\nsymbols = " << spec.alphabet.symbols() << "\n\n";
    const auto& s = spec.scheme;
    if (!s.is_raw()) {
        os << "[scheme]\nkind = " << s.kind() << '\n';
        const auto names = s.names();
        const auto values = s.values();
        for (std::size_t i = 0; i < names.size(); ++i) os << names[i] << " = " << format_number(values[i]) << '\n';
        os << "f = " << join(s.base_f) << '\n';
        return os.str();
    }
    const auto& raw = std::get<RawScheme>(s.variant);
    const char* rows[3] = {"H", "V", "D"};
    os << "[pi]\n";
    for (std::size_t r = 0; r < 3; ++r) os << rows[r] << " = " << join(raw.pi[r]) << '\n';
    os << "\n[f]\nvalues = " << join(raw.emissions.f) << "\n\n[g]\nvalues = " << join(raw.emissions.g) << "\n\n[h]\n";
    const std::size_t k = raw.emissions.alphabet_size();
    for (std::size_t a = 0; a < k; ++a)
        os << spec.alphabet.symbol(static_cast<Symbol>(a)) << " = "
           << join(std::span<const double>(raw.emissions.h).subspan(a * k, k)) << '\n';
    return os.str();
}

std::vector<SequenceRecord> parse_sequences(std::string_view text) {
    std::vector<SequenceRecord> out;
    std::istringstream in{std::string(text)};
    std::string line;
    bool fasta = false, decided = false;
    std::size_t unnamed = 0;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const std::string t = trim(line);
        if (!decided) {
            if (t.empty()) continue;
            fasta = t[0] == '>';
            decided = true;
        }
        if (fasta) {
            if (!t.empty() && t[0] == '>') {
                out.push_back({trim(std::string_view(t).substr(1)), ""});
            } else {
                out.back().text += t;
            }
        } else if (!t.empty()) {
            out.push_back({"seq" + std::to_string(++unnamed), t});
        }
    }
    // raw format writes an empty sequence as a lone '-'
    for (auto& r : out)
        if (r.text == "-") r.text.clear();
    return out;
}

std::vector<SequenceRecord> load_sequences(const std::filesystem::path& path) { return parse_sequences(read_file(path)); }

std::string format_fasta(const std::vector<SequenceRecord>& records, std::size_t width) {
    std::string out;
    for (const auto& r : records) {
        out += ">" + r.name + "\n";
        for (std::size_t i = 0; i < r.text.size(); i += width) out += r.text.substr(i, width) + "\n";
    }
    return out;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    if (in.bad()) throw Error(ErrorCode::Io, "error reading " + path.string());
    return ss.str();
}

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
    const auto tmp = std::filesystem::path(path.string() + ".tmp");
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(ErrorCode::Io, "cannot write " + tmp.string());
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) throw Error(ErrorCode::Io, "error writing " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw Error(ErrorCode::Io, "cannot move " + tmp.string() + " to " + path.string() + ": " + ec.message());
}

std::string format_number(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

std::uint32_t crc32(std::string_view data) {
    boost::crc_32_type crc;
    crc.process_bytes(data.data(), data.size());
    return crc.checksum();
}

}  // namespace phmm
