#include <gtest/gtest.h>

#include <filesystem>
#include <random>

#include "phmm/error.hpp"
#include "phmm/io.hpp"
#include "test_support.hpp"

using namespace phmm;

namespace {

std::string parse_error(std::string_view text) {
    try {
        parse_model(text, "model.ini");
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::Parse);
        return e.what();
    }
    ADD_FAILURE() << "no error for:\n" << text;
    return {};
}

}  // namespace

TEST(KeyValueDoc, SectionsKeysAndComments) {
    auto doc = KeyValueDoc::parse("# top\n[a]\nx = 1\n; note\ny = two words\n\n[b.c]\nz=3\n", "t.ini");
    EXPECT_EQ(doc.sections(), (std::vector<std::string>{"a", "b.c"}));
    EXPECT_EQ(doc.require("a", "y"), "two words");
    EXPECT_DOUBLE_EQ(doc.number("b.c", "z"), 3.0);
    EXPECT_EQ(doc.origin("a", "y"), "t.ini:5");
    EXPECT_EQ(doc.integer("a", "x"), 1u);
    EXPECT_FALSE(doc.has("a", "z"));
}

TEST(KeyValueDoc, ErrorsCarryLineNumbers) {
    auto doc = KeyValueDoc::parse("[a]\nx = 1\nn = abc\n", "t.ini");
    try {
        doc.number("a", "n");
        FAIL();
    } catch (const Error& e) {
        EXPECT_NE(std::string(e.what()).find("t.ini:3: [a] n"), std::string::npos) << e.what();
    }
    try {
        KeyValueDoc::parse("[a]\nx = 1\nbroken line\n", "u.ini");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::Parse);
        EXPECT_NE(std::string(e.what()).find("u.ini:3"), std::string::npos) << e.what();
    }
}

TEST(KeyValueDoc, MergeAndCanonicalText) {
    auto a = KeyValueDoc::parse("[s]\nb = 2\na = 1\n", "a");
    auto b = KeyValueDoc::parse("[s]\na = 5\n[r]\nk = v\n", "b");
    a.merge(b);
    EXPECT_EQ(a.to_text(), "[r]\nk = v\n\n[s]\na = 5\nb = 2\n");
    EXPECT_EQ(a.origin("s", "a"), "b:2");
    EXPECT_EQ(a.origin("s", "b"), "a:2");
    auto again = KeyValueDoc::parse(a.to_text());
    EXPECT_EQ(again.to_text(), a.to_text());
}

TEST(ModelFile, IidRoundTrip) {
    const char* text = "[alphabet]\nsymbols = ACGT\n\n[scheme]\nkind = iid\np = 0.25\nalpha = 0.05\n";
    auto spec = parse_model(text);
    EXPECT_EQ(spec.scheme.kind(), "iid");
    EXPECT_EQ(spec.scheme.values(), (std::vector<double>{0.25, 0.05}));
    auto back = parse_model(format_model(spec));
    EXPECT_EQ(back.scheme.values(), spec.scheme.values());
    EXPECT_EQ(back.scheme.base_f, spec.scheme.base_f);
    EXPECT_EQ(format_model(back), format_model(spec));
}

TEST(ModelFile, MarkovRoundTrip) {
    auto spec = parse_model(
        "[scheme]\nkind = markov\npi_HH = 0.5\npi_HV = 0.2\npi_DV = 0.1\npi_VV = 0.6\npi_DH = 0.2\nalpha = 0.05\n"
        "f = 0.1 0.2 0.3 0.4\n");
    EXPECT_NEAR(spec.theta().trans(State::V, State::H), 0.1, 1e-10);
    auto back = parse_model(format_model(spec));
    EXPECT_EQ(back.scheme.values(), spec.scheme.values());
    EXPECT_EQ(back.scheme.base_f, (std::vector<double>{0.1, 0.2, 0.3, 0.4}));
}

TEST(ModelFile, RawRoundTrip) {
    std::mt19937_64 rng(2);
    ModelSpec spec{Alphabet("ACGT"), ParametrizationScheme::raw(test_support::random_theta(rng))};
    auto back = parse_model(format_model(spec));
    // 12 significant digits on every entry
    EXPECT_LT(back.theta().distance(spec.theta()), 1e-11);
    EXPECT_EQ(format_model(back), format_model(spec));
}

TEST(ModelFile, ErrorsPointAtTheLine) {
    EXPECT_NE(parse_error("[scheme]\nkind = iid\np = x\nalpha = 0.05\n").find("model.ini:3: [scheme] p"),
              std::string::npos);
    EXPECT_NE(parse_error("[scheme]\nkind = iid\np = 0.25\n").find("[scheme] alpha: missing"), std::string::npos);
    EXPECT_NE(parse_error("[scheme]\nkind = gtr\n").find("model.ini:2"), std::string::npos);
    EXPECT_NE(parse_error("[scheme]\nkind = iid\np = 0.7\nalpha = 0.05\n").find("model.ini:1"), std::string::npos);
    EXPECT_NE(parse_error("[pi]\nH = 0.5 0.5\n").find("model.ini:2: [pi] H"), std::string::npos);
    EXPECT_NE(parse_error("[alphabet]\nsymbols = AC\n[scheme]\nkind = iid\np = 0.2\nalpha = 1\nf = 0.5 0.25 0.25\n")
                  .find("model.ini:7: [scheme] f: expected 2 values"),
              std::string::npos);
    EXPECT_NE(parse_error("[other]\nx = 1\n").find("needs a [scheme]"), std::string::npos);
}

TEST(Sequences, FastaAndRawFormats) {
    auto fa = parse_sequences(">x first\nACG\nT\n>y\n\n>z\nGG\n");
    ASSERT_EQ(fa.size(), 3u);
    EXPECT_EQ(fa[0].name, "x first");
    EXPECT_EQ(fa[0].text, "ACGT");
    EXPECT_EQ(fa[1].text, "");
    EXPECT_EQ(fa[2].text, "GG");
    auto raw = parse_sequences("\nACGT\r\n-\nTT\n");
    ASSERT_EQ(raw.size(), 3u);
    EXPECT_EQ(raw[0].text, "ACGT");
    EXPECT_EQ(raw[1].text, "");
    EXPECT_EQ(raw[2].name, "seq3");
    auto back = parse_sequences(format_fasta(fa, 2));
    ASSERT_EQ(back.size(), 3u);
    for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(back[i].text, fa[i].text);
}

TEST(Files, AtomicWriteAndRead) {
    const auto dir = std::filesystem::temp_directory_path() / "phmm_test_io";
    std::filesystem::create_directories(dir);
    write_file_atomic(dir / "a.txt", "hello\n");
    EXPECT_EQ(read_file(dir / "a.txt"), "hello\n");
    EXPECT_FALSE(std::filesystem::exists(dir / "a.txt.tmp"));
    try {
        read_file(dir / "missing.txt");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::Io);
        EXPECT_NE(std::string(e.what()).find("missing.txt"), std::string::npos);
    }
    std::filesystem::remove_all(dir);
}

TEST(Formatting, NumbersAndChecksums) {
    EXPECT_EQ(format_number(0.1), "0.1");
    EXPECT_EQ(format_number(-5733.65695915472), "-5733.65695915");
    EXPECT_EQ(format_number(1.0 / 3.0), "0.333333333333");
    EXPECT_EQ(crc32("123456789"), 0xcbf43926u);
}
