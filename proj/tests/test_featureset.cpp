#include "oodkit/error.hpp"
#include "oodkit/featureset.hpp"
#include "test_support.hpp"

#include <doctest.h>

#include <bit>
#include <cstring>
#include <limits>

using namespace oodkit;
using oodkit::testing::TempDir;

namespace {

std::vector<std::uint8_t> container(std::string_view magic, const std::string& meta, std::span<const float> payload) {
    std::vector<std::uint8_t> out(magic.begin(), magic.end());
    const auto len = static_cast<std::uint32_t>(meta.size());
    for (int s = 0; s < 32; s += 8) out.push_back(static_cast<std::uint8_t>(len >> s));
    out.insert(out.end(), meta.begin(), meta.end());
    for (float v : payload) {
        const auto bits = std::bit_cast<std::uint32_t>(v);
        for (int s = 0; s < 32; s += 8) out.push_back(static_cast<std::uint8_t>(bits >> s));
    }
    return out;
}

const std::string kMinimalMeta =
    R"({"n_samples":2,"n_features":3,"n_classes":1,"has_labels":false,"has_logits":false,)"
    R"("dtype":"f32","layout":"row-major","endianness":"little","source_tag":"hand",)"
    R"("sections":[{"name":"features","bytes":24}]})";

ErrorKind decode_error(std::span<const std::uint8_t> bytes) {
    try {
        decode_fset(bytes);
    } catch (const Error& e) {
        return e.kind();
    }
    FAIL("decode unexpectedly succeeded");
    return ErrorKind::BadConfig;
}

} // namespace

TEST_CASE("hand-built minimal container decodes") {
    const float payload[] = {1, 2, 3, 4, 5, 6};
    const auto bytes = container("FSET1", kMinimalMeta, payload);
    const auto fs = decode_fset(bytes);
    CHECK(fs.n_samples() == 2);
    CHECK(fs.n_features() == 3);
    CHECK_FALSE(fs.has_labels());
    CHECK_FALSE(fs.has_logits());
    CHECK(fs.feature_row(1)[2] == 6.0f);
    CHECK(fs.source_tag() == "hand");
}

TEST_CASE("format errors are typed") {
    const float payload[] = {1, 2, 3, 4, 5, 6};

    SUBCASE("bad magic") {
        CHECK(decode_error(container("FSET0", kMinimalMeta, payload)) == ErrorKind::BadMagic);
        CHECK(decode_error(container("XSET1", kMinimalMeta, payload)) == ErrorKind::BadMagic);
    }
    SUBCASE("truncated") {
        auto bytes = container("FSET1", kMinimalMeta, payload);
        bytes.pop_back();
        CHECK(decode_error(bytes) == ErrorKind::TruncatedFile);
        CHECK(decode_error(std::span(bytes).first(7)) == ErrorKind::TruncatedFile);
        CHECK(decode_error(std::span(bytes).first(20)) == ErrorKind::TruncatedFile);
    }
    SUBCASE("trailing bytes") {
        auto bytes = container("FSET1", kMinimalMeta, payload);
        bytes.push_back(0);
        CHECK(decode_error(bytes) == ErrorKind::MetaSectionMismatch);
    }
    SUBCASE("declared section size disagrees with counts") {
        auto meta = kMinimalMeta;
        meta.replace(meta.find("\"bytes\":24"), 10, "\"bytes\":28");
        CHECK(decode_error(container("FSET1", meta, payload)) == ErrorKind::MetaSectionMismatch);
    }
    SUBCASE("non-finite feature names its row") {
        const float bad[] = {1, 2, 3, 4, std::numeric_limits<float>::quiet_NaN(), 6};
        try {
            decode_fset(container("FSET1", kMinimalMeta, bad));
            FAIL("expected NonFiniteValue");
        } catch (const Error& e) {
            CHECK(e.kind() == ErrorKind::NonFiniteValue);
            REQUIRE(e.row());
            CHECK(*e.row() == 1);
        }
    }
    SUBCASE("wrong dtype") {
        auto meta = kMinimalMeta;
        meta.replace(meta.find("\"f32\""), 5, "\"f64\"");
        CHECK(decode_error(container("FSET1", meta, payload)) == ErrorKind::SchemaMismatch);
    }
}

TEST_CASE("label outside class range is rejected with its row") {
    Matrix<float> features(2, 1, std::vector<float>{1.0f, 2.0f});
    auto fs = FeatureSet(features, 2, std::vector<std::int32_t>{0, 1});
    auto bytes = encode_fset(fs);
    // Last 4 bytes are the label of row 1.
    bytes[bytes.size() - 4] = 7;
    try {
        decode_fset(bytes);
        FAIL("expected LabelOutOfRange");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::LabelOutOfRange);
        CHECK(e.row().value() == 1);
    }
}

TEST_CASE("single scalar file size is magic + length + meta + payload") {
    TempDir dir;
    const FeatureSet fs(Matrix<float>(1, 1, std::vector<float>{0.0f}), 1);
    save_fset(fs, dir / "one.fset");
    const auto bytes = read_file_bytes(dir / "one.fset");
    REQUIRE(bytes.size() > 9);
    const std::uint32_t meta_len = bytes[5] | (bytes[6] << 8) | (bytes[7] << 16) | (bytes[8] << 24);
    CHECK(bytes.size() == 5 + 4 + meta_len + 4);
    CHECK(load_fset(dir / "one.fset") == fs);
}

TEST_CASE("sections are laid out features, labels, logits") {
    Matrix<float> features(2, 2, std::vector<float>{1, 2, 3, 4});
    Matrix<float> logits(2, 3, std::vector<float>{10, 11, 12, 13, 14, 15});
    const FeatureSet fs(features, 3, std::vector<std::int32_t>{2, 0}, logits);
    const auto bytes = encode_fset(fs);
    const std::size_t meta_len = bytes[5] | (bytes[6] << 8) | (bytes[7] << 16) | (bytes[8] << 24);
    std::size_t off = 9 + meta_len;
    REQUIRE(bytes.size() == off + 4 * (4 + 2 + 6));
    auto f32 = [&](std::size_t at) {
        std::uint32_t bits = bytes[at] | (bytes[at + 1] << 8) | (bytes[at + 2] << 16) | (bytes[at + 3] << 24);
        return std::bit_cast<float>(bits);
    };
    CHECK(f32(off) == 1.0f);
    CHECK(f32(off + 12) == 4.0f);
    off += 16;
    CHECK(bytes[off] == 2);
    CHECK(bytes[off + 4] == 0);
    off += 8;
    CHECK(f32(off) == 10.0f);
    CHECK(f32(off + 20) == 15.0f);
}

TEST_CASE("save/load round trip and byte determinism on random sets") {
    TempDir dir;
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 50; ++trial) {
        const auto fs = oodkit::testing::random_feature_set(rng);
        const auto p = dir / ("r" + std::to_string(trial) + ".fset");
        save_fset(fs, p);
        const auto loaded = load_fset(p);
        CHECK(loaded == fs);
        const auto first = read_file_bytes(p);
        save_fset(loaded, p);
        CHECK(read_file_bytes(p) == first);
    }
}

TEST_CASE("FeatureSet constructor enforces invariants") {
    CHECK_THROWS_AS(FeatureSet(Matrix<float>(0, 2), 1), Error);
    CHECK_THROWS_AS(FeatureSet(Matrix<float>(2, 0), 1), Error);
    CHECK_THROWS_AS(FeatureSet(Matrix<float>(1, 1, std::vector<float>{std::numeric_limits<float>::infinity()}), 1),
                    Error);
    CHECK_THROWS_AS(FeatureSet(Matrix<float>(1, 1), 2, std::vector<std::int32_t>{2}), Error);
    CHECK_THROWS_AS(FeatureSet(Matrix<float>(1, 1), 2, std::nullopt, Matrix<float>(1, 3)), Error);
    CHECK_THROWS_AS(FeatureSet(Matrix<float>(1, 1), 2, std::nullopt, std::nullopt, std::vector<std::string>{"a"}),
                    Error);
}

TEST_CASE("CSV import maps columns by header") {
    SUBCASE("basic row with label") {
        const auto fs = parse_csv("feat_0,feat_1,label\n1.0,2.0,0\n", 1);
        CHECK(fs.n_samples() == 1);
        CHECK(fs.n_features() == 2);
        CHECK((*fs.labels())[0] == 0);
        CHECK(fs.feature_row(0)[1] == 2.0f);
    }
    SUBCASE("columns in any order, logits, CRLF") {
        const auto fs = parse_csv("logit_1,feat_1,label,feat_0,logit_0\r\n5,2,1,1,4\r\n", 2);
        CHECK(fs.feature_row(0)[0] == 1.0f);
        CHECK(fs.feature_row(0)[1] == 2.0f);
        CHECK((*fs.logits())(0, 0) == 4.0f);
        CHECK((*fs.logits())(0, 1) == 5.0f);
    }
    SUBCASE("values are rounded to 32 bits") {
        const auto fs = parse_csv("feat_0\n0.1\n", 1);
        CHECK(fs.feature_row(0)[0] == 0.1f);
    }
}

TEST_CASE("CSV import errors") {
    auto kind_of = [](std::string_view text, std::size_t c) {
        try {
            parse_csv(text, c);
        } catch (const Error& e) {
            return e.kind();
        }
        return ErrorKind::BadConfig;
    };
    CHECK(kind_of("feat_0,feat_1,label\n1.0,2.0,5\n", 3) == ErrorKind::LabelOutOfRange);
    CHECK(kind_of("feat_0,feat_2\n1,2\n", 1) == ErrorKind::HeaderMismatch);
    CHECK(kind_of("feat_0,weight\n1,2\n", 1) == ErrorKind::HeaderMismatch);
    CHECK(kind_of("feat_0,logit_0\n1,2\n", 2) == ErrorKind::HeaderMismatch);
    CHECK(kind_of("feat_0,feat_1\n1\n", 1) == ErrorKind::RaggedRow);
    CHECK(kind_of("feat_0,feat_1\n1,abc\n", 1) == ErrorKind::UnparsableNumber);
    CHECK(kind_of("feat_0\ninf\n", 1) == ErrorKind::NonFiniteValue);
    CHECK(kind_of("feat_0\n", 1) == ErrorKind::EmptyFeatureSet);

    try {
        parse_csv("feat_0,feat_1\n1,2\n3,x\n", 1);
        FAIL("expected UnparsableNumber");
    } catch (const Error& e) {
        CHECK(e.row().value() == 1);
        CHECK(std::string(e.what()).find("column 1") != std::string::npos);
    }
}

TEST_CASE("FSET1 -> CSV -> FSET1 preserves 32-bit values") {
    TempDir dir;
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 40; ++trial) {
        const auto fs = oodkit::testing::random_feature_set(rng);
        export_csv(fs, dir / "x.csv");
        const auto back = import_csv(dir / "x.csv", fs.n_classes());
        CHECK(back.features() == fs.features());
        CHECK(back.labels() == fs.labels());
        CHECK(back.logits() == fs.logits());
        // Bit patterns, not just ==, so signed zeros survive as well.
        for (std::size_t i = 0; i < fs.features().values().size(); ++i) {
            CHECK(std::bit_cast<std::uint32_t>(back.features().values()[i]) ==
                  std::bit_cast<std::uint32_t>(fs.features().values()[i]));
        }
    }
}

TEST_CASE("load_features dispatches on extension") {
    TempDir dir;
    const FeatureSet fs(Matrix<float>(1, 2, std::vector<float>{1.5f, -2.0f}), 2, std::vector<std::int32_t>{1});
    export_csv(fs, dir / "a.csv");
    save_fset(fs, dir / "a.fset");
    CHECK(load_features(dir / "a.csv", 2).features() == fs.features());
    CHECK(load_features(dir / "a.fset", std::nullopt) == fs);
    CHECK_THROWS_AS(load_features(dir / "a.csv", std::nullopt), Error);
    CHECK_THROWS_AS(load_fset(dir / "missing.fset"), Error);
}
