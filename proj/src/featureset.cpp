#include "oodkit/featureset.hpp"

#include "oodkit/error.hpp"

#include <json.hpp>

#include <bit>
#include <cmath>
#include <fstream>
#include <limits>

namespace oodkit {

namespace {

using nlohmann::json;

std::string at_offset(std::size_t offset) { return " at byte offset " + std::to_string(offset); }

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int shift = 0; shift < 32; shift += 8) {
        out.push_back(static_cast<std::uint8_t>(v >> shift));
    }
}

std::uint32_t get_u32(std::span<const std::uint8_t> bytes, std::size_t offset) {
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) {
        v = (v << 8) | bytes[offset + static_cast<std::size_t>(i)];
    }
    return v;
}

// Multiplies section dimensions, reporting overflow as "does not fit".
std::optional<std::uint64_t> checked_bytes(std::uint64_t a, std::uint64_t b, std::uint64_t elem) {
    constexpr auto kMax = std::numeric_limits<std::uint64_t>::max();
    if (a != 0 && b > kMax / a) return std::nullopt;
    const std::uint64_t n = a * b;
    if (n != 0 && elem > kMax / n) return std::nullopt;
    return n * elem;
}

json build_meta(const FeatureSet& fs) {
    const std::uint64_t n = fs.n_samples();
    const std::uint64_t d = fs.n_features();
    const std::uint64_t c = fs.n_classes();
    json sections = json::array();
    sections.push_back({{"name", "features"}, {"bytes", n * d * 4}});
    if (fs.has_labels()) sections.push_back({{"name", "labels"}, {"bytes", n * 4}});
    if (fs.has_logits()) sections.push_back({{"name", "logits"}, {"bytes", n * c * 4}});

    json meta = {
        {"n_samples", n},
        {"n_features", d},
        {"n_classes", c},
        {"has_labels", fs.has_labels()},
        {"has_logits", fs.has_logits()},
        {"dtype", "f32"},
        {"label_dtype", "i32"},
        {"layout", "row-major"},
        {"endianness", "little"},
        {"source_tag", fs.source_tag()},
        {"sections", sections},
    };
    if (fs.class_names()) meta["class_names"] = *fs.class_names();
    return meta;
}

template <typename T>
T require_field(const json& meta, const char* key) {
    auto it = meta.find(key);
    if (it == meta.end()) {
        throw Error(ErrorKind::SchemaMismatch, std::string("FSET1 meta: missing field '") + key + "'");
    }
    try {
        return it->get<T>();
    } catch (const json::exception&) {
        throw Error(ErrorKind::SchemaMismatch, std::string("FSET1 meta: field '") + key + "' has the wrong type");
    }
}

void require_string(const json& meta, const char* key, std::string_view expected) {
    const auto value = require_field<std::string>(meta, key);
    if (value != expected) {
        throw Error(ErrorKind::SchemaMismatch, std::string("FSET1 meta: ") + key + " is '" + value +
                                                   "', expected '" + std::string(expected) + "'");
    }
}

} // namespace

FeatureSet::FeatureSet(Matrix<float> features, std::size_t n_classes,
                       std::optional<std::vector<std::int32_t>> labels, std::optional<Matrix<float>> logits,
                       std::optional<std::vector<std::string>> class_names, std::string source_tag)
    : features_(std::move(features)),
      n_classes_(n_classes),
      labels_(std::move(labels)),
      logits_(std::move(logits)),
      class_names_(std::move(class_names)),
      source_tag_(std::move(source_tag)) {
    if (features_.rows() == 0) throw Error(ErrorKind::EmptyFeatureSet, "feature set has no samples");
    if (features_.cols() == 0) throw Error(ErrorKind::DimZero, "feature set has zero feature dimensions");
    if (n_classes_ == 0) throw Error(ErrorKind::BadConfig, "feature set must declare at least one class");

    for (std::size_t i = 0; i < features_.rows(); ++i) {
        for (float v : features_.row(i)) {
            if (!std::isfinite(v)) throw Error(ErrorKind::NonFiniteValue, "non-finite feature value", i);
        }
    }
    if (labels_) {
        if (labels_->size() != features_.rows()) {
            throw Error(ErrorKind::DimensionMismatch, "label count does not match sample count");
        }
        for (std::size_t i = 0; i < labels_->size(); ++i) {
            const auto label = (*labels_)[i];
            if (label < 0 || static_cast<std::size_t>(label) >= n_classes_) {
                throw Error(ErrorKind::LabelOutOfRange,
                            "label " + std::to_string(label) + " outside [0, " + std::to_string(n_classes_) + ")", i);
            }
        }
    }
    if (logits_) {
        if (logits_->rows() != features_.rows() || logits_->cols() != n_classes_) {
            throw Error(ErrorKind::DimensionMismatch, "logits must be n_samples x n_classes");
        }
        for (std::size_t i = 0; i < logits_->rows(); ++i) {
            for (float v : logits_->row(i)) {
                if (!std::isfinite(v)) throw Error(ErrorKind::NonFiniteValue, "non-finite logit value", i);
            }
        }
    }
    if (class_names_) {
        if (class_names_->size() != n_classes_) {
            throw Error(ErrorKind::DimensionMismatch, "class_names must have exactly n_classes entries");
        }
        for (const auto& name : *class_names_) {
            if (name.empty()) throw Error(ErrorKind::BadConfig, "class names must be non-empty");
        }
    }
}

std::vector<std::uint8_t> encode_fset(const FeatureSet& fs) {
    std::string meta;
    try {
        meta = build_meta(fs).dump();
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::SchemaMismatch, std::string("cannot encode FSET1 meta: ") + e.what());
    }
    if (meta.size() > std::numeric_limits<std::uint32_t>::max()) {
        throw Error(ErrorKind::SchemaMismatch, "FSET1 meta too large");
    }

    const std::size_t n = fs.n_samples();
    const std::size_t d = fs.n_features();
    const std::size_t c = fs.n_classes();
    std::vector<std::uint8_t> out;
    out.reserve(kFsetMagic.size() + 4 + meta.size() + 4 * (n * d + n + n * c));
    out.insert(out.end(), kFsetMagic.begin(), kFsetMagic.end());
    put_u32(out, static_cast<std::uint32_t>(meta.size()));
    out.insert(out.end(), meta.begin(), meta.end());

    for (float v : fs.features().values()) put_u32(out, std::bit_cast<std::uint32_t>(v));
    if (fs.labels()) {
        for (std::int32_t v : *fs.labels()) put_u32(out, static_cast<std::uint32_t>(v));
    }
    if (fs.logits()) {
        for (float v : fs.logits()->values()) put_u32(out, std::bit_cast<std::uint32_t>(v));
    }
    return out;
}

FeatureSet decode_fset(std::span<const std::uint8_t> bytes) {
    const std::size_t magic_len = kFsetMagic.size();
    const std::size_t probe = std::min(bytes.size(), magic_len);
    for (std::size_t i = 0; i < probe; ++i) {
        if (bytes[i] != static_cast<std::uint8_t>(kFsetMagic[i])) {
            throw Error(ErrorKind::BadMagic, "FSET1 magic mismatch" + at_offset(i));
        }
    }
    if (bytes.size() < magic_len + 4) {
        throw Error(ErrorKind::TruncatedFile, "file ends before header length" + at_offset(bytes.size()));
    }
    const std::size_t meta_len = get_u32(bytes, magic_len);
    const std::size_t meta_begin = magic_len + 4;
    if (bytes.size() - meta_begin < meta_len) {
        throw Error(ErrorKind::TruncatedFile, "file ends inside JSON meta" + at_offset(bytes.size()));
    }

    json meta;
    try {
        const auto* first = reinterpret_cast<const char*>(bytes.data() + meta_begin);
        meta = json::parse(std::string_view(first, meta_len));
    } catch (const json::exception& e) {
        throw Error(ErrorKind::SchemaMismatch, std::string("FSET1 meta is not valid JSON") + at_offset(meta_begin) +
                                                   ": " + e.what());
    }
    if (!meta.is_object()) throw Error(ErrorKind::SchemaMismatch, "FSET1 meta is not a JSON object");

    require_string(meta, "dtype", "f32");
    require_string(meta, "layout", "row-major");
    require_string(meta, "endianness", "little");
    const auto n = require_field<std::uint64_t>(meta, "n_samples");
    const auto d = require_field<std::uint64_t>(meta, "n_features");
    const auto c = require_field<std::uint64_t>(meta, "n_classes");
    const auto has_labels = require_field<bool>(meta, "has_labels");
    const auto has_logits = require_field<bool>(meta, "has_logits");
    const auto source_tag = require_field<std::string>(meta, "source_tag");
    if (has_labels) require_string(meta, "label_dtype", "i32");
    if (n == 0 || d == 0 || c == 0) {
        throw Error(ErrorKind::SchemaMismatch, "FSET1 meta: n_samples, n_features and n_classes must be >= 1");
    }
    std::optional<std::vector<std::string>> class_names;
    if (auto it = meta.find("class_names"); it != meta.end() && !it->is_null()) {
        class_names = require_field<std::vector<std::string>>(meta, "class_names");
        if (class_names->size() != c) {
            throw Error(ErrorKind::SchemaMismatch, "FSET1 meta: class_names must have n_classes entries");
        }
    }

    // Expected sections derived from counts, compared against the declared ones.
    struct Section {
        std::string name;
        std::uint64_t bytes;
    };
    std::vector<Section> expected;
    auto add_section = [&](const char* name, std::uint64_t a, std::uint64_t b) {
        auto size = checked_bytes(a, b, 4);
        if (!size) throw Error(ErrorKind::MetaSectionMismatch, std::string("section '") + name + "' size overflows");
        expected.push_back({name, *size});
    };
    add_section("features", n, d);
    if (has_labels) add_section("labels", n, 1);
    if (has_logits) add_section("logits", n, c);

    const auto declared = require_field<json>(meta, "sections");
    if (!declared.is_array() || declared.size() != expected.size()) {
        throw Error(ErrorKind::MetaSectionMismatch, "FSET1 meta: declared sections do not match presence flags");
    }
    for (std::size_t i = 0; i < expected.size(); ++i) {
        const auto& s = declared[i];
        if (!s.is_object() || !s.contains("name") || !s.contains("bytes") || !s["name"].is_string() ||
            !s["bytes"].is_number_unsigned()) {
            throw Error(ErrorKind::SchemaMismatch, "FSET1 meta: malformed section entry " + std::to_string(i));
        }
        if (s["name"].get<std::string>() != expected[i].name || s["bytes"].get<std::uint64_t>() != expected[i].bytes) {
            throw Error(ErrorKind::MetaSectionMismatch, "FSET1 meta: section '" + s["name"].get<std::string>() +
                                                            "' declared size disagrees with counts");
        }
    }

    const std::size_t payload_begin = meta_begin + meta_len;
    const std::uint64_t remaining = bytes.size() - payload_begin;
    std::uint64_t total = 0;
    for (const auto& s : expected) {
        if (s.bytes > std::numeric_limits<std::uint64_t>::max() - total) {
            throw Error(ErrorKind::MetaSectionMismatch, "FSET1 meta: section sizes overflow");
        }
        total += s.bytes;
    }
    if (remaining < total) {
        throw Error(ErrorKind::TruncatedFile, "payload shorter than declared sections (" + std::to_string(remaining) +
                                                  " < " + std::to_string(total) + ")" + at_offset(bytes.size()));
    }
    if (remaining > total) {
        throw Error(ErrorKind::MetaSectionMismatch, "payload longer than declared sections (" +
                                                        std::to_string(remaining) + " > " + std::to_string(total) +
                                                        ")" + at_offset(payload_begin + total));
    }

    std::size_t offset = payload_begin;
    auto read_floats = [&](std::size_t rows, std::size_t cols, const char* what) {
        std::vector<float> values(rows * cols);
        for (std::size_t i = 0; i < values.size(); ++i, offset += 4) {
            values[i] = std::bit_cast<float>(get_u32(bytes, offset));
            if (!std::isfinite(values[i])) {
                throw Error(ErrorKind::NonFiniteValue,
                            std::string("non-finite ") + what + " value in row " + std::to_string(i / cols) +
                                at_offset(offset),
                            i / cols);
            }
        }
        return Matrix<float>(rows, cols, std::move(values));
    };

    auto features = read_floats(n, d, "feature");
    std::optional<std::vector<std::int32_t>> labels;
    if (has_labels) {
        labels.emplace(n);
        for (std::size_t i = 0; i < n; ++i, offset += 4) {
            const auto label = static_cast<std::int32_t>(get_u32(bytes, offset));
            if (label < 0 || static_cast<std::uint64_t>(label) >= c) {
                throw Error(ErrorKind::LabelOutOfRange,
                            "label " + std::to_string(label) + " in row " + std::to_string(i) + " outside [0, " +
                                std::to_string(c) + ")" + at_offset(offset),
                            i);
            }
            (*labels)[i] = label;
        }
    }
    std::optional<Matrix<float>> logits;
    if (has_logits) logits = read_floats(n, c, "logit");

    return FeatureSet(std::move(features), c, std::move(labels), std::move(logits), std::move(class_names),
                      source_tag);
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::IoFailure, "cannot open '" + path.string() + "' for reading");
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad()) throw Error(ErrorKind::IoFailure, "read failure on '" + path.string() + "'");
    return bytes;
}

void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::IoFailure, "cannot open '" + path.string() + "' for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(ErrorKind::IoFailure, "write failure on '" + path.string() + "'");
}

FeatureSet load_fset(const std::filesystem::path& path) { return decode_fset(read_file_bytes(path)); }

void save_fset(const FeatureSet& fs, const std::filesystem::path& path) { write_file_bytes(path, encode_fset(fs)); }

FeatureSet load_features(const std::filesystem::path& path, std::optional<std::size_t> n_classes) {
    if (path.extension() == ".csv") {
        if (!n_classes) throw Error(ErrorKind::BadConfig, "CSV input '" + path.string() + "' needs a class count");
        return import_csv(path, *n_classes);
    }
    return load_fset(path);
}

} // namespace oodkit
