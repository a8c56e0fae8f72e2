#include "oodkit/error.hpp"
#include "oodkit/featureset.hpp"

#include <charconv>
#include <cmath>

namespace oodkit {

namespace {

enum class ColumnRole { Feature, Label, Logit };

struct Column {
    ColumnRole role;
    std::size_t index;
};

std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            fields.push_back(line.substr(start));
            return fields;
        }
        fields.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

std::optional<std::size_t> parse_suffix(std::string_view name, std::string_view prefix) {
    if (name.substr(0, prefix.size()) != prefix || name.size() == prefix.size()) return std::nullopt;
    const auto digits = name.substr(prefix.size());
    if (digits.size() > 1 && digits.front() == '0') return std::nullopt;
    std::size_t value = 0;
    auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), value);
    if (ec != std::errc() || ptr != digits.data() + digits.size()) return std::nullopt;
    return value;
}

std::string where(std::size_t row, std::size_t col) {
    return "row " + std::to_string(row) + ", column " + std::to_string(col);
}

void append_float(std::string& out, float v) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    out.append(buf, ptr);
}

} // namespace

FeatureSet parse_csv(std::string_view text, std::size_t n_classes) {
    if (n_classes == 0) throw Error(ErrorKind::BadConfig, "CSV import needs n_classes >= 1");

    std::vector<std::string_view> lines;
    for (std::size_t start = 0; start <= text.size();) {
        auto nl = text.find('\n', start);
        if (nl == std::string_view::npos) nl = text.size();
        auto line = text.substr(start, nl - start);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (!trim(line).empty()) lines.push_back(line);
        start = nl + 1;
    }
    if (lines.empty()) throw Error(ErrorKind::HeaderMismatch, "CSV has no header row");

    const auto header = split_fields(lines.front());
    std::vector<Column> columns;
    std::size_t n_feat = 0;
    std::size_t n_logit = 0;
    bool has_label = false;
    std::vector<bool> seen_feat;
    std::vector<bool> seen_logit;
    auto mark = [](std::vector<bool>& seen, std::size_t idx) {
        if (idx >= seen.size()) seen.resize(idx + 1, false);
        if (seen[idx]) return false;
        seen[idx] = true;
        return true;
    };
    for (std::size_t col = 0; col < header.size(); ++col) {
        const auto name = trim(header[col]);
        if (auto i = parse_suffix(name, "feat_")) {
            if (!mark(seen_feat, *i)) throw Error(ErrorKind::HeaderMismatch, "duplicate column '" + std::string(name) + "'");
            columns.push_back({ColumnRole::Feature, *i});
            ++n_feat;
        } else if (auto j = parse_suffix(name, "logit_")) {
            if (!mark(seen_logit, *j)) throw Error(ErrorKind::HeaderMismatch, "duplicate column '" + std::string(name) + "'");
            columns.push_back({ColumnRole::Logit, *j});
            ++n_logit;
        } else if (name == "label") {
            if (has_label) throw Error(ErrorKind::HeaderMismatch, "duplicate column 'label'");
            columns.push_back({ColumnRole::Label, 0});
            has_label = true;
        } else {
            throw Error(ErrorKind::HeaderMismatch, "unexpected column '" + std::string(name) + "' at column " +
                                                       std::to_string(col));
        }
    }
    if (n_feat == 0 || seen_feat.size() != n_feat) {
        throw Error(ErrorKind::HeaderMismatch, "feature columns must be exactly feat_0..feat_{d-1}");
    }
    if (n_logit != 0 && (seen_logit.size() != n_logit || n_logit != n_classes)) {
        throw Error(ErrorKind::HeaderMismatch, "logit columns must be exactly logit_0..logit_" +
                                                   std::to_string(n_classes - 1));
    }

    const std::size_t n_rows = lines.size() - 1;
    if (n_rows == 0) throw Error(ErrorKind::EmptyFeatureSet, "CSV has no data rows");

    std::vector<float> features(n_rows * n_feat);
    std::optional<std::vector<std::int32_t>> labels;
    if (has_label) labels.emplace(n_rows);
    std::optional<std::vector<float>> logits;
    if (n_logit) logits.emplace(n_rows * n_logit);

    for (std::size_t r = 0; r < n_rows; ++r) {
        const auto fields = split_fields(lines[r + 1]);
        if (fields.size() != columns.size()) {
            throw Error(ErrorKind::RaggedRow, "row " + std::to_string(r) + " has " + std::to_string(fields.size()) +
                                                  " fields, header has " + std::to_string(columns.size()),
                        r);
        }
        for (std::size_t col = 0; col < columns.size(); ++col) {
            const auto field = trim(fields[col]);
            const auto* first = field.data();
            const auto* last = field.data() + field.size();
            if (columns[col].role == ColumnRole::Label) {
                std::int64_t label = 0;
                auto [ptr, ec] = std::from_chars(first, last, label);
                if (ec != std::errc() || ptr != last || field.empty()) {
                    throw Error(ErrorKind::UnparsableNumber, "unparsable label at " + where(r, col), r);
                }
                if (label < 0 || static_cast<std::uint64_t>(label) >= n_classes) {
                    throw Error(ErrorKind::LabelOutOfRange,
                                "label " + std::to_string(label) + " outside [0, " + std::to_string(n_classes) +
                                    ") at " + where(r, col),
                                r);
                }
                (*labels)[r] = static_cast<std::int32_t>(label);
                continue;
            }
            if (!field.empty() && field.front() == '+') ++first;
            float value = 0.0f;
            auto [ptr, ec] = std::from_chars(first, last, value);
            if (ec != std::errc() || ptr != last || first == last) {
                throw Error(ErrorKind::UnparsableNumber, "unparsable number '" + std::string(field) + "' at " + where(r, col), r);
            }
            if (!std::isfinite(value)) {
                throw Error(ErrorKind::NonFiniteValue, "non-finite value at " + where(r, col), r);
            }
            if (columns[col].role == ColumnRole::Feature) {
                features[r * n_feat + columns[col].index] = value;
            } else {
                (*logits)[r * n_logit + columns[col].index] = value;
            }
        }
    }

    std::optional<Matrix<float>> logit_matrix;
    if (logits) logit_matrix.emplace(n_rows, n_logit, std::move(*logits));
    return FeatureSet(Matrix<float>(n_rows, n_feat, std::move(features)), n_classes, std::move(labels),
                      std::move(logit_matrix));
}

FeatureSet import_csv(const std::filesystem::path& path, std::size_t n_classes) {
    const auto bytes = read_file_bytes(path);
    return parse_csv(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()), n_classes);
}

std::string format_csv(const FeatureSet& fs) {
    std::string out;
    const std::size_t d = fs.n_features();
    const std::size_t c = fs.n_classes();
    for (std::size_t j = 0; j < d; ++j) {
        if (j) out += ',';
        out += "feat_" + std::to_string(j);
    }
    if (fs.has_labels()) out += ",label";
    if (fs.has_logits()) {
        for (std::size_t j = 0; j < c; ++j) out += ",logit_" + std::to_string(j);
    }
    out += '\n';
    for (std::size_t i = 0; i < fs.n_samples(); ++i) {
        const auto row = fs.feature_row(i);
        for (std::size_t j = 0; j < d; ++j) {
            if (j) out += ',';
            append_float(out, row[j]);
        }
        if (fs.has_labels()) {
            out += ',';
            out += std::to_string((*fs.labels())[i]);
        }
        if (fs.has_logits()) {
            for (float v : fs.logits()->row(i)) {
                out += ',';
                append_float(out, v);
            }
        }
        out += '\n';
    }
    return out;
}

void export_csv(const FeatureSet& fs, const std::filesystem::path& path) {
    const auto text = format_csv(fs);
    write_file_bytes(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

} // namespace oodkit
