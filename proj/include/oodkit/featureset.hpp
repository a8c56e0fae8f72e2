#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string_view>
#include <utility>
#include <span>
#include <string>
#include <vector>

namespace oodkit {

/// Dense row-major matrix.
template <typename T>
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, T fill = T{})
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
    Matrix(std::size_t rows, std::size_t cols, std::vector<T> data);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    bool empty() const noexcept { return data_.empty(); }

    std::span<T> row(std::size_t i) noexcept { return {data_.data() + i * cols_, cols_}; }
    std::span<const T> row(std::size_t i) const noexcept { return {data_.data() + i * cols_, cols_}; }

    T& operator()(std::size_t i, std::size_t j) noexcept { return data_[i * cols_ + j]; }
    const T& operator()(std::size_t i, std::size_t j) const noexcept { return data_[i * cols_ + j]; }

    std::span<T> values() noexcept { return data_; }
    std::span<const T> values() const noexcept { return data_; }

    bool operator==(const Matrix&) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<T> data_;
};

template <typename T>
Matrix<T>::Matrix(std::size_t rows, std::size_t cols, std::vector<T> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_) {
        throw std::invalid_argument("Matrix: data size does not match shape");
    }
}

/// Pre-extracted classifier outputs: one feature vector per sample, with
/// optional labels and logits. Validated on construction and immutable after.
class FeatureSet {
public:
    FeatureSet(Matrix<float> features, std::size_t n_classes,
               std::optional<std::vector<std::int32_t>> labels = std::nullopt,
               std::optional<Matrix<float>> logits = std::nullopt,
               std::optional<std::vector<std::string>> class_names = std::nullopt,
               std::string source_tag = {});

    std::size_t n_samples() const noexcept { return features_.rows(); }
    std::size_t n_features() const noexcept { return features_.cols(); }
    std::size_t n_classes() const noexcept { return n_classes_; }

    const Matrix<float>& features() const noexcept { return features_; }
    std::span<const float> feature_row(std::size_t i) const noexcept { return features_.row(i); }

    bool has_labels() const noexcept { return labels_.has_value(); }
    const std::optional<std::vector<std::int32_t>>& labels() const noexcept { return labels_; }

    bool has_logits() const noexcept { return logits_.has_value(); }
    const std::optional<Matrix<float>>& logits() const noexcept { return logits_; }

    const std::optional<std::vector<std::string>>& class_names() const noexcept { return class_names_; }
    const std::string& source_tag() const noexcept { return source_tag_; }

    bool operator==(const FeatureSet&) const = default;

private:
    Matrix<float> features_;
    std::size_t n_classes_;
    std::optional<std::vector<std::int32_t>> labels_;
    std::optional<Matrix<float>> logits_;
    std::optional<std::vector<std::string>> class_names_;
    std::string source_tag_;
};

// FSET1 container:
//   "FSET1" | u32 LE json length | UTF-8 JSON meta | features f32 LE | labels i32 LE | logits f32 LE
// The meta object carries counts, presence flags, dtype/layout/endianness and
// the byte size of every section. Sections follow in the fixed order above.
inline constexpr std::string_view kFsetMagic = "FSET1";

std::vector<std::uint8_t> encode_fset(const FeatureSet& fs);
FeatureSet decode_fset(std::span<const std::uint8_t> bytes);

FeatureSet load_fset(const std::filesystem::path& path);
void save_fset(const FeatureSet& fs, const std::filesystem::path& path);

/// CSV with header `feat_0..feat_{d-1}[,label][,logit_0..logit_{C-1}]`.
/// Columns are matched by header name; values are rounded to 32 bits.
FeatureSet import_csv(const std::filesystem::path& path, std::size_t n_classes);
FeatureSet parse_csv(std::string_view text, std::size_t n_classes);
void export_csv(const FeatureSet& fs, const std::filesystem::path& path);
std::string format_csv(const FeatureSet& fs);

/// Loads FSET1, or CSV when the extension is `.csv` (which needs `n_classes`).
FeatureSet load_features(const std::filesystem::path& path, std::optional<std::size_t> n_classes);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

} // namespace oodkit
