#pragma once

#include "oodkit/featureset.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace oodkit {

inline constexpr std::string_view kCentroidModelVersion = "oodkit-centroid-1";

/// Per-class mean feature vectors fitted on a labeled training split.
struct CentroidModel {
    Matrix<double> centroids;  // n_classes x n_features
    std::vector<std::uint64_t> class_counts;
    std::optional<std::vector<std::string>> class_names;
    std::string fit_fingerprint;

    std::size_t n_classes() const noexcept { return centroids.rows(); }
    std::size_t n_features() const noexcept { return centroids.cols(); }
    std::span<const double> centroid(std::size_t c) const noexcept { return centroids.row(c); }

    /// A single-class model cannot form non-nearest distance sums.
    bool single_class_warning() const noexcept { return n_classes() == 1; }

    bool operator==(const CentroidModel&) const = default;
};

/// Centroid of class c is the mean of all rows labeled c, summed in 64-bit
/// in ascending row order.
CentroidModel fit_centroids(const FeatureSet& train);

/// Same fit over a 64-bit row-major matrix. `fingerprint` is stored verbatim.
CentroidModel fit_centroids(const Matrix<double>& rows, std::span<const std::int32_t> labels, std::size_t n_classes,
                            std::string fingerprint = {});

/// FNV-1a 64 over the FSET1 encoding of `train` followed by the model version.
std::string training_fingerprint(const FeatureSet& train);

std::string model_to_json(const CentroidModel& model);
CentroidModel model_from_json(std::string_view text);
void save_model(const CentroidModel& model, const std::filesystem::path& path);
CentroidModel load_model(const std::filesystem::path& path);

/// Throws DimensionMismatch when a feature width disagrees with the model.
void require_dimension(const CentroidModel& model, std::size_t n_features);

} // namespace oodkit
