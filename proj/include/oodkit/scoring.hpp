#pragma once

#include "oodkit/centroid.hpp"
#include "oodkit/featureset.hpp"
#include "oodkit/kernels.hpp"

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

// Per-sample OOD scores. Every method is oriented so that a HIGHER score means
// MORE in-distribution; a sample is declared OOD when score <= lambda.

namespace oodkit {

enum class Method { Ncdd, Msp, MaxLogit, Energy, Entropy, Knn };

/// NCDD score variants:
///   Weighted        alpha * D_nonnearest - beta * D_nearest
///   UnweightedDiff  D_nonnearest - D_nearest
///   NonNearestOnly  D_nonnearest
///   NegNearestOnly  -D_nearest
enum class NcddVariant { Weighted, UnweightedDiff, NonNearestOnly, NegNearestOnly };

enum class LogBase { Natural, Base10 };

std::string_view to_string(Method m) noexcept;
std::string_view to_string(NcddVariant v) noexcept;
std::string_view to_string(LogBase b) noexcept;
std::optional<Method> parse_method(std::string_view name);
std::optional<NcddVariant> parse_variant(std::string_view name);
std::optional<LogBase> parse_log_base(std::string_view name);

struct ScoreConfig {
    Method method = Method::Ncdd;
    NcddVariant variant = NcddVariant::Weighted;
    // Weighted NCDD: alpha = log(|z|_1 / 10^alpha1), beta = log(|z|_1 / 10^alpha2).
    double alpha1 = -1.0;
    double alpha2 = 0.0;
    LogBase log_base = LogBase::Natural;
    /// KNN neighbour rank; unset means min(50, N_train).
    std::optional<std::size_t> k;
    double temperature = 1.0;

    /// Throws BadConfig on k == 0, temperature <= 0 or non-finite alphas.
    void validate() const;
    bool operator==(const ScoreConfig&) const = default;
};

std::string config_to_json(const ScoreConfig& cfg);

// ---- centroid distances and NCDD ---------------------------------------

/// Distance decomposition of one sample against a centroid model.
struct NcddTerms {
    std::size_t nearest = 0;    // smallest index attaining the minimum distance
    double d_nearest = 0.0;     // distance to that centroid
    double d_nonnearest = 0.0;  // sum of distances to every other centroid
    double l1_norm = 0.0;       // |z|_1 of the raw feature
};

/// Centroids packed for the distance kernels. Cheap to share across threads.
class CentroidScorer {
public:
    explicit CentroidScorer(const CentroidModel& model, const kernels::KernelTable& kernels = kernels::active());

    std::size_t n_classes() const noexcept { return packed_.rows(); }
    std::size_t n_features() const noexcept { return packed_.dim(); }

    /// Euclidean distance to every centroid, in class order.
    void distances(std::span<const double> z, std::span<double> out) const;
    NcddTerms terms(std::span<const double> z) const;
    double score(std::span<const double> z, const ScoreConfig& cfg) const;

private:
    kernels::PackedRows packed_;
    const kernels::KernelTable* kernels_;
};

std::vector<double> distances_to_centroids(std::span<const double> z, const CentroidModel& model);
std::vector<double> distances_to_centroids(std::span<const float> z, const CentroidModel& model);

/// Splits a distance vector into nearest / non-nearest parts.
NcddTerms ncdd_terms(std::span<const double> distances, double l1_norm);

/// Applies the configured variant to precomputed terms. Throws ZeroL1Norm for
/// the weighted variant at |z|_1 = 0 and SingleClassNonNearest when a variant
/// needs D_nonnearest but the model has one class.
double combine_ncdd(const NcddTerms& terms, std::size_t n_classes, const ScoreConfig& cfg);

double ncdd_score(std::span<const double> z, const CentroidModel& model, const ScoreConfig& cfg);
double ncdd_score(std::span<const float> z, const CentroidModel& model, const ScoreConfig& cfg);

// ---- logit baselines -----------------------------------------------------

/// Max softmax probability of logits / T.
double msp_score(std::span<const double> logits, const ScoreConfig& cfg);
double maxlogit_score(std::span<const double> logits);
/// T * logsumexp(logits / T).
double energy_score(std::span<const double> logits, const ScoreConfig& cfg);
/// Negative Shannon entropy (nats) of softmax(logits / T).
double entropy_score(std::span<const double> logits, const ScoreConfig& cfg);

// ---- KNN -----------------------------------------------------------------

std::size_t effective_k(const ScoreConfig& cfg, std::size_t n_train);

/// Scales v to unit L2 norm in place; zero vectors are left unchanged and
/// reported by returning false.
bool l2_normalize(std::span<double> v) noexcept;

/// Exact brute-force index over L2-normalized training rows.
class KnnIndex {
public:
    KnnIndex(const Matrix<double>& train, const kernels::KernelTable& kernels = kernels::active());
    explicit KnnIndex(const FeatureSet& train, const kernels::KernelTable& kernels = kernels::active());

    std::size_t size() const noexcept { return packed_.rows(); }
    std::size_t n_features() const noexcept { return packed_.dim(); }
    std::size_t zero_norm_rows() const noexcept { return zero_rows_; }

    /// Negative distance from normalized z to its k-th nearest training row.
    /// `zero_query` is set when z had zero norm.
    double score(std::span<const double> z, std::size_t k, bool* zero_query = nullptr) const;

private:
    void build(const Matrix<double>& train);

    kernels::PackedRows packed_;
    const kernels::KernelTable* kernels_;
    std::size_t zero_rows_ = 0;
};

double knn_score(std::span<const double> z, const Matrix<double>& train, const ScoreConfig& cfg);

// ---- batch scoring -------------------------------------------------------

struct ScoreVector {
    std::vector<double> scores;
    ScoreConfig config;
    std::string model_fingerprint;
    /// KNN rows whose feature vector had zero L2 norm.
    std::vector<std::size_t> zero_norm_rows;
};

struct ScoreOptions {
    /// 0 selects default_thread_count().
    std::size_t threads = 0;
    /// Null selects kernels::active().
    const kernels::KernelTable* kernels = nullptr;
};

/// OODKIT_THREADS when set and positive, otherwise hardware concurrency.
std::size_t default_thread_count();

/// Scores every row of `test`. `model` is required for NCDD and `train` for
/// KNN; logit methods need test logits. Errors carry the failing row, and the
/// lowest failing row wins regardless of thread count.
ScoreVector score_set(const FeatureSet& test, const CentroidModel* model, const FeatureSet* train,
                      const ScoreConfig& cfg, const ScoreOptions& options = {});

/// `row,score` with 17 significant digits.
std::string format_scores_csv(std::span<const double> scores);
void write_scores_csv(std::span<const double> scores, const std::filesystem::path& path);
std::vector<double> parse_scores_csv(std::string_view text);
std::vector<double> read_scores_csv(const std::filesystem::path& path);
std::string score_vector_to_json(const ScoreVector& sv);

} // namespace oodkit
