#include "oodkit/scoring.hpp"

#include "oodkit/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <mutex>
#include <thread>

namespace oodkit {

std::string_view to_string(Method m) noexcept {
    switch (m) {
    case Method::Ncdd: return "ncdd";
    case Method::Msp: return "msp";
    case Method::MaxLogit: return "maxlogit";
    case Method::Energy: return "energy";
    case Method::Entropy: return "entropy";
    case Method::Knn: return "knn";
    }
    return "unknown";
}

std::string_view to_string(NcddVariant v) noexcept {
    switch (v) {
    case NcddVariant::Weighted: return "weighted";
    case NcddVariant::UnweightedDiff: return "unweighted_diff";
    case NcddVariant::NonNearestOnly: return "nonnearest_only";
    case NcddVariant::NegNearestOnly: return "neg_nearest_only";
    }
    return "unknown";
}

std::string_view to_string(LogBase b) noexcept { return b == LogBase::Natural ? "natural" : "base10"; }

std::optional<Method> parse_method(std::string_view name) {
    for (auto m : {Method::Ncdd, Method::Msp, Method::MaxLogit, Method::Energy, Method::Entropy, Method::Knn}) {
        if (to_string(m) == name) return m;
    }
    return std::nullopt;
}

std::optional<NcddVariant> parse_variant(std::string_view name) {
    for (auto v : {NcddVariant::Weighted, NcddVariant::UnweightedDiff, NcddVariant::NonNearestOnly,
                   NcddVariant::NegNearestOnly}) {
        if (to_string(v) == name) return v;
    }
    return std::nullopt;
}

std::optional<LogBase> parse_log_base(std::string_view name) {
    if (name == "natural" || name == "e") return LogBase::Natural;
    if (name == "base10" || name == "10") return LogBase::Base10;
    return std::nullopt;
}

void ScoreConfig::validate() const {
    if (k && *k == 0) throw Error(ErrorKind::BadConfig, "k must be >= 1");
    if (!(temperature > 0.0) || !std::isfinite(temperature)) {
        throw Error(ErrorKind::BadConfig, "temperature must be finite and > 0");
    }
    if (!std::isfinite(alpha1) || !std::isfinite(alpha2)) throw Error(ErrorKind::BadConfig, "alpha1/alpha2 must be finite");
}

std::string config_to_json(const ScoreConfig& cfg) {
    nlohmann::ordered_json doc;
    doc["method"] = to_string(cfg.method);
    if (cfg.method == Method::Ncdd) {
        doc["variant"] = to_string(cfg.variant);
        doc["alpha1"] = cfg.alpha1;
        doc["alpha2"] = cfg.alpha2;
        doc["log_base"] = to_string(cfg.log_base);
    }
    if (cfg.method == Method::Knn) doc["k"] = cfg.k ? nlohmann::ordered_json(*cfg.k) : nlohmann::ordered_json();
    if (cfg.method == Method::Msp || cfg.method == Method::Energy || cfg.method == Method::Entropy) {
        doc["temperature"] = cfg.temperature;
    }
    return doc.dump();
}

// ---- centroid distances and NCDD ---------------------------------------

CentroidScorer::CentroidScorer(const CentroidModel& model, const kernels::KernelTable& kernels)
    : packed_(model.centroids.values(), model.n_classes(), model.n_features()), kernels_(&kernels) {}

void CentroidScorer::distances(std::span<const double> z, std::span<double> out) const {
    if (z.size() != n_features()) {
        throw Error(ErrorKind::DimensionMismatch, "feature has " + std::to_string(z.size()) + " dimensions, model has " +
                                                      std::to_string(n_features()));
    }
    kernels::squared_distances(*kernels_, packed_, z, out);
    for (double& d : out) d = std::sqrt(d);
}

NcddTerms CentroidScorer::terms(std::span<const double> z) const {
    std::vector<double> dist(n_classes());
    distances(z, dist);
    return ncdd_terms(dist, kernels::l1_norm(z));
}

double CentroidScorer::score(std::span<const double> z, const ScoreConfig& cfg) const {
    return combine_ncdd(terms(z), n_classes(), cfg);
}

std::vector<double> distances_to_centroids(std::span<const double> z, const CentroidModel& model) {
    std::vector<double> out(model.n_classes());
    CentroidScorer(model).distances(z, out);
    return out;
}

std::vector<double> distances_to_centroids(std::span<const float> z, const CentroidModel& model) {
    const std::vector<double> wide(z.begin(), z.end());
    return distances_to_centroids(std::span<const double>(wide), model);
}

NcddTerms ncdd_terms(std::span<const double> distances, double l1_norm) {
    NcddTerms t;
    t.l1_norm = l1_norm;
    if (distances.empty()) return t;
    for (std::size_t c = 1; c < distances.size(); ++c) {
        if (distances[c] < distances[t.nearest]) t.nearest = c;
    }
    t.d_nearest = distances[t.nearest];
    for (std::size_t c = 0; c < distances.size(); ++c) {
        if (c != t.nearest) t.d_nonnearest += distances[c];
    }
    return t;
}

double combine_ncdd(const NcddTerms& terms, std::size_t n_classes, const ScoreConfig& cfg) {
    if (cfg.variant != NcddVariant::NegNearestOnly && n_classes < 2) {
        throw Error(ErrorKind::SingleClassNonNearest, "variant '" + std::string(to_string(cfg.variant)) +
                                                          "' needs at least two classes");
    }
    switch (cfg.variant) {
    case NcddVariant::Weighted: {
        if (terms.l1_norm == 0.0) throw Error(ErrorKind::ZeroL1Norm, "feature has zero L1 norm");
        auto log_fn = cfg.log_base == LogBase::Natural ? static_cast<double (*)(double)>(std::log)
                                                       : static_cast<double (*)(double)>(std::log10);
        const double alpha = log_fn(terms.l1_norm / std::pow(10.0, cfg.alpha1));
        const double beta = log_fn(terms.l1_norm / std::pow(10.0, cfg.alpha2));
        return alpha * terms.d_nonnearest - beta * terms.d_nearest;
    }
    case NcddVariant::UnweightedDiff:
        return terms.d_nonnearest - terms.d_nearest;
    case NcddVariant::NonNearestOnly:
        return terms.d_nonnearest;
    case NcddVariant::NegNearestOnly:
        return -terms.d_nearest;
    }
    return 0.0;
}

double ncdd_score(std::span<const double> z, const CentroidModel& model, const ScoreConfig& cfg) {
    return CentroidScorer(model).score(z, cfg);
}

double ncdd_score(std::span<const float> z, const CentroidModel& model, const ScoreConfig& cfg) {
    const std::vector<double> wide(z.begin(), z.end());
    return ncdd_score(std::span<const double>(wide), model, cfg);
}

// ---- logit baselines -----------------------------------------------------

namespace {

void require_logits(std::span<const double> logits) {
    if (logits.empty()) throw Error(ErrorKind::MissingLogits, "logit vector is empty");
}

// Scaled, max-shifted logits: s_i = (x_i - max) / T, so max(s) = 0.
struct Shifted {
    double max;
    double sum_exp;  // sum exp(s_i), >= 1
};

Shifted shift(std::span<const double> logits, double temperature) {
    const double mx = *std::max_element(logits.begin(), logits.end());
    double sum = 0.0;
    for (double x : logits) sum += std::exp((x - mx) / temperature);
    return {mx, sum};
}

} // namespace

double msp_score(std::span<const double> logits, const ScoreConfig& cfg) {
    require_logits(logits);
    return 1.0 / shift(logits, cfg.temperature).sum_exp;
}

double maxlogit_score(std::span<const double> logits) {
    require_logits(logits);
    return *std::max_element(logits.begin(), logits.end());
}

double energy_score(std::span<const double> logits, const ScoreConfig& cfg) {
    require_logits(logits);
    const auto s = shift(logits, cfg.temperature);
    return s.max + cfg.temperature * std::log(s.sum_exp);
}

double entropy_score(std::span<const double> logits, const ScoreConfig& cfg) {
    require_logits(logits);
    // H = log S - sum_i p_i s_i with p_i = exp(s_i) / S; terms with p_i = 0
    // contribute nothing.
    const auto s = shift(logits, cfg.temperature);
    double weighted = 0.0;
    for (double x : logits) {
        const double si = (x - s.max) / cfg.temperature;
        const double e = std::exp(si);
        if (e > 0.0) weighted += e * si;
    }
    const double entropy = std::log(s.sum_exp) - weighted / s.sum_exp;
    return -std::max(entropy, 0.0);
}

// ---- KNN -----------------------------------------------------------------

std::size_t effective_k(const ScoreConfig& cfg, std::size_t n_train) {
    return cfg.k ? *cfg.k : std::min<std::size_t>(50, n_train);
}

bool l2_normalize(std::span<double> v) noexcept {
    const double norm = kernels::l2_norm(v);
    if (norm == 0.0) return false;
    for (double& x : v) x /= norm;
    return true;
}

KnnIndex::KnnIndex(const Matrix<double>& train, const kernels::KernelTable& kernels) : kernels_(&kernels) {
    build(train);
}

KnnIndex::KnnIndex(const FeatureSet& train, const kernels::KernelTable& kernels) : kernels_(&kernels) {
    const auto values = train.features().values();
    build(Matrix<double>(train.n_samples(), train.n_features(), std::vector<double>(values.begin(), values.end())));
}

void KnnIndex::build(const Matrix<double>& train) {
    if (train.rows() == 0) throw Error(ErrorKind::EmptyTrainSet, "KNN needs at least one training row");
    Matrix<double> normalized = train;
    for (std::size_t i = 0; i < normalized.rows(); ++i) {
        if (!l2_normalize(normalized.row(i))) ++zero_rows_;
    }
    packed_ = kernels::PackedRows(normalized.values(), normalized.rows(), normalized.cols());
}

double KnnIndex::score(std::span<const double> z, std::size_t k, bool* zero_query) const {
    if (k == 0) throw Error(ErrorKind::BadConfig, "k must be >= 1");
    if (k > size()) {
        throw Error(ErrorKind::KTooLarge, "k = " + std::to_string(k) + " exceeds training size " + std::to_string(size()));
    }
    if (z.size() != n_features()) {
        throw Error(ErrorKind::DimensionMismatch, "feature has " + std::to_string(z.size()) +
                                                      " dimensions, training set has " + std::to_string(n_features()));
    }
    std::vector<double> query(z.begin(), z.end());
    const bool normalized = l2_normalize(query);
    if (zero_query) *zero_query = !normalized;

    std::vector<double> sq(size());
    kernels::squared_distances(*kernels_, packed_, query, sq);
    // The k-th smallest value does not depend on how equal distances are ordered.
    std::nth_element(sq.begin(), sq.begin() + static_cast<std::ptrdiff_t>(k - 1), sq.end());
    return -std::sqrt(sq[k - 1]);
}

double knn_score(std::span<const double> z, const Matrix<double>& train, const ScoreConfig& cfg) {
    cfg.validate();
    if (train.rows() == 0) throw Error(ErrorKind::EmptyTrainSet, "KNN needs at least one training row");
    return KnnIndex(train).score(z, effective_k(cfg, train.rows()));
}

// ---- batch scoring -------------------------------------------------------

std::size_t default_thread_count() {
    if (const char* env = std::getenv("OODKIT_THREADS"); env && *env) {
        std::size_t n = 0;
        auto [ptr, ec] = std::from_chars(env, env + std::char_traits<char>::length(env), n);
        if (ec == std::errc() && *ptr == '\0' && n > 0) return n;
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

namespace {

// Runs fn(row) over [0, n) in contiguous chunks; each row writes only its own
// output slot, so results do not depend on the chunking.
template <typename Fn>
void parallel_rows(std::size_t n, std::size_t threads, Fn&& fn) {
    threads = std::max<std::size_t>(1, std::min(threads, n));
    std::optional<Error> first_error;
    std::mutex mu;
    auto run_chunk = [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            try {
                fn(i);
            } catch (const Error& e) {
                std::lock_guard lock(mu);
                if (!first_error || *first_error->row() > i) {
                    first_error.emplace(e.kind(), "row " + std::to_string(i) + ": " + e.what(), i);
                }
                return;
            }
        }
    };
    if (threads == 1) {
        run_chunk(0, n);
    } else {
        std::vector<std::jthread> pool;
        const std::size_t chunk = (n + threads - 1) / threads;
        for (std::size_t begin = 0; begin < n; begin += chunk) {
            pool.emplace_back(run_chunk, begin, std::min(n, begin + chunk));
        }
    }
    if (first_error) throw *first_error;
}

} // namespace

ScoreVector score_set(const FeatureSet& test, const CentroidModel* model, const FeatureSet* train,
                      const ScoreConfig& cfg, const ScoreOptions& options) {
    cfg.validate();
    const auto& kernels = options.kernels ? *options.kernels : kernels::active();
    const std::size_t threads = options.threads ? options.threads : default_thread_count();
    const std::size_t n = test.n_samples();

    ScoreVector out;
    out.scores.assign(n, 0.0);
    out.config = cfg;
    if (model) out.model_fingerprint = model->fit_fingerprint;

    auto wide_row = [](std::span<const float> row) { return std::vector<double>(row.begin(), row.end()); };

    switch (cfg.method) {
    case Method::Ncdd: {
        if (!model) throw Error(ErrorKind::MissingModel, "NCDD scoring needs a centroid model");
        require_dimension(*model, test.n_features());
        const CentroidScorer scorer(*model, kernels);
        parallel_rows(n, threads, [&](std::size_t i) {
            const auto z = wide_row(test.feature_row(i));
            out.scores[i] = scorer.score(z, cfg);
        });
        break;
    }
    case Method::Knn: {
        if (!train) throw Error(ErrorKind::MissingTrainSet, "KNN scoring needs the training feature set");
        if (train->n_features() != test.n_features()) {
            throw Error(ErrorKind::DimensionMismatch, "training and test feature widths differ");
        }
        const KnnIndex index(*train, kernels);
        const std::size_t k = effective_k(cfg, index.size());
        if (k > index.size()) {
            throw Error(ErrorKind::KTooLarge, "k = " + std::to_string(k) + " exceeds training size " +
                                                  std::to_string(index.size()));
        }
        std::vector<char> zero(n, 0);
        parallel_rows(n, threads, [&](std::size_t i) {
            const auto z = wide_row(test.feature_row(i));
            bool zero_query = false;
            out.scores[i] = index.score(z, k, &zero_query);
            zero[i] = zero_query;
        });
        for (std::size_t i = 0; i < n; ++i) {
            if (zero[i]) out.zero_norm_rows.push_back(i);
        }
        break;
    }
    default: {
        if (!test.logits()) {
            throw Error(ErrorKind::MissingLogits, "method '" + std::string(to_string(cfg.method)) + "' needs logits");
        }
        const auto& logits = *test.logits();
        parallel_rows(n, threads, [&](std::size_t i) {
            const auto x = wide_row(logits.row(i));
            switch (cfg.method) {
            case Method::Msp: out.scores[i] = msp_score(x, cfg); break;
            case Method::MaxLogit: out.scores[i] = maxlogit_score(x); break;
            case Method::Energy: out.scores[i] = energy_score(x, cfg); break;
            default: out.scores[i] = entropy_score(x, cfg); break;
            }
        });
        break;
    }
    }
    return out;
}

std::string format_scores_csv(std::span<const double> scores) {
    std::string out = "row,score\n";
    char buf[64];
    for (std::size_t i = 0; i < scores.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%zu,%.17g\n", i, scores[i]);
        out += buf;
    }
    return out;
}

void write_scores_csv(std::span<const double> scores, const std::filesystem::path& path) {
    const auto text = format_scores_csv(scores);
    write_file_bytes(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

std::vector<double> parse_scores_csv(std::string_view text) {
    std::vector<double> scores;
    bool header = true;
    std::size_t line_no = 0;
    for (std::size_t start = 0; start < text.size(); ++line_no) {
        auto nl = text.find('\n', start);
        if (nl == std::string_view::npos) nl = text.size();
        auto line = text.substr(start, nl - start);
        start = nl + 1;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.empty()) continue;
        if (header) {
            if (line != "row,score") throw Error(ErrorKind::HeaderMismatch, "score CSV header must be 'row,score'");
            header = false;
            continue;
        }
        const auto comma = line.find(',');
        if (comma == std::string_view::npos || line.find(',', comma + 1) != std::string_view::npos) {
            throw Error(ErrorKind::RaggedRow, "score CSV line " + std::to_string(line_no) + " needs two fields");
        }
        std::size_t row = 0;
        auto [rp, rec] = std::from_chars(line.data(), line.data() + comma, row);
        if (rec != std::errc() || rp != line.data() + comma || row != scores.size()) {
            throw Error(ErrorKind::UnparsableNumber, "score CSV line " + std::to_string(line_no) +
                                                         ": row index must count up from 0");
        }
        double value = 0.0;
        const auto field = line.substr(comma + 1);
        auto [vp, vec] = std::from_chars(field.data(), field.data() + field.size(), value);
        if (vec != std::errc() || vp != field.data() + field.size() || field.empty()) {
            throw Error(ErrorKind::UnparsableNumber, "score CSV line " + std::to_string(line_no) + ": bad score");
        }
        if (!std::isfinite(value)) throw Error(ErrorKind::NonFiniteValue, "score CSV line " + std::to_string(line_no));
        scores.push_back(value);
    }
    if (header) throw Error(ErrorKind::HeaderMismatch, "score CSV is empty");
    return scores;
}

std::vector<double> read_scores_csv(const std::filesystem::path& path) {
    const auto bytes = read_file_bytes(path);
    return parse_scores_csv(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
}

std::string score_vector_to_json(const ScoreVector& sv) {
    nlohmann::ordered_json doc;
    doc["config"] = nlohmann::ordered_json::parse(config_to_json(sv.config));
    doc["model_fingerprint"] = sv.model_fingerprint;
    doc["n_samples"] = sv.scores.size();
    doc["zero_norm_rows"] = sv.zero_norm_rows;
    doc["scores"] = sv.scores;
    return doc.dump(2) + "\n";
}

} // namespace oodkit
