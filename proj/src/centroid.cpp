#include "oodkit/centroid.hpp"

#include "oodkit/error.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>

namespace oodkit {

namespace {

std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes, std::uint64_t hash = 0xcbf29ce484222325ULL) {
    for (auto b : bytes) {
        hash ^= b;
        hash *= 0x100000001b3ULL;
    }
    return hash;
}

void validate(const CentroidModel& m) {
    if (m.n_classes() == 0) throw Error(ErrorKind::SchemaMismatch, "centroid model has no classes");
    if (m.n_features() == 0) throw Error(ErrorKind::DimZero, "centroid model has zero feature dimensions");
    if (m.class_counts.size() != m.n_classes()) {
        throw Error(ErrorKind::DimensionMismatch, "class_counts length differs from n_classes");
    }
    for (std::size_t c = 0; c < m.n_classes(); ++c) {
        if (m.class_counts[c] == 0) throw Error(ErrorKind::EmptyClass, "class " + std::to_string(c) + " has no rows");
        for (double v : m.centroid(c)) {
            if (!std::isfinite(v)) {
                throw Error(ErrorKind::NonFiniteValue, "centroid " + std::to_string(c) + " is not finite");
            }
        }
    }
    if (m.class_names && m.class_names->size() != m.n_classes()) {
        throw Error(ErrorKind::DimensionMismatch, "class_names length differs from n_classes");
    }
}

} // namespace

CentroidModel fit_centroids(const Matrix<double>& rows, std::span<const std::int32_t> labels, std::size_t n_classes,
                            std::string fingerprint) {
    const std::size_t d = rows.cols();
    if (d == 0) throw Error(ErrorKind::DimZero, "training features have zero dimensions");
    if (n_classes == 0) throw Error(ErrorKind::BadConfig, "n_classes must be >= 1");
    if (labels.size() != rows.rows()) throw Error(ErrorKind::DimensionMismatch, "label count differs from row count");

    Matrix<double> sums(n_classes, d, 0.0);
    std::vector<std::uint64_t> counts(n_classes, 0);
    for (std::size_t i = 0; i < rows.rows(); ++i) {
        const auto label = labels[i];
        if (label < 0 || static_cast<std::size_t>(label) >= n_classes) {
            throw Error(ErrorKind::LabelOutOfRange, "label outside [0, n_classes)", i);
        }
        const auto c = static_cast<std::size_t>(label);
        auto acc = sums.row(c);
        const auto row = rows.row(i);
        for (std::size_t j = 0; j < d; ++j) acc[j] += row[j];
        ++counts[c];
    }
    for (std::size_t c = 0; c < n_classes; ++c) {
        if (counts[c] == 0) throw Error(ErrorKind::EmptyClass, "class " + std::to_string(c) + " has no training rows");
        const auto n = static_cast<double>(counts[c]);
        for (double& v : sums.row(c)) v /= n;
    }

    CentroidModel model{std::move(sums), std::move(counts), std::nullopt, std::move(fingerprint)};
    validate(model);
    return model;
}

CentroidModel fit_centroids(const FeatureSet& train) {
    if (!train.labels()) throw Error(ErrorKind::MissingLabels, "training feature set has no labels");
    const auto values = train.features().values();
    Matrix<double> rows(train.n_samples(), train.n_features(), std::vector<double>(values.begin(), values.end()));
    auto model = fit_centroids(rows, *train.labels(), train.n_classes(), training_fingerprint(train));
    model.class_names = train.class_names();
    return model;
}

std::string training_fingerprint(const FeatureSet& train) {
    const auto bytes = encode_fset(train);
    auto hash = fnv1a64(bytes);
    hash = fnv1a64(std::span(reinterpret_cast<const std::uint8_t*>(kCentroidModelVersion.data()),
                             kCentroidModelVersion.size()),
                   hash);
    char buf[40];
    std::snprintf(buf, sizeof(buf), "fnv1a64:%016llx", static_cast<unsigned long long>(hash));
    return buf;
}

std::string model_to_json(const CentroidModel& model) {
    nlohmann::ordered_json doc;
    doc["version"] = kCentroidModelVersion;
    doc["n_classes"] = model.n_classes();
    doc["n_features"] = model.n_features();
    doc["class_counts"] = model.class_counts;
    if (model.class_names) doc["class_names"] = *model.class_names;
    auto rows = nlohmann::ordered_json::array();
    for (std::size_t c = 0; c < model.n_classes(); ++c) {
        const auto row = model.centroid(c);
        rows.push_back(std::vector<double>(row.begin(), row.end()));
    }
    doc["centroids"] = std::move(rows);
    doc["fit_fingerprint"] = model.fit_fingerprint;
    return doc.dump(2) + "\n";
}

CentroidModel model_from_json(std::string_view text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::SchemaMismatch, std::string("model is not valid JSON: ") + e.what());
    }
    try {
        if (doc.at("version").get<std::string>() != kCentroidModelVersion) {
            throw Error(ErrorKind::SchemaMismatch, "unsupported model version '" + doc.at("version").get<std::string>() + "'");
        }
        const auto n_classes = doc.at("n_classes").get<std::size_t>();
        const auto n_features = doc.at("n_features").get<std::size_t>();
        const auto rows = doc.at("centroids").get<std::vector<std::vector<double>>>();
        if (rows.size() != n_classes) {
            throw Error(ErrorKind::DimensionMismatch, "centroids has " + std::to_string(rows.size()) +
                                                          " rows, n_classes is " + std::to_string(n_classes));
        }
        std::vector<double> flat;
        flat.reserve(n_classes * n_features);
        for (const auto& row : rows) {
            if (row.size() != n_features) {
                throw Error(ErrorKind::DimensionMismatch, "centroid row width differs from n_features");
            }
            flat.insert(flat.end(), row.begin(), row.end());
        }
        CentroidModel model{Matrix<double>(n_classes, n_features, std::move(flat)),
                            doc.at("class_counts").get<std::vector<std::uint64_t>>(), std::nullopt,
                            doc.at("fit_fingerprint").get<std::string>()};
        if (auto it = doc.find("class_names"); it != doc.end() && !it->is_null()) {
            model.class_names = it->get<std::vector<std::string>>();
        }
        validate(model);
        return model;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::SchemaMismatch, std::string("model JSON does not match schema: ") + e.what());
    }
}

void save_model(const CentroidModel& model, const std::filesystem::path& path) {
    const auto text = model_to_json(model);
    write_file_bytes(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

CentroidModel load_model(const std::filesystem::path& path) {
    const auto bytes = read_file_bytes(path);
    return model_from_json(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
}

void require_dimension(const CentroidModel& model, std::size_t n_features) {
    if (model.n_features() != n_features) {
        throw Error(ErrorKind::DimensionMismatch, "model expects " + std::to_string(model.n_features()) +
                                                      " features, input has " + std::to_string(n_features));
    }
}

} // namespace oodkit
