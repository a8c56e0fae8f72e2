#include "oodkit/synth.hpp"

#include "oodkit/error.hpp"

#include <json.hpp>

#include <cmath>
#include <numbers>

namespace oodkit {

std::string_view to_string(OodMode mode) noexcept {
    switch (mode) {
    case OodMode::EquidistantShell: return "equidistant_shell";
    case OodMode::Interpolated: return "interpolated";
    case OodMode::UniformBox: return "uniform_box";
    }
    return "unknown";
}

std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

SynthRng::SynthRng(std::uint64_t seed, std::uint64_t stream)
    : engine_(splitmix64(seed + (stream + 1) * 0x9E3779B97F4A7C15ULL)) {}

double SynthRng::uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

double SynthRng::normal() {
    const double u1 = 1.0 - uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

void SynthSpec::validate() const {
    auto fail = [](const std::string& what) { throw Error(ErrorKind::SpecInvalid, "synth spec: " + what); };
    if (n_classes < 1) fail("n_classes must be >= 1");
    if (dim < n_classes) fail("dim must be >= n_classes");
    if (per_class_n < 1 || ood_n < 1) fail("counts must be >= 1");
    if (!(id_std > 0.0) || !std::isfinite(id_std)) fail("id_std must be finite and > 0");
    if (!(separation > 0.0) || !std::isfinite(separation)) fail("separation must be finite and > 0");
}

SynthSpec synth_spec_from_json(std::string_view text) {
    SynthSpec spec;
    try {
        const auto doc = nlohmann::json::parse(text);
        spec.n_classes = doc.value("n_classes", spec.n_classes);
        spec.dim = doc.value("dim", spec.dim);
        spec.per_class_n = doc.value("per_class_n", spec.per_class_n);
        spec.id_std = doc.value("id_std", spec.id_std);
        spec.separation = doc.value("separation", spec.separation);
        spec.ood_n = doc.value("ood_n", spec.ood_n);
        spec.seed = doc.value("seed", spec.seed);
        const auto mode = doc.value("ood_mode", std::string(to_string(spec.ood_mode)));
        bool known = false;
        for (auto m : {OodMode::EquidistantShell, OodMode::Interpolated, OodMode::UniformBox}) {
            if (to_string(m) == mode) {
                spec.ood_mode = m;
                known = true;
            }
        }
        if (!known) throw Error(ErrorKind::SpecInvalid, "synth spec: unknown ood_mode '" + mode + "'");
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::SpecInvalid, std::string("synth spec JSON: ") + e.what());
    }
    spec.validate();
    return spec;
}

std::string synth_spec_to_json(const SynthSpec& spec) {
    nlohmann::ordered_json doc;
    doc["n_classes"] = spec.n_classes;
    doc["dim"] = spec.dim;
    doc["per_class_n"] = spec.per_class_n;
    doc["id_std"] = spec.id_std;
    doc["separation"] = spec.separation;
    doc["ood_mode"] = to_string(spec.ood_mode);
    doc["ood_n"] = spec.ood_n;
    doc["seed"] = spec.seed;
    return doc.dump(2) + "\n";
}

namespace {

struct Geometry {
    std::size_t c;
    std::size_t d;
    double s;
    double offset;

    double mean(std::size_t cls, std::size_t j) const { return offset + (j == cls ? s : 0.0); }
};

Matrix<float> logits_for(const Geometry& g, const Matrix<float>& features) {
    Matrix<float> logits(features.rows(), g.c);
    for (std::size_t i = 0; i < features.rows(); ++i) {
        const auto z = features.row(i);
        for (std::size_t cls = 0; cls < g.c; ++cls) {
            double sq = 0.0;
            for (std::size_t j = 0; j < g.d; ++j) {
                const double diff = static_cast<double>(z[j]) - g.mean(cls, j);
                sq += diff * diff;
            }
            logits(i, cls) = static_cast<float>(-sq / (2.0 * g.s));
        }
    }
    return logits;
}

std::vector<std::string> class_names(std::size_t c) {
    std::vector<std::string> names;
    for (std::size_t i = 0; i < c; ++i) names.push_back("class_" + std::to_string(i));
    return names;
}

FeatureSet id_split(const SynthSpec& spec, const Geometry& g, std::uint64_t stream, const char* tag) {
    SynthRng rng(spec.seed, stream);
    const std::size_t n = spec.per_class_n * g.c;
    Matrix<float> features(n, g.d);
    std::vector<std::int32_t> labels(n);
    for (std::size_t cls = 0, i = 0; cls < g.c; ++cls) {
        for (std::size_t r = 0; r < spec.per_class_n; ++r, ++i) {
            labels[i] = static_cast<std::int32_t>(cls);
            for (std::size_t j = 0; j < g.d; ++j) {
                features(i, j) = static_cast<float>(g.mean(cls, j) + spec.id_std * rng.normal());
            }
        }
    }
    auto logits = logits_for(g, features);
    return FeatureSet(std::move(features), g.c, std::move(labels), std::move(logits), class_names(g.c),
                      std::string("synth:") + tag + ":seed=" + std::to_string(spec.seed));
}

FeatureSet ood_split(const SynthSpec& spec, const Geometry& g) {
    SynthRng rng(spec.seed, 2);
    Matrix<float> features(spec.ood_n, g.d);
    std::vector<double> u(g.d);
    for (std::size_t i = 0; i < spec.ood_n; ++i) {
        auto row = features.row(i);
        switch (spec.ood_mode) {
        case OodMode::EquidistantShell: {
            double norm = 0.0;
            do {
                for (auto& x : u) x = rng.normal();
                if (g.c >= 2) {
                    // Differences of class means span {v : v_j = 0 for j >= C, sum_{j<C} v_j = 0};
                    // the orthogonal complement has equal first C coordinates.
                    double mean = 0.0;
                    for (std::size_t j = 0; j < g.c; ++j) mean += u[j];
                    mean /= static_cast<double>(g.c);
                    for (std::size_t j = 0; j < g.c; ++j) u[j] = mean;
                }
                norm = 0.0;
                for (double x : u) norm += x * x;
                norm = std::sqrt(norm);
            } while (norm == 0.0);
            for (std::size_t j = 0; j < g.d; ++j) {
                const double bary = g.offset + (j < g.c ? g.s / static_cast<double>(g.c) : 0.0);
                row[j] = static_cast<float>(bary + g.s * u[j] / norm + spec.id_std * rng.normal());
            }
            break;
        }
        case OodMode::Interpolated: {
            const auto a = static_cast<std::size_t>(rng.uniform() * static_cast<double>(g.c));
            std::size_t b = a;
            if (g.c >= 2) {
                b = static_cast<std::size_t>(rng.uniform() * static_cast<double>(g.c - 1));
                if (b >= a) ++b;
            }
            const double t = 0.25 + 0.5 * rng.uniform();
            for (std::size_t j = 0; j < g.d; ++j) {
                row[j] = static_cast<float>((1.0 - t) * g.mean(a, j) + t * g.mean(b, j) + spec.id_std * rng.normal());
            }
            break;
        }
        case OodMode::UniformBox:
            for (std::size_t j = 0; j < g.d; ++j) row[j] = static_cast<float>(3.0 * g.s * rng.uniform());
            break;
        }
    }
    auto logits = logits_for(g, features);
    return FeatureSet(std::move(features), g.c, std::nullopt, std::move(logits), class_names(g.c),
                      "synth:test_ood:" + std::string(to_string(spec.ood_mode)) + ":seed=" + std::to_string(spec.seed));
}

} // namespace

SynthData generate(const SynthSpec& spec) {
    spec.validate();
    const Geometry g{spec.n_classes, spec.dim, spec.separation, spec.separation};
    return SynthData{id_split(spec, g, 0, "train"), id_split(spec, g, 1, "test_id"), ood_split(spec, g)};
}

} // namespace oodkit
