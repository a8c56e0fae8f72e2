#include "oodkit/tuning.hpp"

#include "oodkit/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>

namespace oodkit {

namespace {

std::vector<double> parse_values(std::string_view list) {
    std::vector<double> out;
    std::size_t start = 0;
    while (start <= list.size()) {
        auto comma = list.find(',', start);
        if (comma == std::string_view::npos) comma = list.size();
        auto item = list.substr(start, comma - start);
        while (!item.empty() && item.front() == ' ') item.remove_prefix(1);
        while (!item.empty() && item.back() == ' ') item.remove_suffix(1);
        if (!item.empty() && item.front() == '+') item.remove_prefix(1);
        double v = 0.0;
        auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
        if (item.empty() || ec != std::errc() || ptr != item.data() + item.size() || !std::isfinite(v)) {
            throw Error(ErrorKind::BadConfig, "grid value '" + std::string(item) + "' is not a finite number");
        }
        out.push_back(v);
        start = comma + 1;
    }
    return out;
}

void normalize_axis(std::vector<double>& values, const char* name) {
    if (values.empty()) throw Error(ErrorKind::BadConfig, std::string(name) + " grid is empty");
    for (double v : values) {
        if (!std::isfinite(v)) throw Error(ErrorKind::BadConfig, std::string(name) + " grid holds a non-finite value");
    }
    std::sort(values.begin(), values.end());
    values.erase(std::unique(values.begin(), values.end()), values.end());
}

// True when `a` should win over `b`.
bool better(const TuneRow& a, const TuneRow& b, TuneObjective objective) {
    if (objective == TuneObjective::Fpr95) {
        if (a.fpr95 != b.fpr95) return a.fpr95 < b.fpr95;
        if (a.auroc != b.auroc) return a.auroc > b.auroc;
    } else {
        if (a.auroc != b.auroc) return a.auroc > b.auroc;
        if (a.fpr95 != b.fpr95) return a.fpr95 < b.fpr95;
    }
    if (a.alpha1 != b.alpha1) return a.alpha1 < b.alpha1;
    return a.alpha2 < b.alpha2;
}

std::vector<NcddTerms> collect_terms(const CentroidScorer& scorer, const FeatureSet& fs) {
    std::vector<NcddTerms> out(fs.n_samples());
    std::vector<double> z(fs.n_features());
    for (std::size_t i = 0; i < fs.n_samples(); ++i) {
        const auto row = fs.feature_row(i);
        std::copy(row.begin(), row.end(), z.begin());
        out[i] = scorer.terms(z);
    }
    return out;
}

} // namespace

TuneGrid parse_grid(std::string_view text, TuneGrid grid) {
    std::size_t start = 0;
    while (start < text.size()) {
        auto semi = text.find(';', start);
        if (semi == std::string_view::npos) semi = text.size();
        auto part = text.substr(start, semi - start);
        start = semi + 1;
        if (part.empty()) continue;
        const auto colon = part.find(':');
        if (colon == std::string_view::npos) throw Error(ErrorKind::BadConfig, "grid part '" + std::string(part) + "' lacks ':'");
        const auto key = part.substr(0, colon);
        auto values = parse_values(part.substr(colon + 1));
        if (key == "a1" || key == "alpha1") {
            grid.alpha1_values = std::move(values);
        } else if (key == "a2" || key == "alpha2") {
            grid.alpha2_values = std::move(values);
        } else {
            throw Error(ErrorKind::BadConfig, "unknown grid axis '" + std::string(key) + "'");
        }
    }
    return grid;
}

ScoreConfig TuneResult::best_config(const ScoreConfig& base) const {
    ScoreConfig cfg = base;
    cfg.method = Method::Ncdd;
    cfg.variant = NcddVariant::Weighted;
    cfg.alpha1 = best_alpha1;
    cfg.alpha2 = best_alpha2;
    return cfg;
}

TuneResult tune(const CentroidModel& model, const FeatureSet& val_id, const FeatureSet& val_ood, const TuneGrid& grid) {
    if (val_id.n_samples() == 0 || val_ood.n_samples() == 0) {
        throw Error(ErrorKind::EmptyValidationSet, "validation sets must be non-empty");
    }
    require_dimension(model, val_id.n_features());
    require_dimension(model, val_ood.n_features());

    auto a1 = grid.alpha1_values;
    auto a2 = grid.alpha2_values;
    normalize_axis(a1, "alpha1");
    normalize_axis(a2, "alpha2");

    // Distances do not depend on the alphas; compute them once per sample and
    // recombine per cell through the same function score_set uses.
    const CentroidScorer scorer(model);
    const auto id_terms = collect_terms(scorer, val_id);
    const auto ood_terms = collect_terms(scorer, val_ood);

    TuneResult result;
    result.objective = grid.objective;
    result.tpr_target = grid.tpr_target;
    std::vector<double> id_scores(id_terms.size());
    std::vector<double> ood_scores(ood_terms.size());
    for (double alpha1 : a1) {
        for (double alpha2 : a2) {
            ScoreConfig cfg = grid.base;
            cfg.method = Method::Ncdd;
            cfg.variant = NcddVariant::Weighted;
            cfg.alpha1 = alpha1;
            cfg.alpha2 = alpha2;
            cfg.validate();
            for (std::size_t i = 0; i < id_terms.size(); ++i) {
                id_scores[i] = combine_ncdd(id_terms[i], model.n_classes(), cfg);
            }
            for (std::size_t i = 0; i < ood_terms.size(); ++i) {
                ood_scores[i] = combine_ncdd(ood_terms[i], model.n_classes(), cfg);
            }
            result.full_table.push_back({alpha1, alpha2, fpr_at_tpr(id_scores, ood_scores, grid.tpr_target),
                                         auroc(id_scores, ood_scores)});
        }
    }

    const TuneRow* best = &result.full_table.front();
    for (const auto& row : result.full_table) {
        if (better(row, *best, grid.objective)) best = &row;
    }
    result.best_alpha1 = best->alpha1;
    result.best_alpha2 = best->alpha2;
    result.best_objective = grid.objective == TuneObjective::Fpr95 ? best->fpr95 : best->auroc;
    return result;
}

std::string tune_result_to_json(const TuneResult& result) {
    nlohmann::ordered_json doc;
    doc["objective"] = result.objective == TuneObjective::Fpr95 ? "fpr95" : "auroc";
    doc["tpr_target"] = result.tpr_target;
    doc["best_alpha1"] = result.best_alpha1;
    doc["best_alpha2"] = result.best_alpha2;
    doc["best_objective"] = result.best_objective;
    auto rows = nlohmann::ordered_json::array();
    for (const auto& row : result.full_table) {
        rows.push_back({{"alpha1", row.alpha1}, {"alpha2", row.alpha2}, {"fpr95", row.fpr95}, {"auroc", row.auroc}});
    }
    doc["full_table"] = std::move(rows);
    return doc.dump(2) + "\n";
}

std::string format_tune_table(const TuneResult& result) {
    std::string out;
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%-28s %10s %10s\n", "Condition", "FPR95(%)", "AUROC(%)");
    out += buf;
    for (const auto& row : result.full_table) {
        char cond[64];
        std::snprintf(cond, sizeof(cond), "alpha1 = %g & alpha2 = %g", row.alpha1, row.alpha2);
        const bool best = row.alpha1 == result.best_alpha1 && row.alpha2 == result.best_alpha2;
        std::snprintf(buf, sizeof(buf), "%-28s %10.2f %10.2f%s\n", cond, 100.0 * row.fpr95, 100.0 * row.auroc,
                      best ? "  <- best" : "");
        out += buf;
    }
    return out;
}

} // namespace oodkit
