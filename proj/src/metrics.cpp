#include "oodkit/metrics.hpp"

#include "oodkit/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace oodkit {

namespace {

void require_scores(std::span<const double> scores, const char* what) {
    if (scores.empty()) throw Error(ErrorKind::EmptyScoreSet, std::string(what) + " score set is empty");
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (!std::isfinite(scores[i])) {
            throw Error(ErrorKind::NonFiniteValue, std::string(what) + " score is not finite", i);
        }
    }
}

void require_target(double tpr_target) {
    if (!(tpr_target > 0.0 && tpr_target <= 1.0)) {
        throw Error(ErrorKind::BadTarget, "tpr_target must lie in (0, 1]");
    }
}

} // namespace

double auroc(std::span<const double> id_scores, std::span<const double> ood_scores) {
    require_scores(id_scores, "ID");
    require_scores(ood_scores, "OOD");

    struct Entry {
        double score;
        bool is_id;
    };
    std::vector<Entry> all;
    all.reserve(id_scores.size() + ood_scores.size());
    for (double s : id_scores) all.push_back({s, true});
    for (double s : ood_scores) all.push_back({s, false});
    std::sort(all.begin(), all.end(), [](const Entry& a, const Entry& b) { return a.score < b.score; });

    // Ranks are doubled so tied groups get integral midranks: a group spanning
    // 1-based ranks [lo, hi] contributes lo + hi per ID member.
    double id_rank_sum2 = 0.0;
    for (std::size_t i = 0; i < all.size();) {
        std::size_t j = i;
        std::size_t ids = 0;
        while (j < all.size() && all[j].score == all[i].score) {
            ids += all[j].is_id;
            ++j;
        }
        id_rank_sum2 += static_cast<double>(ids) * static_cast<double>((i + 1) + j);
        i = j;
    }
    const auto n_id = static_cast<double>(id_scores.size());
    const auto n_ood = static_cast<double>(ood_scores.size());
    // 2U = 2R - n_id (n_id + 1); every term is an exact integer in double.
    const double u2 = id_rank_sum2 - n_id * (n_id + 1.0);
    return (u2 / 2.0) / (n_id * n_ood);
}

double threshold_at_tpr(std::span<const double> id_scores, double tpr_target) {
    require_scores(id_scores, "ID");
    require_target(tpr_target);

    std::vector<double> sorted(id_scores.begin(), id_scores.end());
    std::sort(sorted.begin(), sorted.end());
    const std::size_t n = sorted.size();
    // Tolerance absorbs representation error in products such as 0.95 * 20.
    const double kept = std::ceil(static_cast<double>(n) * tpr_target - 1e-9);
    const std::size_t must_keep = std::clamp<std::size_t>(static_cast<std::size_t>(kept), 1, n);
    const std::size_t r = n - must_keep;  // ID scores allowed at or below lambda

    if (r >= 1 && sorted[r - 1] < sorted[r]) return sorted[r - 1];
    return std::nextafter(sorted[r], -std::numeric_limits<double>::infinity());
}

double fpr_at_tpr(std::span<const double> id_scores, std::span<const double> ood_scores, double tpr_target) {
    require_scores(ood_scores, "OOD");
    const double lambda = threshold_at_tpr(id_scores, tpr_target);
    const auto accepted = std::count_if(ood_scores.begin(), ood_scores.end(), [&](double s) { return s > lambda; });
    return static_cast<double>(accepted) / static_cast<double>(ood_scores.size());
}

Decision decide(double score, double lambda) noexcept { return score <= lambda ? Decision::Ood : Decision::Id; }

EvalReport evaluate(std::span<const double> id_scores, std::span<const double> ood_scores, double tpr_target,
                    std::string method, std::string config_json) {
    EvalReport r;
    r.auroc = auroc(id_scores, ood_scores);
    r.threshold_lambda = threshold_at_tpr(id_scores, tpr_target);
    r.fpr95 = fpr_at_tpr(id_scores, ood_scores, tpr_target);
    r.tpr_target = tpr_target;
    r.n_id = id_scores.size();
    r.n_ood = ood_scores.size();
    r.method = std::move(method);
    r.config_json = std::move(config_json);
    return r;
}

std::string report_to_json(const EvalReport& report) {
    nlohmann::ordered_json doc;
    doc["auroc"] = report.auroc;
    doc["fpr95"] = report.fpr95;
    doc["threshold_lambda"] = report.threshold_lambda;
    doc["tpr_target"] = report.tpr_target;
    doc["n_id"] = report.n_id;
    doc["n_ood"] = report.n_ood;
    doc["method"] = report.method;
    doc["config"] = report.config_json.empty() ? nlohmann::ordered_json() : nlohmann::ordered_json::parse(report.config_json);
    return doc.dump(2) + "\n";
}

} // namespace oodkit
