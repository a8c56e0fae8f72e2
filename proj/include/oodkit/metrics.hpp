#pragma once

#include <cstddef>
#include <span>
#include <string>

// ID is the positive class throughout: TPR is the fraction of ID samples kept,
// FPR the fraction of OOD samples mistaken for ID.

namespace oodkit {

enum class Decision { Id, Ood };

inline constexpr double kDefaultTprTarget = 0.95;

/// Mann-Whitney AUROC: P(id > ood) + 0.5 * P(id == ood), from exact midranks.
double auroc(std::span<const double> id_scores, std::span<const double> ood_scores);

/// Threshold keeping at least `tpr_target` of ID scores strictly above it.
/// With r = n - ceil(n * tpr_target) and s the sorted ID scores, this is
/// s[r] (1-based) when r >= 1 and s[r] < s[r + 1]; otherwise the largest
/// double strictly below s[r + 1].
double threshold_at_tpr(std::span<const double> id_scores, double tpr_target);

/// Fraction of OOD scores strictly above threshold_at_tpr(id_scores, tpr_target).
double fpr_at_tpr(std::span<const double> id_scores, std::span<const double> ood_scores, double tpr_target);

/// OOD iff score <= lambda.
Decision decide(double score, double lambda) noexcept;

struct EvalReport {
    double auroc = 0.0;
    double fpr95 = 0.0;
    double threshold_lambda = 0.0;
    double tpr_target = kDefaultTprTarget;
    std::size_t n_id = 0;
    std::size_t n_ood = 0;
    std::string method;
    /// Serialized JSON object echoing the scoring configuration, or empty.
    std::string config_json;
};

EvalReport evaluate(std::span<const double> id_scores, std::span<const double> ood_scores,
                    double tpr_target = kDefaultTprTarget, std::string method = {}, std::string config_json = {});

std::string report_to_json(const EvalReport& report);

} // namespace oodkit
