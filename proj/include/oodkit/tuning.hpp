#pragma once

#include "oodkit/centroid.hpp"
#include "oodkit/featureset.hpp"
#include "oodkit/metrics.hpp"
#include "oodkit/scoring.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace oodkit {

enum class TuneObjective { Fpr95, Auroc };

struct TuneGrid {
    std::vector<double> alpha1_values{-2.0, -1.0, 0.0, 1.0};
    std::vector<double> alpha2_values{-2.0, -1.0, 0.0, 1.0};
    TuneObjective objective = TuneObjective::Fpr95;
    double tpr_target = kDefaultTprTarget;
    /// Weighted-NCDD settings other than the alphas (log base).
    ScoreConfig base{};
};

/// Parses "a1:-2,-1,0,1;a2:-1,0" (either part may be omitted to keep the default).
TuneGrid parse_grid(std::string_view text, TuneGrid grid = {});

struct TuneRow {
    double alpha1;
    double alpha2;
    double fpr95;
    double auroc;
};

struct TuneResult {
    double best_alpha1 = 0.0;
    double best_alpha2 = 0.0;
    double best_objective = 0.0;
    TuneObjective objective = TuneObjective::Fpr95;
    double tpr_target = kDefaultTprTarget;
    /// Every grid cell, sorted by (alpha1, alpha2).
    std::vector<TuneRow> full_table;

    ScoreConfig best_config(const ScoreConfig& base = {}) const;
};

/// Exhaustive grid search of weighted NCDD over (alpha1, alpha2). FPR95 is
/// minimized (AUROC maximized); ties go to higher AUROC (lower FPR95 for the
/// AUROC objective), then smaller alpha1, then smaller alpha2.
TuneResult tune(const CentroidModel& model, const FeatureSet& val_id, const FeatureSet& val_ood,
                const TuneGrid& grid = {});

std::string tune_result_to_json(const TuneResult& result);
/// Condition / FPR / AUROC table in percent, best cell marked.
std::string format_tune_table(const TuneResult& result);

} // namespace oodkit
