#include "cli.hpp"

#include "oodkit/centroid.hpp"
#include "oodkit/error.hpp"
#include "oodkit/featureset.hpp"
#include "oodkit/metrics.hpp"
#include "oodkit/scoring.hpp"
#include "oodkit/synth.hpp"
#include "oodkit/tuning.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <ostream>

namespace oodkit::cli {

namespace {

namespace fs = std::filesystem;

struct ScoreFlags {
    std::string method = "ncdd";
    std::string variant = "weighted";
    double alpha1 = -1.0;
    double alpha2 = 0.0;
    std::optional<std::size_t> k;
    double temperature = 1.0;
    std::string log_base = "natural";
};

void add_score_flags(CLI::App* cmd, ScoreFlags& f, bool with_method) {
    if (with_method) cmd->add_option("--method", f.method, "ncdd|msp|maxlogit|energy|entropy|knn")->required();
    cmd->add_option("--variant", f.variant, "weighted|unweighted_diff|nonnearest_only|neg_nearest_only");
    cmd->add_option("--alpha1", f.alpha1);
    cmd->add_option("--alpha2", f.alpha2);
    cmd->add_option("--k", f.k, "KNN neighbour rank (default min(50, N_train))");
    cmd->add_option("--temperature", f.temperature);
    cmd->add_option("--log-base", f.log_base, "natural|base10");
}

ScoreConfig to_config(const ScoreFlags& f, std::string_view method_name) {
    ScoreConfig cfg;
    const auto method = parse_method(method_name);
    if (!method) throw Error(ErrorKind::BadConfig, "unknown method '" + std::string(method_name) + "'");
    const auto variant = parse_variant(f.variant);
    if (!variant) throw Error(ErrorKind::BadConfig, "unknown variant '" + f.variant + "'");
    const auto base = parse_log_base(f.log_base);
    if (!base) throw Error(ErrorKind::BadConfig, "unknown log base '" + f.log_base + "'");
    cfg.method = *method;
    cfg.variant = *variant;
    cfg.alpha1 = f.alpha1;
    cfg.alpha2 = f.alpha2;
    cfg.k = f.k;
    cfg.temperature = f.temperature;
    cfg.log_base = *base;
    cfg.validate();
    return cfg;
}

void write_text(const fs::path& path, const std::string& text) {
    write_file_bytes(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= text.size()) {
        auto comma = text.find(',', start);
        if (comma == std::string::npos) comma = text.size();
        auto item = text.substr(start, comma - start);
        if (!item.empty()) out.push_back(item);
        start = comma + 1;
    }
    return out;
}

// Competition ranking ("1224"): equal values share the better rank.
std::vector<std::size_t> ranks(const std::vector<double>& values, bool higher_is_better) {
    std::vector<std::size_t> out(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        std::size_t better = 0;
        for (double v : values) {
            if (higher_is_better ? v > values[i] : v < values[i]) ++better;
        }
        out[i] = better + 1;
    }
    return out;
}

std::string format_compare_table(const std::vector<EvalReport>& reports, const std::vector<std::size_t>& auc_rank,
                                 const std::vector<std::size_t>& fpr_rank) {
    std::string out;
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%-10s %10s %9s %10s %9s\n", "Method", "AUROC(%)", "AUC rank", "FPR95(%)",
                  "FPR rank");
    out += buf;
    for (std::size_t i = 0; i < reports.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%-10s %10.2f %9zu %10.2f %9zu\n", reports[i].method.c_str(),
                      100.0 * reports[i].auroc, auc_rank[i], 100.0 * reports[i].fpr95, fpr_rank[i]);
        out += buf;
    }
    return out;
}

void report_error(std::ostream& err, bool json_errors, std::string_view kind, std::string_view category,
                  const std::string& message, std::optional<std::size_t> row, int code) {
    if (json_errors) {
        nlohmann::ordered_json doc;
        doc["error"]["kind"] = kind;
        doc["error"]["category"] = category;
        doc["error"]["message"] = message;
        doc["error"]["row"] = row ? nlohmann::ordered_json(*row) : nlohmann::ordered_json();
        doc["error"]["exit_code"] = code;
        err << doc.dump() << "\n";
    } else {
        err << "oodkit: " << kind << ": " << message << "\n";
    }
}

std::string_view category_name(ErrorCategory c) {
    switch (c) {
    case ErrorCategory::Io: return "io";
    case ErrorCategory::Format: return "format";
    case ErrorCategory::Contract: return "contract";
    }
    return "contract";
}

} // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"post-hoc OOD scoring over extracted features and logits", "oodkit"};
    app.require_subcommand(1);
    app.fallthrough();
    bool json_errors = false;
    std::size_t threads = 0;
    std::optional<std::size_t> n_classes;
    app.add_flag("--json-errors", json_errors, "emit errors as JSON on stderr");
    app.add_option("--threads", threads, "scoring threads (default: OODKIT_THREADS or all cores)");
    app.add_option("--n-classes", n_classes, "class count for CSV feature inputs");

    // fit
    std::string fit_train, fit_out;
    auto* fit = app.add_subcommand("fit", "fit class centroids on a labeled training set");
    fit->add_option("--train", fit_train)->required();
    fit->add_option("--out", fit_out)->required();

    // score
    std::string sc_model, sc_in, sc_train, sc_out, sc_json;
    ScoreFlags sc_flags;
    auto* score = app.add_subcommand("score", "score every row of a feature set");
    score->add_option("--model", sc_model);
    score->add_option("--in", sc_in)->required();
    score->add_option("--train", sc_train, "training feature set (KNN)");
    score->add_option("--out", sc_out, "row,score CSV")->required();
    score->add_option("--json", sc_json, "also write scores with config echo as JSON");
    add_score_flags(score, sc_flags, true);

    // eval
    std::string ev_id, ev_ood, ev_out, ev_method;
    double ev_tpr = kDefaultTprTarget;
    auto* eval = app.add_subcommand("eval", "AUROC / FPR@TPR from two score files");
    eval->add_option("--id-scores", ev_id)->required();
    eval->add_option("--ood-scores", ev_ood)->required();
    eval->add_option("--tpr", ev_tpr);
    eval->add_option("--method", ev_method, "method label echoed into the report");
    eval->add_option("--out", ev_out)->required();

    // tune
    std::string tu_model, tu_id, tu_ood, tu_grid, tu_out, tu_objective = "fpr95", tu_log_base = "natural";
    double tu_tpr = kDefaultTprTarget;
    auto* tunecmd = app.add_subcommand("tune", "grid search of alpha1/alpha2 for weighted NCDD");
    tunecmd->add_option("--model", tu_model)->required();
    tunecmd->add_option("--val-id", tu_id)->required();
    tunecmd->add_option("--val-ood", tu_ood)->required();
    tunecmd->add_option("--grid", tu_grid, "e.g. \"a1:-2,-1,0,1;a2:-2,-1,0,1\"");
    tunecmd->add_option("--objective", tu_objective, "fpr95|auroc");
    tunecmd->add_option("--tpr", tu_tpr);
    tunecmd->add_option("--log-base", tu_log_base);
    tunecmd->add_option("--out", tu_out)->required();

    // compare
    std::string cp_model, cp_id, cp_ood, cp_train, cp_methods, cp_out;
    double cp_tpr = kDefaultTprTarget;
    ScoreFlags cp_flags;
    auto* compare = app.add_subcommand("compare", "evaluate several methods on one ID/OOD pair");
    compare->add_option("--model", cp_model);
    compare->add_option("--test-id", cp_id)->required();
    compare->add_option("--test-ood", cp_ood)->required();
    compare->add_option("--train", cp_train);
    compare->add_option("--methods", cp_methods, "comma-separated method list")->required();
    compare->add_option("--tpr", cp_tpr);
    compare->add_option("--out", cp_out)->required();
    add_score_flags(compare, cp_flags, false);

    // gen
    std::string gen_spec, gen_dir;
    auto* gen = app.add_subcommand("gen", "generate synthetic train/test_id/test_ood FSET1 files");
    gen->add_option("--spec", gen_spec, "synth spec JSON file, or inline JSON")->required();
    gen->add_option("--out-dir", gen_dir)->required();

    // convert
    std::string cv_in, cv_out;
    auto* convert = app.add_subcommand("convert", "convert between FSET1 and CSV (by extension)");
    convert->add_option("--in", cv_in)->required();
    convert->add_option("--out", cv_out)->required();

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        report_error(err, json_errors, "UsageError", "contract", e.what(), std::nullopt, 4);
        return 4;
    }

    try {
        ScoreOptions options;
        options.threads = threads;

        if (fit->parsed()) {
            const auto train = load_features(fit_train, n_classes);
            const auto model = fit_centroids(train);
            save_model(model, fit_out);
            out << "fitted " << model.n_classes() << " centroids over " << model.n_features() << " features from "
                << train.n_samples() << " rows\n";
            if (model.single_class_warning()) {
                err << "oodkit: warning: single-class model; only neg_nearest_only NCDD is defined\n";
            }
        } else if (score->parsed()) {
            const auto cfg = to_config(sc_flags, sc_flags.method);
            const auto test = load_features(sc_in, n_classes);
            std::optional<CentroidModel> model;
            if (!sc_model.empty()) model = load_model(sc_model);
            std::optional<FeatureSet> train;
            if (!sc_train.empty()) train = load_features(sc_train, n_classes);
            const auto sv = score_set(test, model ? &*model : nullptr, train ? &*train : nullptr, cfg, options);
            write_scores_csv(sv.scores, sc_out);
            if (!sc_json.empty()) write_text(sc_json, score_vector_to_json(sv));
            out << "scored " << sv.scores.size() << " rows with " << to_string(cfg.method) << "\n";
        } else if (eval->parsed()) {
            const auto id = read_scores_csv(ev_id);
            const auto ood = read_scores_csv(ev_ood);
            const auto report = evaluate(id, ood, ev_tpr, ev_method);
            write_text(ev_out, report_to_json(report));
            char buf[160];
            std::snprintf(buf, sizeof(buf), "AUROC %.4f  FPR@%.0f%%TPR %.4f  lambda %.17g  (n_id %zu, n_ood %zu)\n",
                          report.auroc, 100.0 * report.tpr_target, report.fpr95, report.threshold_lambda, report.n_id,
                          report.n_ood);
            out << buf;
        } else if (tunecmd->parsed()) {
            TuneGrid grid = parse_grid(tu_grid);
            if (tu_objective == "fpr95") {
                grid.objective = TuneObjective::Fpr95;
            } else if (tu_objective == "auroc") {
                grid.objective = TuneObjective::Auroc;
            } else {
                throw Error(ErrorKind::BadConfig, "unknown objective '" + tu_objective + "'");
            }
            grid.tpr_target = tu_tpr;
            const auto base = parse_log_base(tu_log_base);
            if (!base) throw Error(ErrorKind::BadConfig, "unknown log base '" + tu_log_base + "'");
            grid.base.log_base = *base;
            const auto model = load_model(tu_model);
            const auto val_id = load_features(tu_id, n_classes);
            const auto val_ood = load_features(tu_ood, n_classes);
            const auto result = tune(model, val_id, val_ood, grid);
            write_text(tu_out, tune_result_to_json(result));
            out << format_tune_table(result);
        } else if (compare->parsed()) {
            const auto names = split_list(cp_methods);
            if (names.empty()) throw Error(ErrorKind::BadConfig, "--methods is empty");
            std::vector<ScoreConfig> configs;
            for (const auto& name : names) configs.push_back(to_config(cp_flags, name));

            const auto test_id = load_features(cp_id, n_classes);
            const auto test_ood = load_features(cp_ood, n_classes);
            std::optional<CentroidModel> model;
            if (!cp_model.empty()) model = load_model(cp_model);
            std::optional<FeatureSet> train;
            if (!cp_train.empty()) train = load_features(cp_train, n_classes);

            std::vector<EvalReport> reports;
            for (const auto& cfg : configs) {
                const auto* m = model ? &*model : nullptr;
                const auto* t = train ? &*train : nullptr;
                const auto id = score_set(test_id, m, t, cfg, options);
                const auto ood = score_set(test_ood, m, t, cfg, options);
                reports.push_back(evaluate(id.scores, ood.scores, cp_tpr, std::string(to_string(cfg.method)),
                                           config_to_json(cfg)));
            }
            std::vector<double> aucs, fprs;
            for (const auto& r : reports) {
                aucs.push_back(r.auroc);
                fprs.push_back(r.fpr95);
            }
            const auto auc_rank = ranks(aucs, true);
            const auto fpr_rank = ranks(fprs, false);

            nlohmann::ordered_json doc;
            doc["tpr_target"] = cp_tpr;
            auto rows = nlohmann::ordered_json::array();
            for (std::size_t i = 0; i < reports.size(); ++i) {
                auto row = nlohmann::ordered_json::parse(report_to_json(reports[i]));
                row["rank_auroc"] = auc_rank[i];
                row["rank_fpr95"] = fpr_rank[i];
                rows.push_back(std::move(row));
            }
            doc["methods"] = std::move(rows);
            write_text(cp_out, doc.dump(2) + "\n");
            out << format_compare_table(reports, auc_rank, fpr_rank);
        } else if (gen->parsed()) {
            std::string spec_text = gen_spec;
            if (spec_text.find('{') == std::string::npos) {
                const auto bytes = read_file_bytes(gen_spec);
                spec_text.assign(bytes.begin(), bytes.end());
            }
            const auto spec = synth_spec_from_json(spec_text);
            const auto data = generate(spec);
            const fs::path dir(gen_dir);
            std::error_code ec;
            fs::create_directories(dir, ec);
            if (ec) throw Error(ErrorKind::IoFailure, "cannot create '" + dir.string() + "': " + ec.message());
            save_fset(data.train, dir / "train.fset");
            save_fset(data.test_id, dir / "test_id.fset");
            save_fset(data.test_ood, dir / "test_ood.fset");
            write_text(dir / "spec.json", synth_spec_to_json(spec));
            out << "wrote train (" << data.train.n_samples() << "), test_id (" << data.test_id.n_samples()
                << "), test_ood (" << data.test_ood.n_samples() << ") to " << dir.string() << "\n";
        } else if (convert->parsed()) {
            std::optional<std::size_t> classes = n_classes;
            const auto input = load_features(cv_in, classes);
            if (fs::path(cv_out).extension() == ".csv") {
                export_csv(input, cv_out);
            } else {
                save_fset(input, cv_out);
            }
            out << "converted " << input.n_samples() << " rows\n";
        }
        return 0;
    } catch (const Error& e) {
        const int code = exit_code_for(e.category());
        report_error(err, json_errors, to_string(e.kind()), category_name(e.category()), e.what(), e.row(), code);
        return code;
    } catch (const std::filesystem::filesystem_error& e) {
        report_error(err, json_errors, "IoFailure", "io", e.what(), std::nullopt, 2);
        return 2;
    } catch (const std::exception& e) {
        report_error(err, json_errors, "InternalError", "internal", e.what(), std::nullopt, 1);
        return 1;
    }
}

} // namespace oodkit::cli
