// Pipeline driver: every stage is a subcommand working off one JSON
// config file, with per-flag overrides. Exit codes: 0 success, 1
// usage/config error, 2 data/validation error.

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hfrag/pipeline.hpp"

namespace {

struct CommonOptions {
    std::string config_path;
    std::optional<std::string> output_dir;
    std::optional<std::string> mode;
    std::optional<double> alpha;
    std::optional<std::string> predictor;
    std::optional<int> k;
    std::optional<int> pool_depth;
    std::optional<int> missing_rank_m;
    std::vector<int> sizes;
    std::optional<std::string> ndcg_run;
};

void add_common(CLI::App* cmd, CommonOptions& options) {
    cmd->add_option("-c,--config", options.config_path, "JSON config file")->required();
    cmd->add_option("--output-dir", options.output_dir, "override paths.output_dir");
    cmd->add_option("--mode", options.mode, "override mode");
    cmd->add_option("--alpha", options.alpha, "override alpha");
    cmd->add_option("--predictor", options.predictor, "override predictor (baseline|external)");
    cmd->add_option("--k", options.k, "override fusion.k (context size)");
    cmd->add_option("--pool-depth", options.pool_depth, "override fusion.pool_depth");
    cmd->add_option("--missing-rank-m", options.missing_rank_m, "override fusion.missing_rank_m");
}

hfrag::PipelineConfig resolve_config(const CommonOptions& options) {
    auto config = hfrag::load_config(options.config_path);
    if (options.output_dir) {
        config.output_dir = *options.output_dir;
        config.runs_labeled = config.output_dir / "runs" / "labeled";
        config.runs_unlabeled = config.output_dir / "runs" / "unlabeled";
    }
    if (options.mode) config.mode = hfrag::parse_mode(*options.mode);
    if (options.alpha) config.alpha = *options.alpha;
    if (options.predictor) {
        if (*options.predictor == "baseline") {
            config.predictor = hfrag::PredictorKind::Baseline;
        } else if (*options.predictor == "external") {
            config.predictor = hfrag::PredictorKind::External;
        } else {
            throw hfrag::ConfigError("unknown predictor '" + *options.predictor + "'");
        }
    }
    if (options.k) config.fusion.k = *options.k;
    if (options.pool_depth) config.fusion.pool_depth = *options.pool_depth;
    if (options.missing_rank_m) config.fusion.missing_rank_m = *options.missing_rank_m;
    if (!options.sizes.empty()) config.sweep_sizes = options.sizes;
    hfrag::validate(config.fusion);
    if (config.mode == hfrag::Mode::LuRagAlpha && !config.alpha) {
        throw hfrag::ConfigError("mode lu_rag_alpha requires alpha");
    }
    return config;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"hierarchical rank-fusion pipeline for claim verification"};
    app.require_subcommand(1);

    CommonOptions options;
    auto* index = app.add_subcommand("index", "build BM25 indexes over the configured stores");
    auto* retrieve = app.add_subcommand("retrieve", "run BM25 over the claims, write run files");
    auto* fuse = app.add_subcommand("fuse", "fuse runs into per-claim contexts and prompts");
    auto* predict = app.add_subcommand("predict", "produce predictions (baseline or external)");
    auto* eval = app.add_subcommand("eval", "score predictions (macro-F1, optionally nDCG)");
    auto* sweep = app.add_subcommand("sweep", "rerun the pipeline across context sizes");
    auto* optsel =
        app.add_subcommand("optsel", "label-informed best single-ranker single-source bound");
    for (auto* cmd : {index, retrieve, fuse, predict, eval, sweep, optsel}) {
        add_common(cmd, options);
    }
    sweep->add_option("--sizes", options.sizes, "context sizes to sweep")->delimiter(',');
    eval->add_option("--ndcg-run", options.ndcg_run,
                     "run file to score with nDCG instead of the emitted contexts");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        const auto config = resolve_config(options);
        if (index->parsed()) {
            hfrag::run_index(config);
        } else if (retrieve->parsed()) {
            hfrag::run_retrieve(config);
        } else if (fuse->parsed()) {
            hfrag::run_fuse(config);
        } else if (predict->parsed()) {
            hfrag::run_predict(config);
        } else if (eval->parsed()) {
            std::optional<std::filesystem::path> ndcg_run;
            if (options.ndcg_run) ndcg_run = *options.ndcg_run;
            hfrag::run_eval(config, std::cout, ndcg_run);
        } else if (sweep->parsed()) {
            hfrag::run_sweep(config, std::cout);
        } else if (optsel->parsed()) {
            hfrag::run_optsel(config, std::cout);
        }
    } catch (const hfrag::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 1;
    } catch (const hfrag::ParseError& e) {
        std::cerr << "parse error: " << e.what() << '\n';
        return 2;
    } catch (const hfrag::ValidationError& e) {
        std::cerr << "validation error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
