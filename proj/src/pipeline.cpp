#include "hfrag/pipeline.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <sstream>

#include <json.hpp>

namespace hfrag {

namespace fs = std::filesystem;

Mode parse_mode(std::string_view text) {
    if (text == "zero_shot") return Mode::ZeroShot;
    if (text == "l_rag") return Mode::LRag;
    if (text == "u_rag") return Mode::URag;
    if (text == "l_rag_rrf") return Mode::LRagRrf;
    if (text == "u_rag_rrf") return Mode::URagRrf;
    if (text == "lu_rag_alpha") return Mode::LuRagAlpha;
    if (text == "hf_rag") return Mode::HfRag;
    throw ConfigError("unknown mode '" + std::string(text) +
                      "' (expected zero_shot|l_rag|u_rag|l_rag_rrf|u_rag_rrf|lu_rag_alpha|hf_rag)");
}

const char* to_string(Mode mode) {
    switch (mode) {
        case Mode::ZeroShot: return "zero_shot";
        case Mode::LRag: return "l_rag";
        case Mode::URag: return "u_rag";
        case Mode::LRagRrf: return "l_rag_rrf";
        case Mode::URagRrf: return "u_rag_rrf";
        case Mode::LuRagAlpha: return "lu_rag_alpha";
        case Mode::HfRag: return "hf_rag";
    }
    return "hf_rag";
}

bool mode_uses_labeled(Mode mode) {
    return mode == Mode::LRag || mode == Mode::LRagRrf || mode == Mode::LuRagAlpha ||
           mode == Mode::HfRag;
}

bool mode_uses_unlabeled(Mode mode) {
    return mode == Mode::URag || mode == Mode::URagRrf || mode == Mode::LuRagAlpha ||
           mode == Mode::HfRag;
}

namespace {

fs::path resolve(const fs::path& base, const std::string& value) {
    const fs::path path(value);
    return path.is_absolute() ? path : base / path;
}

void check_keys(const nlohmann::json& object, std::initializer_list<const char*> known,
                const char* where) {
    for (const auto& [key, value] : object.items()) {
        if (std::find_if(known.begin(), known.end(),
                         [&](const char* k) { return key == k; }) == known.end()) {
            throw ConfigError(std::string("unknown config key \"") + key + "\" in " + where);
        }
    }
}

void require_input(const fs::path& path, const char* what) {
    if (path.empty()) {
        throw ConfigError(std::string("config is missing the ") + what + " path");
    }
    if (!fs::exists(path)) {
        throw ConfigError(std::string(what) + " path does not exist: " + path.string());
    }
}

std::ifstream open_input(const fs::path& path, const char* what) {
    require_input(path, what);
    std::ifstream in(path);
    if (!in) {
        throw ConfigError(std::string("cannot open ") + what + ": " + path.string());
    }
    return in;
}

}  // namespace

PipelineConfig load_config(const fs::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open config file: " + path.string());
    }
    nlohmann::json root = nlohmann::json::parse(in, nullptr, false);
    if (root.is_discarded() || !root.is_object()) {
        throw ConfigError("config file is not a JSON object: " + path.string());
    }
    check_keys(root, {"mode", "alpha", "predictor", "fusion", "bm25", "sweep_sizes", "paths"},
               "config root");

    PipelineConfig config;
    const fs::path base = path.has_parent_path() ? path.parent_path() : fs::path(".");

    if (root.contains("mode")) config.mode = parse_mode(root["mode"].get<std::string>());
    if (root.contains("alpha")) {
        if (!root["alpha"].is_number()) throw ConfigError("alpha must be a number");
        config.alpha = root["alpha"].get<double>();
    }
    if (root.contains("predictor")) {
        const auto kind = root["predictor"].get<std::string>();
        if (kind == "baseline") {
            config.predictor = PredictorKind::Baseline;
        } else if (kind == "external") {
            config.predictor = PredictorKind::External;
        } else {
            throw ConfigError("unknown predictor '" + kind + "' (expected baseline|external)");
        }
    }
    if (root.contains("fusion")) {
        const auto& fusion = root["fusion"];
        check_keys(fusion, {"k", "pool_depth", "missing_rank_m"}, "\"fusion\"");
        config.fusion.k = fusion.value("k", config.fusion.k);
        config.fusion.pool_depth = fusion.value("pool_depth", config.fusion.pool_depth);
        config.fusion.missing_rank_m =
            fusion.value("missing_rank_m", config.fusion.missing_rank_m);
    }
    if (root.contains("bm25")) {
        const auto& bm25 = root["bm25"];
        check_keys(bm25, {"k1", "b"}, "\"bm25\"");
        config.bm25.k1 = bm25.value("k1", config.bm25.k1);
        config.bm25.b = bm25.value("b", config.bm25.b);
    }
    if (root.contains("sweep_sizes")) {
        for (const auto& size : root["sweep_sizes"]) {
            config.sweep_sizes.push_back(size.get<int>());
        }
    }
    if (root.contains("paths")) {
        const auto& paths = root["paths"];
        check_keys(paths,
                   {"corpus", "labeled_store", "claims", "qrels", "runs_labeled", "runs_unlabeled",
                    "template", "predictions", "output_dir"},
                   "\"paths\"");
        auto get = [&](const char* key) -> fs::path {
            return paths.contains(key) ? resolve(base, paths[key].get<std::string>()) : fs::path();
        };
        config.corpus = get("corpus");
        config.labeled_store = get("labeled_store");
        config.claims = get("claims");
        config.qrels = get("qrels");
        config.runs_labeled = get("runs_labeled");
        config.runs_unlabeled = get("runs_unlabeled");
        config.template_file = get("template");
        config.predictions = get("predictions");
        config.output_dir = get("output_dir");
    }
    if (config.output_dir.empty()) {
        throw ConfigError("config is missing paths.output_dir");
    }
    if (config.runs_labeled.empty()) config.runs_labeled = config.output_dir / "runs" / "labeled";
    if (config.runs_unlabeled.empty()) {
        config.runs_unlabeled = config.output_dir / "runs" / "unlabeled";
    }
    if (config.mode == Mode::LuRagAlpha && !config.alpha) {
        throw ConfigError("mode lu_rag_alpha requires alpha");
    }
    if (config.alpha && !(*config.alpha >= 0.0 && *config.alpha <= 1.0)) {
        throw ConfigError("alpha must lie in [0, 1]");
    }
    validate(config.fusion);
    return config;
}

std::string config_snapshot(const PipelineConfig& config) {
    nlohmann::json snapshot;
    snapshot["mode"] = to_string(config.mode);
    if (config.alpha) snapshot["alpha"] = *config.alpha;
    snapshot["predictor"] =
        config.predictor == PredictorKind::Baseline ? "baseline" : "external";
    snapshot["fusion"] = {{"k", config.fusion.k},
                          {"pool_depth", config.fusion.pool_depth},
                          {"missing_rank_m", config.fusion.missing_rank_m}};
    snapshot["bm25"] = {{"k1", config.bm25.k1}, {"b", config.bm25.b}};
    if (!config.sweep_sizes.empty()) snapshot["sweep_sizes"] = config.sweep_sizes;

    nlohmann::json paths;
    auto put = [&](const char* key, const fs::path& path) {
        if (!path.empty()) paths[key] = path.string();
    };
    put("corpus", config.corpus);
    put("labeled_store", config.labeled_store);
    put("claims", config.claims);
    put("qrels", config.qrels);
    put("runs_labeled", config.runs_labeled);
    put("runs_unlabeled", config.runs_unlabeled);
    put("template", config.template_file);
    put("predictions", config.predictions);
    put("output_dir", config.output_dir);
    snapshot["paths"] = std::move(paths);
    return snapshot.dump(2) + "\n";
}

std::vector<RankedRun> load_runs_dir(const fs::path& dir, Source source) {
    if (!fs::is_directory(dir)) {
        throw ConfigError("run directory does not exist: " + dir.string());
    }
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.is_regular_file()) files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());

    std::vector<RankedRun> runs;
    for (const auto& file : files) {
        std::ifstream in(file);
        if (!in) {
            throw ConfigError("cannot open run file: " + file.string());
        }
        std::vector<RankedRun> parsed;
        try {
            parsed = parse_run_file(in, source);
        } catch (const ParseError& e) {
            throw ParseError(file.string() + ": " + e.what());
        }
        for (auto& run : parsed) {
            if (run.source != source) {
                throw ValidationError("run tagged " + std::string(to_string(run.source)) +
                                      " found in " + to_string(source) +
                                      " run directory: " + file.string());
            }
            runs.push_back(std::move(run));
        }
    }
    return runs;
}

RunSets load_runs(const PipelineConfig& config) {
    RunSets sets;
    if (mode_uses_labeled(config.mode)) {
        for (auto& run : load_runs_dir(config.runs_labeled, Source::Labeled)) {
            sets.labeled_rankers.insert(run.ranker);
            sets.labeled[run.query].push_back(std::move(run));
        }
    }
    if (mode_uses_unlabeled(config.mode)) {
        for (auto& run : load_runs_dir(config.runs_unlabeled, Source::Unlabeled)) {
            sets.unlabeled_rankers.insert(run.ranker);
            sets.unlabeled[run.query].push_back(std::move(run));
        }
    }
    return sets;
}

namespace {

FusedList fuse_for_query(const std::map<QueryId, std::vector<RankedRun>>& runs,
                         const QueryId& query, Source source, const FusionConfig& config) {
    auto it = runs.find(query);
    if (it == runs.end() || it->second.empty()) {
        return FusedList{query, source, {}};
    }
    return rrf_fuse(it->second, config);
}

MergedContext passthrough_context(const FusedList& fused) {
    MergedContext context{fused.query, {}};
    context.entries.reserve(fused.entries.size());
    for (const auto& entry : fused.entries) {
        context.entries.push_back(MergedEntry{entry.doc, fused.source, entry.rrf_score});
    }
    return context;
}

void require_single_ranker(const std::set<std::string>& rankers, Source source) {
    if (rankers.size() == 1) return;
    std::string found;
    for (const auto& ranker : rankers) {
        if (!found.empty()) found += ", ";
        found += ranker;
    }
    throw ValidationError("single-ranker mode expects exactly one " +
                          std::string(to_string(source)) + " ranker, found " +
                          (rankers.empty() ? "none" : found));
}

}  // namespace

FuseOutcome fuse_claims(Mode mode, const std::vector<Claim>& claims, const RunSets& runs,
                        const FusionConfig& config, std::optional<double> alpha) {
    validate(config);
    if (mode == Mode::LuRagAlpha && !alpha) {
        throw ValidationError("alpha mixing needs an alpha value");
    }
    if (mode == Mode::LRag) require_single_ranker(runs.labeled_rankers, Source::Labeled);
    if (mode == Mode::URag) require_single_ranker(runs.unlabeled_rankers, Source::Unlabeled);

    FuseOutcome outcome;
    outcome.contexts.reserve(claims.size());
    for (const auto& claim : claims) {
        FusedList labeled{claim.id, Source::Labeled, {}};
        FusedList unlabeled{claim.id, Source::Unlabeled, {}};
        if (mode_uses_labeled(mode)) {
            labeled = fuse_for_query(runs.labeled, claim.id, Source::Labeled, config);
            outcome.fused_labeled.push_back(labeled);
        }
        if (mode_uses_unlabeled(mode)) {
            unlabeled = fuse_for_query(runs.unlabeled, claim.id, Source::Unlabeled, config);
            outcome.fused_unlabeled.push_back(unlabeled);
        }

        switch (mode) {
            case Mode::ZeroShot:
                outcome.contexts.push_back(MergedContext{claim.id, {}});
                break;
            case Mode::LRag:
            case Mode::LRagRrf:
                outcome.contexts.push_back(passthrough_context(labeled));
                break;
            case Mode::URag:
            case Mode::URagRrf:
                outcome.contexts.push_back(passthrough_context(unlabeled));
                break;
            case Mode::LuRagAlpha:
                outcome.contexts.push_back(alpha_mix(labeled, unlabeled, *alpha, config.k));
                break;
            case Mode::HfRag:
                outcome.contexts.push_back(hierarchical_fuse(labeled, unlabeled, config));
                break;
        }
    }
    return outcome;
}

std::vector<Prediction> baseline_predictions(const std::vector<Claim>& claims,
                                             const std::vector<MergedContext>& contexts,
                                             const SourceStores& stores) {
    if (claims.size() != contexts.size()) {
        throw ValidationError("claim/context count mismatch: " + std::to_string(claims.size()) +
                              " vs " + std::to_string(contexts.size()));
    }
    std::vector<Prediction> predictions;
    predictions.reserve(claims.size());
    for (std::size_t i = 0; i < claims.size(); ++i) {
        predictions.push_back(baseline_predict(assemble(claims[i], contexts[i], stores)));
    }
    return predictions;
}

std::map<QueryId, Label> gold_labels(const std::vector<Claim>& claims) {
    std::map<QueryId, Label> gold;
    for (const auto& claim : claims) {
        if (!claim.gold_label) {
            throw ValidationError("claim '" + claim.id + "' has no gold label");
        }
        gold[claim.id] = *claim.gold_label;
    }
    return gold;
}

void write_contexts_jsonl(std::ostream& out, const std::vector<MergedContext>& contexts) {
    for (const auto& context : contexts) {
        nlohmann::json entries = nlohmann::json::array();
        for (const auto& entry : context.entries) {
            entries.push_back({{"doc", entry.doc},
                               {"source", to_string(entry.source)},
                               {"score", entry.z_score}});
        }
        nlohmann::json row;
        row["id"] = context.query;
        row["entries"] = std::move(entries);
        out << row.dump() << '\n';
    }
}

std::vector<MergedContext> parse_contexts_jsonl(std::istream& in) {
    std::vector<MergedContext> contexts;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        nlohmann::json row = nlohmann::json::parse(line, nullptr, false);
        if (row.is_discarded() || !row.is_object()) {
            throw ParseError(line_no, "not a JSON object");
        }
        MergedContext context;
        if (!row.contains("id") || !row["id"].is_string()) {
            throw ParseError(line_no, "missing \"id\"");
        }
        context.query = row["id"].get<std::string>();
        for (const auto& entry : row.value("entries", nlohmann::json::array())) {
            const auto source = try_parse_source(entry.at("source").get<std::string>());
            if (!source) {
                throw ParseError(line_no, "unknown source in context entry");
            }
            context.entries.push_back(MergedEntry{entry.at("doc").get<std::string>(), *source,
                                                  entry.at("score").get<double>()});
        }
        contexts.push_back(std::move(context));
    }
    return contexts;
}

// ---- file-level commands ----

namespace {

std::vector<Claim> load_claims(const PipelineConfig& config) {
    auto in = open_input(config.claims, "claims");
    return parse_claims_jsonl(in);
}

SourceStores load_stores(const PipelineConfig& config, bool need_labeled, bool need_unlabeled) {
    std::vector<LabeledExample> labeled;
    std::vector<Passage> unlabeled;
    if (need_labeled) {
        auto in = open_input(config.labeled_store, "labeled_store");
        labeled = parse_labeled_jsonl(in);
    }
    if (need_unlabeled) {
        auto in = open_input(config.corpus, "corpus");
        unlabeled = parse_corpus_jsonl(in);
    }
    return build_stores(labeled, unlabeled);
}

std::string load_template(const PipelineConfig& config) {
    if (config.template_file.empty()) {
        return std::string(kDefaultTemplate);
    }
    return read_file(config.template_file);
}

void write_snapshot(const PipelineConfig& config, const char* command) {
    write_file_atomic(config.output_dir / (std::string("resolved_config_") + command + ".json"),
                      config_snapshot(config));
}

void check_runset(const std::vector<RankedRun>& runs, const std::set<std::string>& rankers,
                  Source source) {
    const auto report = validate_runset(runs, rankers);
    if (!report.rank_gaps.empty() || !report.duplicate_docs.empty()) {
        throw ValidationError("invalid " + std::string(to_string(source)) + " run set:\n" +
                              report.summary());
    }
    for (const auto& missing : report.missing_runs) {
        std::cerr << "note: no " << to_string(source) << " run from ranker '" << missing.ranker
                  << "' for query '" << missing.query << "'\n";
    }
}

}  // namespace

void run_index(const PipelineConfig& config) {
    if (config.corpus.empty() && config.labeled_store.empty()) {
        throw ConfigError("index needs paths.corpus and/or paths.labeled_store");
    }
    if (!config.corpus.empty()) {
        auto in = open_input(config.corpus, "corpus");
        const auto index = build_index(parse_corpus_jsonl(in));
        std::ostringstream out;
        index.save(out);
        write_file_atomic(config.output_dir / "index_unlabeled.json", out.str());
    }
    if (!config.labeled_store.empty()) {
        auto in = open_input(config.labeled_store, "labeled_store");
        const auto index = build_index(parse_labeled_jsonl(in));
        std::ostringstream out;
        index.save(out);
        write_file_atomic(config.output_dir / "index_labeled.json", out.str());
    }
    write_snapshot(config, "index");
}

void run_retrieve(const PipelineConfig& config) {
    const auto claims = load_claims(config);

    auto retrieve_into = [&](const fs::path& index_path, Source source, const fs::path& run_path) {
        auto in = open_input(index_path, "index");
        const auto index = InvertedIndex::load(in);
        std::vector<RankedRun> runs;
        for (const auto& claim : claims) {
            auto run = search(index, config.bm25, claim.id, claim.text, config.fusion.pool_depth,
                              source);
            if (!run.entries.empty()) runs.push_back(std::move(run));
        }
        write_file_atomic(run_path, write_run_file(runs));
    };

    bool did_any = false;
    const auto unlabeled_index = config.output_dir / "index_unlabeled.json";
    if (fs::exists(unlabeled_index)) {
        retrieve_into(unlabeled_index, Source::Unlabeled, config.runs_unlabeled / "bm25.run");
        did_any = true;
    }
    const auto labeled_index = config.output_dir / "index_labeled.json";
    if (fs::exists(labeled_index)) {
        retrieve_into(labeled_index, Source::Labeled, config.runs_labeled / "bm25.run");
        did_any = true;
    }
    if (!did_any) {
        throw ConfigError("no index found under " + config.output_dir.string() +
                          " (run the index command first)");
    }
    write_snapshot(config, "retrieve");
}

void run_fuse(const PipelineConfig& config) {
    const auto claims = load_claims(config);
    const auto stores = load_stores(config, mode_uses_labeled(config.mode),
                                    mode_uses_unlabeled(config.mode));
    const auto runs = load_runs(config);

    if (mode_uses_labeled(config.mode)) {
        std::vector<RankedRun> flat;
        for (const auto& [query, query_runs] : runs.labeled) {
            flat.insert(flat.end(), query_runs.begin(), query_runs.end());
        }
        check_runset(flat, runs.labeled_rankers, Source::Labeled);
    }
    if (mode_uses_unlabeled(config.mode)) {
        std::vector<RankedRun> flat;
        for (const auto& [query, query_runs] : runs.unlabeled) {
            flat.insert(flat.end(), query_runs.begin(), query_runs.end());
        }
        check_runset(flat, runs.unlabeled_rankers, Source::Unlabeled);
    }

    const auto outcome = fuse_claims(config.mode, claims, runs, config.fusion, config.alpha);

    if (!outcome.fused_labeled.empty()) {
        std::ostringstream out;
        for (const auto& fused : outcome.fused_labeled) write_fused_run(out, fused);
        write_file_atomic(config.output_dir / "fused_labeled.run", out.str());
    }
    if (!outcome.fused_unlabeled.empty()) {
        std::ostringstream out;
        for (const auto& fused : outcome.fused_unlabeled) write_fused_run(out, fused);
        write_file_atomic(config.output_dir / "fused_unlabeled.run", out.str());
    }
    if (config.mode == Mode::HfRag || config.mode == Mode::LuRagAlpha) {
        const std::string tag = config.mode == Mode::HfRag ? "merged:hfrag" : "merged:alpha";
        std::ostringstream out;
        for (const auto& context : outcome.contexts) write_merged_run(out, context, tag);
        write_file_atomic(config.output_dir / "merged.run", out.str());
    }

    std::ostringstream contexts_out;
    write_contexts_jsonl(contexts_out, outcome.contexts);
    write_file_atomic(config.output_dir / "contexts.jsonl", contexts_out.str());

    std::vector<PromptRecord> records;
    records.reserve(claims.size());
    for (std::size_t i = 0; i < claims.size(); ++i) {
        records.push_back(assemble(claims[i], outcome.contexts[i], stores));
    }
    std::ostringstream prompts_out;
    write_prompts_jsonl(prompts_out, records, load_template(config));
    write_file_atomic(config.output_dir / "prompts.jsonl", prompts_out.str());

    write_snapshot(config, "fuse");
}

void run_predict(const PipelineConfig& config) {
    if (config.predictor == PredictorKind::External) {
        auto in = open_input(config.predictions, "predictions");
        const auto predictions = parse_predictions(in);
        std::ostringstream out;
        write_predictions_jsonl(out, predictions);
        write_file_atomic(config.output_dir / "predictions.jsonl", out.str());
        write_snapshot(config, "predict");
        return;
    }

    const auto claims = load_claims(config);
    auto contexts_in = open_input(config.output_dir / "contexts.jsonl", "contexts");
    const auto contexts = parse_contexts_jsonl(contexts_in);

    std::map<QueryId, const MergedContext*> by_id;
    for (const auto& context : contexts) by_id[context.query] = &context;
    std::vector<MergedContext> aligned;
    aligned.reserve(claims.size());
    bool any_labeled = false;
    bool any_unlabeled = false;
    for (const auto& claim : claims) {
        auto it = by_id.find(claim.id);
        if (it == by_id.end()) {
            throw ValidationError("no context emitted for claim '" + claim.id + "'");
        }
        aligned.push_back(*it->second);
        for (const auto& entry : it->second->entries) {
            (entry.source == Source::Labeled ? any_labeled : any_unlabeled) = true;
        }
    }

    const auto stores = load_stores(config, any_labeled, any_unlabeled);
    const auto predictions = baseline_predictions(claims, aligned, stores);
    std::ostringstream out;
    write_predictions_jsonl(out, predictions);
    write_file_atomic(config.output_dir / "predictions.jsonl", out.str());
    write_snapshot(config, "predict");
}

EvalOutcome run_eval(const PipelineConfig& config, std::ostream& out,
                     const std::optional<fs::path>& ndcg_run) {
    const auto claims = load_claims(config);
    const auto gold = gold_labels(claims);

    auto predictions_in = open_input(config.output_dir / "predictions.jsonl", "predictions");
    const auto predictions = parse_predictions(predictions_in);

    EvalOutcome outcome;
    outcome.report = macro_f1(gold, predictions);
    out << report_table(outcome.report);

    nlohmann::json report_json;
    report_json["macro_f1"] = outcome.report.macro_f1;
    report_json["n_claims"] = outcome.report.n_claims;
    report_json["n_missing_predictions"] = outcome.report.n_missing_predictions;
    nlohmann::json per_class;
    for (const auto& [label, metrics] : outcome.report.per_class) {
        per_class[to_string(label)] = {{"precision", metrics.precision},
                                       {"recall", metrics.recall},
                                       {"f1", metrics.f1}};
    }
    report_json["per_class"] = std::move(per_class);
    write_file_atomic(config.output_dir / "report.json", report_json.dump(2) + "\n");

    if (!config.qrels.empty()) {
        auto qrels_in = open_input(config.qrels, "qrels");
        const auto qrels = parse_qrels(qrels_in);

        DocRankings rankings;
        if (ndcg_run) {
            auto run_in = open_input(*ndcg_run, "ndcg run");
            // merged/fused tags carry no source; any placeholder works here
            for (const auto& run : parse_run_file(run_in, Source::Unlabeled)) {
                std::vector<DocId> docs;
                for (const auto& entry : run.entries) docs.push_back(entry.doc);
                rankings.emplace_back(run.query, std::move(docs));
            }
        } else {
            auto contexts_in = open_input(config.output_dir / "contexts.jsonl", "contexts");
            for (const auto& context : parse_contexts_jsonl(contexts_in)) {
                std::vector<DocId> docs;
                for (const auto& entry : context.entries) docs.push_back(entry.doc);
                rankings.emplace_back(context.query, std::move(docs));
            }
        }
        outcome.ndcg = ndcg_at_k(rankings, qrels, config.fusion.k);
        out << '\n' << ndcg_table(*outcome.ndcg);

        nlohmann::json ndcg_json;
        ndcg_json["k"] = config.fusion.k;
        ndcg_json["mean"] = outcome.ndcg->mean;
        ndcg_json["per_query"] = outcome.ndcg->per_query;
        ndcg_json["skipped"] = outcome.ndcg->skipped;
        write_file_atomic(config.output_dir / "ndcg.json", ndcg_json.dump(2) + "\n");
    }

    write_snapshot(config, "eval");
    return outcome;
}

std::map<int, double> run_sweep(const PipelineConfig& config, std::ostream& out) {
    if (config.predictor != PredictorKind::Baseline) {
        throw ConfigError("sweep supports only the baseline predictor");
    }
    if (config.sweep_sizes.empty()) {
        throw ConfigError("sweep needs sweep_sizes in the config (or --sizes)");
    }
    const auto claims = load_claims(config);
    const auto gold = gold_labels(claims);
    const auto stores = load_stores(config, mode_uses_labeled(config.mode),
                                    mode_uses_unlabeled(config.mode));
    const auto runs = load_runs(config);

    const auto by_size = sweep_context_size(
        [&](int size) {
            FusionConfig fusion = config.fusion;
            fusion.k = size;
            const auto outcome = fuse_claims(config.mode, claims, runs, fusion, config.alpha);
            const auto predictions = baseline_predictions(claims, outcome.contexts, stores);
            return macro_f1(gold, predictions).macro_f1;
        },
        config.sweep_sizes);

    const auto csv = sweep_csv(by_size);
    out << csv;
    write_file_atomic(config.output_dir / "sweep.csv", csv);
    write_snapshot(config, "sweep");
    return by_size;
}

OptselOutcome run_optsel(const PipelineConfig& config, std::ostream& out) {
    if (config.predictor != PredictorKind::Baseline) {
        throw ConfigError("optsel supports only the baseline predictor");
    }
    const auto claims = load_claims(config);
    const auto gold = gold_labels(claims);

    const bool have_labeled = fs::is_directory(config.runs_labeled);
    const bool have_unlabeled = fs::is_directory(config.runs_unlabeled);
    if (!have_labeled && !have_unlabeled) {
        throw ConfigError("optsel found no run directories under " + config.output_dir.string());
    }
    const auto stores = load_stores(config, have_labeled, have_unlabeled);

    std::map<ConfigId, std::map<QueryId, RankedRun>> by_config;
    auto collect = [&](const fs::path& dir, Source source) {
        for (auto& run : load_runs_dir(dir, source)) {
            const ConfigId id{source, run.ranker};
            if (!by_config[id].emplace(run.query, std::move(run)).second) {
                throw ValidationError("duplicate run for query in configuration " + to_string(id));
            }
        }
    };
    if (have_labeled) collect(config.runs_labeled, Source::Labeled);
    if (have_unlabeled) collect(config.runs_unlabeled, Source::Unlabeled);
    if (by_config.empty()) {
        throw ValidationError("optsel found no runs");
    }

    std::map<ConfigId, std::vector<Prediction>> per_config;
    for (const auto& [id, runs_by_query] : by_config) {
        std::vector<Prediction> predictions;
        predictions.reserve(claims.size());
        for (const auto& claim : claims) {
            FusedList fused{claim.id, id.source, {}};
            auto it = runs_by_query.find(claim.id);
            if (it != runs_by_query.end()) {
                fused = rrf_fuse({it->second}, config.fusion);
            }
            const auto context = passthrough_context(fused);
            predictions.push_back(baseline_predict(assemble(claim, context, stores)));
        }
        per_config.emplace(id, std::move(predictions));
    }

    OptselOutcome outcome;
    for (const auto& [id, predictions] : per_config) {
        outcome.scores[id] = macro_f1(gold, predictions).macro_f1;
    }
    auto [best, report] = optsel(per_config, gold);
    outcome.best = best;
    outcome.report = report;

    char line[128];
    out << "configuration         macro_f1\n";
    for (const auto& [id, score] : outcome.scores) {
        std::snprintf(line, sizeof(line), "%-20s  %8.4f\n", to_string(id).c_str(), score);
        out << line;
    }
    std::snprintf(line, sizeof(line), "best: %s (macro_f1 %.4f)\n", to_string(best).c_str(),
                  report.macro_f1);
    out << line;

    nlohmann::json optsel_json;
    optsel_json["best"] = {{"source", to_string(best.source)}, {"ranker", best.ranker}};
    optsel_json["macro_f1"] = report.macro_f1;
    nlohmann::json scores_json;
    for (const auto& [id, score] : outcome.scores) scores_json[to_string(id)] = score;
    optsel_json["per_config"] = std::move(scores_json);
    write_file_atomic(config.output_dir / "optsel.json", optsel_json.dump(2) + "\n");

    write_snapshot(config, "optsel");
    return outcome;
}

void write_file_atomic(const fs::path& path, std::string_view content) {
    if (path.has_parent_path()) {
        fs::create_directories(path.parent_path());
    }
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw std::runtime_error("cannot write " + tmp.string());
        }
        out << content;
    }
    fs::rename(tmp, path);
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot read " + path.string());
    }
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

}  // namespace hfrag
