#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "hfrag/bm25.hpp"
#include "hfrag/context.hpp"
#include "hfrag/core.hpp"
#include "hfrag/eval.hpp"
#include "hfrag/fusion.hpp"
#include "hfrag/predictor.hpp"

namespace hfrag {

/// Usage or configuration problem (exit code 1, as opposed to data
/// errors which exit 2).
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class Mode { ZeroShot, LRag, URag, LRagRrf, URagRrf, LuRagAlpha, HfRag };
enum class PredictorKind { Baseline, External };

Mode parse_mode(std::string_view text);
const char* to_string(Mode mode);
bool mode_uses_labeled(Mode mode);
bool mode_uses_unlabeled(Mode mode);

/// One experiment description, loaded from a JSON config file.
/// Relative paths resolve against the config file's directory.
struct PipelineConfig {
    std::filesystem::path corpus;
    std::filesystem::path labeled_store;
    std::filesystem::path claims;
    std::filesystem::path qrels;
    std::filesystem::path runs_labeled;    // defaults to <output_dir>/runs/labeled
    std::filesystem::path runs_unlabeled;  // defaults to <output_dir>/runs/unlabeled
    std::filesystem::path template_file;
    std::filesystem::path predictions;     // external predictor output
    std::filesystem::path output_dir;

    FusionConfig fusion;
    Bm25Params bm25;
    Mode mode = Mode::HfRag;
    std::optional<double> alpha;
    PredictorKind predictor = PredictorKind::Baseline;
    std::vector<int> sweep_sizes;
};

PipelineConfig load_config(const std::filesystem::path& path);
/// Resolved-config snapshot written beside every command's outputs.
std::string config_snapshot(const PipelineConfig& config);

// ---- in-memory pipeline stages (shared by the CLI and tests) ----

struct RunSets {
    std::map<QueryId, std::vector<RankedRun>> labeled;
    std::map<QueryId, std::vector<RankedRun>> unlabeled;
    std::set<std::string> labeled_rankers;
    std::set<std::string> unlabeled_rankers;
};

/// Parses every file in a run directory (filename order); runs tagged
/// with a different source than the directory's are rejected.
std::vector<RankedRun> load_runs_dir(const std::filesystem::path& dir, Source source);
RunSets load_runs(const PipelineConfig& config);

struct FuseOutcome {
    std::vector<FusedList> fused_labeled;
    std::vector<FusedList> fused_unlabeled;
    std::vector<MergedContext> contexts;  // aligned with the claim list
};

/// Builds one context per claim according to the mode: pass-through and
/// RRF modes stay within one source, alpha and hierarchical modes merge
/// both. Claims without runs get empty contexts.
FuseOutcome fuse_claims(Mode mode, const std::vector<Claim>& claims, const RunSets& runs,
                        const FusionConfig& config, std::optional<double> alpha);

std::vector<Prediction> baseline_predictions(const std::vector<Claim>& claims,
                                             const std::vector<MergedContext>& contexts,
                                             const SourceStores& stores);

/// Gold map for evaluation; claims without labels are a ValidationError.
std::map<QueryId, Label> gold_labels(const std::vector<Claim>& claims);

// contexts.jsonl: {"id", "entries": [{"doc", "source", "score"}]} per
// claim, preserving context order and per-entry source provenance.
void write_contexts_jsonl(std::ostream& out, const std::vector<MergedContext>& contexts);
std::vector<MergedContext> parse_contexts_jsonl(std::istream& in);

// ---- file-level commands (one per CLI subcommand) ----

void run_index(const PipelineConfig& config);
void run_retrieve(const PipelineConfig& config);
void run_fuse(const PipelineConfig& config);
void run_predict(const PipelineConfig& config);

struct EvalOutcome {
    EvalReport report;
    std::optional<NdcgReport> ndcg;
};
/// Prints the report table(s) to `out`, writes report.json (and
/// ndcg.json when qrels are configured). `ndcg_run` overrides the doc
/// rankings used for nDCG (default: the emitted contexts).
EvalOutcome run_eval(const PipelineConfig& config, std::ostream& out,
                     const std::optional<std::filesystem::path>& ndcg_run = std::nullopt);

std::map<int, double> run_sweep(const PipelineConfig& config, std::ostream& out);

struct OptselOutcome {
    ConfigId best;
    EvalReport report;
    std::map<ConfigId, double> scores;
};
OptselOutcome run_optsel(const PipelineConfig& config, std::ostream& out);

// ---- small file helpers ----

/// Writes via a temp file + rename; creates parent directories.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);
std::string read_file(const std::filesystem::path& path);

}  // namespace hfrag
