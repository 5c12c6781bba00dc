#pragma once

#include <functional>
#include <iosfwd>
#include <string_view>
#include <vector>

#include "hfrag/core.hpp"

namespace hfrag {

/// k: final context size. pool_depth: per-ranker candidate list length.
/// missing_rank_m: rank charged to a doc absent from a ranker's list;
/// must stay large relative to the pool (floor 10 * pool_depth).
struct FusionConfig {
    int k = 10;
    int pool_depth = 50;
    int missing_rank_m = 1000;
};

void validate(const FusionConfig& config);

struct FusedEntry {
    DocId doc;
    double rrf_score = 0.0;
};

/// Per-source fusion output, sorted by score descending, ties by DocId
/// ascending, at most k entries.
struct FusedList {
    QueryId query;
    Source source = Source::Unlabeled;
    std::vector<FusedEntry> entries;
};

struct MergedEntry {
    DocId doc;
    Source source = Source::Unlabeled;
    /// Standardized score for hierarchical merges; the source-local RRF
    /// score for alpha mixes and single-source pass-throughs.
    double z_score = 0.0;
};

/// Cross-source top-k context with per-entry provenance.
struct MergedContext {
    QueryId query;
    std::vector<MergedEntry> entries;
};

/// Reciprocal rank fusion of one (query, source)'s runs: each doc in
/// the union scores sum(1/rank) over the runs, where a run not listing
/// the doc charges rank missing_rank_m. Keeps the top k by score, ties
/// by DocId. Accepts a single run, so single-ranker configurations use
/// the same path. Reciprocals accumulate in ascending rank order, which
/// makes the output invariant under run permutation.
FusedList rrf_fuse(const std::vector<RankedRun>& runs, const FusionConfig& config);

/// z_i = (s_i - mean) / population std over this list's scores; all
/// zeros when the std is 0 (constant or singleton list). Output keeps
/// the input order. Empty list is an error.
std::vector<MergedEntry> zscore_standardize(const FusedList& fused);

/// Standardizes each side independently, merges, and keeps the top k by
/// z descending; ties order labeled before unlabeled, then DocId. Raw
/// RRF scores are never compared across sources.
MergedContext hierarchical_fuse(const FusedList& labeled, const FusedList& unlabeled,
                                const FusionConfig& config);

/// Proportional mixture: the top round(alpha*k) unlabeled entries
/// followed by the top k - round(alpha*k) labeled ones, each side in its
/// own order; a short side is backfilled from the other. Rounding is
/// half away from zero. Entries carry raw RRF scores.
MergedContext alpha_mix(const FusedList& labeled, const FusedList& unlabeled, double alpha, int k);

/// Returns the grid value with the highest evaluation score on the dev
/// claims; ties go to the smaller alpha. Every dev claim must carry a
/// gold label.
double grid_search_alpha(
    const std::vector<Claim>& dev_claims,
    const std::function<double(double alpha, const std::vector<Claim>& claims)>& evaluate,
    std::vector<double> grid);

// 6-field run serialization so standard IR eval tools can consume
// fusion output. Tags: "fused:<source>" and "merged:<name>".
void write_fused_run(std::ostream& out, const FusedList& fused);
void write_merged_run(std::ostream& out, const MergedContext& merged,
                      std::string_view tag = "merged:hfrag");

}  // namespace hfrag
