#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "hfrag/core.hpp"
#include "hfrag/predictor.hpp"

namespace hfrag {

struct ClassMetrics {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

struct EvalReport {
    std::map<Label, ClassMetrics> per_class;
    double macro_f1 = 0.0;
    int n_claims = 0;
    int n_missing_predictions = 0;
};

/// Macro-F1 over the three labels. Precision/recall/F1 use the 0/0 -> 0
/// convention and classes absent from gold still average in with f1 = 0.
/// Claims without a prediction count as NOT_ENOUGH_INFO and are tallied
/// in n_missing_predictions. Predictions for unknown or repeated query
/// ids are errors.
EvalReport macro_f1(const std::map<QueryId, Label>& gold,
                    const std::vector<Prediction>& predictions);

struct NdcgReport {
    std::map<QueryId, double> per_query;
    double mean = 0.0;
    /// Queries with no relevant doc in the qrels; excluded from the mean.
    std::vector<QueryId> skipped;
};

/// One ordered doc list per query (a run or a merged context).
using DocRankings = std::vector<std::pair<QueryId, std::vector<DocId>>>;

/// nDCG@k with exponential gain: DCG = sum (2^grade - 1) / log2(i + 1).
/// The ideal ordering comes from the query's qrels grades sorted
/// descending.
NdcgReport ndcg_at_k(const DocRankings& rankings, const Qrels& qrels, int k);

/// One single-ranker single-source configuration.
struct ConfigId {
    Source source = Source::Labeled;
    std::string ranker;

    bool operator<(const ConfigId& other) const {
        if (source != other.source) return source == Source::Labeled;
        return ranker < other.ranker;
    }
    bool operator==(const ConfigId& other) const = default;
};

std::string to_string(const ConfigId& config);

/// Label-informed upper bound: evaluates every configuration and
/// returns the macro-F1 argmax, ties to the smallest (source, ranker).
/// All configurations must cover the same claim set.
std::pair<ConfigId, EvalReport> optsel(
    const std::map<ConfigId, std::vector<Prediction>>& per_config_predictions,
    const std::map<QueryId, Label>& gold);

/// Runs the pipeline closure once per context size. Failures are
/// rethrown annotated with the size that caused them.
std::map<int, double> sweep_context_size(const std::function<double(int size)>& pipeline,
                                         const std::vector<int>& sizes);

// report emission
std::string report_table(const EvalReport& report);
std::string ndcg_table(const NdcgReport& report);
std::string sweep_csv(const std::map<int, double>& by_size);

}  // namespace hfrag
