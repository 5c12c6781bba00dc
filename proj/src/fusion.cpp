#include "hfrag/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>
#include <set>

namespace hfrag {

void validate(const FusionConfig& config) {
    if (config.k < 1) {
        throw ValidationError("fusion k must be >= 1");
    }
    if (config.pool_depth < 1) {
        throw ValidationError("pool_depth must be >= 1");
    }
    if (config.missing_rank_m < 10 * config.pool_depth) {
        throw ValidationError("missing_rank_m must be >= 10 * pool_depth (" +
                              std::to_string(10 * config.pool_depth) + "), got " +
                              std::to_string(config.missing_rank_m));
    }
}

FusedList rrf_fuse(const std::vector<RankedRun>& runs, const FusionConfig& config) {
    validate(config);
    if (runs.empty()) {
        throw ValidationError("rrf_fuse needs at least one run");
    }
    const QueryId& query = runs.front().query;
    const Source source = runs.front().source;
    std::set<std::string> rankers;
    for (const auto& run : runs) {
        if (run.query != query) {
            throw ValidationError("rrf_fuse got runs for different queries: '" + query +
                                  "' vs '" + run.query + "'");
        }
        if (run.source != source) {
            throw ValidationError("rrf_fuse got runs from mixed sources for query '" + query + "'");
        }
        if (!rankers.insert(run.ranker).second) {
            throw ValidationError("duplicate ranker '" + run.ranker + "' for query '" + query + "'");
        }
    }

    // ordered map -> canonical doc enumeration
    std::map<DocId, std::vector<int>> ranks;
    for (const auto& run : runs) {
        for (const auto& entry : run.entries) {
            if (entry.rank < 1) {
                throw ValidationError("rank must be >= 1 for doc '" + entry.doc + "'");
            }
            ranks[entry.doc].push_back(entry.rank);
        }
    }

    FusedList fused{query, source, {}};
    fused.entries.reserve(ranks.size());
    for (auto& [doc, doc_ranks] : ranks) {
        std::sort(doc_ranks.begin(), doc_ranks.end());
        double score = 0.0;
        for (int rank : doc_ranks) {
            score += 1.0 / static_cast<double>(rank);
        }
        const auto missing = runs.size() - doc_ranks.size();
        score += static_cast<double>(missing) / static_cast<double>(config.missing_rank_m);
        fused.entries.push_back(FusedEntry{doc, score});
    }

    std::sort(fused.entries.begin(), fused.entries.end(),
              [](const FusedEntry& a, const FusedEntry& b) {
                  if (a.rrf_score != b.rrf_score) return a.rrf_score > b.rrf_score;
                  return a.doc < b.doc;
              });
    if (fused.entries.size() > static_cast<std::size_t>(config.k)) {
        fused.entries.resize(static_cast<std::size_t>(config.k));
    }
    return fused;
}

std::vector<MergedEntry> zscore_standardize(const FusedList& fused) {
    if (fused.entries.empty()) {
        throw ValidationError("cannot standardize an empty fused list (query '" + fused.query +
                              "')");
    }
    const auto n = static_cast<double>(fused.entries.size());
    double sum = 0.0;
    for (const auto& entry : fused.entries) sum += entry.rrf_score;
    const double mean = sum / n;

    double sq = 0.0;
    for (const auto& entry : fused.entries) {
        const double d = entry.rrf_score - mean;
        sq += d * d;
    }
    const double std_dev = std::sqrt(sq / n);

    std::vector<MergedEntry> standardized;
    standardized.reserve(fused.entries.size());
    for (const auto& entry : fused.entries) {
        const double z = std_dev == 0.0 ? 0.0 : (entry.rrf_score - mean) / std_dev;
        standardized.push_back(MergedEntry{entry.doc, fused.source, z});
    }
    return standardized;
}

namespace {

void check_merge_inputs(const FusedList& labeled, const FusedList& unlabeled) {
    if (labeled.source != Source::Labeled) {
        throw ValidationError("hierarchical merge: first list must carry source 'labeled'");
    }
    if (unlabeled.source != Source::Unlabeled) {
        throw ValidationError("hierarchical merge: second list must carry source 'unlabeled'");
    }
    if (!labeled.entries.empty() && !unlabeled.entries.empty() &&
        labeled.query != unlabeled.query) {
        throw ValidationError("cannot merge lists for different queries: '" + labeled.query +
                              "' vs '" + unlabeled.query + "'");
    }
}

QueryId merged_query(const FusedList& labeled, const FusedList& unlabeled) {
    return labeled.entries.empty() && !unlabeled.entries.empty() ? unlabeled.query : labeled.query;
}

}  // namespace

MergedContext hierarchical_fuse(const FusedList& labeled, const FusedList& unlabeled,
                                const FusionConfig& config) {
    validate(config);
    check_merge_inputs(labeled, unlabeled);

    MergedContext merged{merged_query(labeled, unlabeled), {}};
    if (!labeled.entries.empty()) {
        auto z = zscore_standardize(labeled);
        merged.entries.insert(merged.entries.end(), z.begin(), z.end());
    }
    if (!unlabeled.entries.empty()) {
        auto z = zscore_standardize(unlabeled);
        merged.entries.insert(merged.entries.end(), z.begin(), z.end());
    }

    std::sort(merged.entries.begin(), merged.entries.end(),
              [](const MergedEntry& a, const MergedEntry& b) {
                  if (a.z_score != b.z_score) return a.z_score > b.z_score;
                  if (a.source != b.source) return a.source == Source::Labeled;
                  return a.doc < b.doc;
              });
    if (merged.entries.size() > static_cast<std::size_t>(config.k)) {
        merged.entries.resize(static_cast<std::size_t>(config.k));
    }
    return merged;
}

MergedContext alpha_mix(const FusedList& labeled, const FusedList& unlabeled, double alpha,
                        int k) {
    if (!(alpha >= 0.0 && alpha <= 1.0)) {
        throw ValidationError("alpha must lie in [0, 1], got " + std::to_string(alpha));
    }
    if (k < 1) {
        throw ValidationError("alpha_mix k must be >= 1");
    }
    check_merge_inputs(labeled, unlabeled);

    const auto total_l = labeled.entries.size();
    const auto total_u = unlabeled.entries.size();

    // round half away from zero
    auto unlabeled_quota = static_cast<std::size_t>(std::llround(alpha * k));
    auto labeled_quota = static_cast<std::size_t>(k) - unlabeled_quota;

    auto take_u = std::min(unlabeled_quota, total_u);
    auto take_l = std::min(labeled_quota, total_l);
    auto shortfall = static_cast<std::size_t>(k) - take_u - take_l;
    const auto extra_l = std::min(shortfall, total_l - take_l);
    take_l += extra_l;
    shortfall -= extra_l;
    take_u += std::min(shortfall, total_u - take_u);

    MergedContext mixed{merged_query(labeled, unlabeled), {}};
    mixed.entries.reserve(take_u + take_l);
    for (std::size_t i = 0; i < take_u; ++i) {
        mixed.entries.push_back(
            MergedEntry{unlabeled.entries[i].doc, Source::Unlabeled, unlabeled.entries[i].rrf_score});
    }
    for (std::size_t i = 0; i < take_l; ++i) {
        mixed.entries.push_back(
            MergedEntry{labeled.entries[i].doc, Source::Labeled, labeled.entries[i].rrf_score});
    }
    return mixed;
}

double grid_search_alpha(
    const std::vector<Claim>& dev_claims,
    const std::function<double(double alpha, const std::vector<Claim>& claims)>& evaluate,
    std::vector<double> grid) {
    if (dev_claims.empty()) {
        throw ValidationError("grid search needs a non-empty dev claim set");
    }
    if (grid.empty()) {
        throw ValidationError("grid search needs a non-empty grid");
    }
    for (const auto& claim : dev_claims) {
        if (!claim.gold_label) {
            throw ValidationError("dev claim '" + claim.id + "' has no gold label");
        }
    }

    std::sort(grid.begin(), grid.end());
    double best_alpha = grid.front();
    double best_score = evaluate(grid.front(), dev_claims);
    for (std::size_t i = 1; i < grid.size(); ++i) {
        const double score = evaluate(grid[i], dev_claims);
        if (score > best_score) {
            best_score = score;
            best_alpha = grid[i];
        }
    }
    return best_alpha;
}

void write_fused_run(std::ostream& out, const FusedList& fused) {
    int rank = 1;
    for (const auto& entry : fused.entries) {
        out << fused.query << " Q0 " << entry.doc << ' ' << rank++ << ' '
            << format_score(entry.rrf_score) << " fused:" << to_string(fused.source) << '\n';
    }
}

void write_merged_run(std::ostream& out, const MergedContext& merged, std::string_view tag) {
    int rank = 1;
    for (const auto& entry : merged.entries) {
        out << merged.query << " Q0 " << entry.doc << ' ' << rank++ << ' '
            << format_score(entry.z_score) << ' ' << tag << '\n';
    }
}

}  // namespace hfrag
