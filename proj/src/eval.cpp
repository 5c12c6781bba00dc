#include "hfrag/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace hfrag {

namespace {

constexpr Label kLabels[] = {Label::Supports, Label::Refutes, Label::NotEnoughInfo};

double safe_ratio(double numerator, double denominator) {
    return denominator == 0.0 ? 0.0 : numerator / denominator;
}

}  // namespace

EvalReport macro_f1(const std::map<QueryId, Label>& gold,
                    const std::vector<Prediction>& predictions) {
    if (gold.empty()) {
        throw ValidationError("macro_f1 needs a non-empty gold set");
    }

    std::map<QueryId, Label> predicted;
    for (const auto& prediction : predictions) {
        if (!gold.count(prediction.query)) {
            throw ValidationError("prediction for unknown query '" + prediction.query + "'");
        }
        if (!predicted.emplace(prediction.query, prediction.label).second) {
            throw ValidationError("repeated prediction for query '" + prediction.query + "'");
        }
    }

    EvalReport report;
    report.n_claims = static_cast<int>(gold.size());

    std::map<Label, int> tp, fp, fn;
    for (const auto& [query, gold_label] : gold) {
        Label label = Label::NotEnoughInfo;
        auto it = predicted.find(query);
        if (it == predicted.end()) {
            ++report.n_missing_predictions;
        } else {
            label = it->second;
        }
        if (label == gold_label) {
            ++tp[label];
        } else {
            ++fp[label];
            ++fn[gold_label];
        }
    }

    double f1_sum = 0.0;
    for (Label label : kLabels) {
        ClassMetrics metrics;
        metrics.precision = safe_ratio(tp[label], tp[label] + fp[label]);
        metrics.recall = safe_ratio(tp[label], tp[label] + fn[label]);
        metrics.f1 = safe_ratio(2.0 * metrics.precision * metrics.recall,
                                metrics.precision + metrics.recall);
        f1_sum += metrics.f1;
        report.per_class[label] = metrics;
    }
    report.macro_f1 = f1_sum / 3.0;
    return report;
}

NdcgReport ndcg_at_k(const DocRankings& rankings, const Qrels& qrels, int k) {
    if (k < 1) {
        throw ValidationError("ndcg cutoff must be >= 1");
    }
    NdcgReport report;
    std::set<QueryId> seen;
    double sum = 0.0;
    for (const auto& [query, docs] : rankings) {
        if (!seen.insert(query).second) {
            throw ValidationError("repeated query '" + query + "' in rankings");
        }
        const auto* judged = qrels.judged(query);
        std::vector<int> grades;
        if (judged) {
            for (const auto& [doc, grade] : *judged) {
                if (grade > 0) grades.push_back(grade);
            }
        }
        if (grades.empty()) {
            report.skipped.push_back(query);
            continue;
        }

        double dcg = 0.0;
        const auto cutoff = std::min<std::size_t>(docs.size(), static_cast<std::size_t>(k));
        for (std::size_t i = 0; i < cutoff; ++i) {
            const int grade = qrels.grade(query, docs[i]);
            if (grade > 0) {
                dcg += (std::exp2(grade) - 1.0) / std::log2(static_cast<double>(i) + 2.0);
            }
        }

        std::sort(grades.begin(), grades.end(), std::greater<>());
        double ideal = 0.0;
        const auto ideal_cutoff = std::min<std::size_t>(grades.size(), static_cast<std::size_t>(k));
        for (std::size_t i = 0; i < ideal_cutoff; ++i) {
            ideal += (std::exp2(grades[i]) - 1.0) / std::log2(static_cast<double>(i) + 2.0);
        }

        const double ndcg = dcg / ideal;
        report.per_query[query] = ndcg;
        sum += ndcg;
    }
    if (!report.per_query.empty()) {
        report.mean = sum / static_cast<double>(report.per_query.size());
    }
    return report;
}

std::string to_string(const ConfigId& config) {
    return std::string(to_string(config.source)) + ":" + config.ranker;
}

std::pair<ConfigId, EvalReport> optsel(
    const std::map<ConfigId, std::vector<Prediction>>& per_config_predictions,
    const std::map<QueryId, Label>& gold) {
    if (per_config_predictions.empty()) {
        throw ValidationError("optsel needs at least one configuration");
    }

    std::optional<std::set<QueryId>> covered;
    for (const auto& [config, predictions] : per_config_predictions) {
        std::set<QueryId> queries;
        for (const auto& prediction : predictions) queries.insert(prediction.query);
        if (!covered) {
            covered = std::move(queries);
        } else if (*covered != queries) {
            throw ValidationError("configuration " + to_string(config) +
                                  " covers a different claim set");
        }
    }

    std::optional<ConfigId> best;
    EvalReport best_report;
    for (const auto& [config, predictions] : per_config_predictions) {
        EvalReport report = macro_f1(gold, predictions);
        if (!best || report.macro_f1 > best_report.macro_f1) {
            best = config;
            best_report = report;
        }
    }
    return {*best, best_report};
}

std::map<int, double> sweep_context_size(const std::function<double(int size)>& pipeline,
                                         const std::vector<int>& sizes) {
    if (sizes.empty()) {
        throw ValidationError("sweep needs a non-empty size list");
    }
    std::map<int, double> by_size;
    for (int size : sizes) {
        try {
            by_size[size] = pipeline(size);
        } catch (const std::exception& e) {
            throw std::runtime_error("context size " + std::to_string(size) + ": " + e.what());
        }
    }
    return by_size;
}

std::string report_table(const EvalReport& report) {
    std::ostringstream out;
    char line[128];
    out << "class              precision    recall        f1\n";
    for (Label label : kLabels) {
        const auto& m = report.per_class.at(label);
        std::snprintf(line, sizeof(line), "%-16s    %8.4f  %8.4f  %8.4f\n", to_string(label),
                      m.precision, m.recall, m.f1);
        out << line;
    }
    std::snprintf(line, sizeof(line), "macro-F1 %.4f over %d claims (%d missing predictions)\n",
                  report.macro_f1, report.n_claims, report.n_missing_predictions);
    out << line;
    return out.str();
}

std::string ndcg_table(const NdcgReport& report) {
    std::ostringstream out;
    char line[128];
    out << "query                 ndcg\n";
    for (const auto& [query, value] : report.per_query) {
        std::snprintf(line, sizeof(line), "%-16s  %8.4f\n", query.c_str(), value);
        out << line;
    }
    std::snprintf(line, sizeof(line), "mean nDCG %.4f over %zu queries", report.mean,
                  report.per_query.size());
    out << line;
    if (!report.skipped.empty()) {
        out << " (skipped, no relevant docs:";
        for (const auto& query : report.skipped) out << ' ' << query;
        out << ')';
    }
    out << '\n';
    return out.str();
}

std::string sweep_csv(const std::map<int, double>& by_size) {
    std::ostringstream out;
    out << "size,macro_f1\n";
    for (const auto& [size, score] : by_size) {
        out << size << ',' << format_score(score) << '\n';
    }
    return out.str();
}

}  // namespace hfrag
