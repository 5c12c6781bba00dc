#include "hfrag/bm25.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <unordered_set>

#include <json.hpp>

namespace hfrag {

std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> tokens;
    std::string current;
    for (char c : text) {
        const auto u = static_cast<unsigned char>(c);
        if (u < 0x80 && std::isalnum(u)) {
            current.push_back(static_cast<char>(std::tolower(u)));
        } else if (!current.empty()) {
            tokens.push_back(std::move(current));
            current.clear();
        }
    }
    if (!current.empty()) tokens.push_back(std::move(current));
    return tokens;
}

const std::vector<Posting>* InvertedIndex::postings(const std::string& term) const {
    auto it = postings_.find(term);
    return it == postings_.end() ? nullptr : &it->second;
}

int InvertedIndex::document_frequency(const std::string& term) const {
    const auto* list = postings(term);
    return list ? static_cast<int>(list->size()) : 0;
}

InvertedIndex build_index(const std::vector<std::pair<DocId, std::string>>& docs) {
    if (docs.empty()) {
        throw ValidationError("cannot build an index over an empty corpus");
    }
    InvertedIndex index;
    index.doc_ids_.reserve(docs.size());
    index.doc_lengths_.reserve(docs.size());

    std::unordered_set<std::string> seen;
    std::uint64_t total_length = 0;
    for (const auto& [id, text] : docs) {
        if (!seen.insert(id).second) {
            throw ValidationError("duplicate doc id '" + id + "' in corpus");
        }
        const auto doc = static_cast<std::uint32_t>(index.doc_ids_.size());
        index.doc_ids_.push_back(id);

        const auto tokens = tokenize(text);
        index.doc_lengths_.push_back(static_cast<std::uint32_t>(tokens.size()));
        total_length += tokens.size();

        std::map<std::string, std::uint32_t> counts;
        for (const auto& token : tokens) ++counts[token];
        for (const auto& [term, tf] : counts) {
            index.postings_[term].push_back(Posting{doc, tf});
        }
    }
    index.avg_doc_length_ = static_cast<double>(total_length) / static_cast<double>(docs.size());
    return index;
}

InvertedIndex build_index(const std::vector<Passage>& corpus) {
    std::vector<std::pair<DocId, std::string>> docs;
    docs.reserve(corpus.size());
    for (const auto& passage : corpus) docs.emplace_back(passage.id, passage.text);
    return build_index(docs);
}

InvertedIndex build_index(const std::vector<LabeledExample>& store) {
    std::vector<std::pair<DocId, std::string>> docs;
    docs.reserve(store.size());
    for (const auto& example : store) docs.emplace_back(example.id, example.claim_text);
    return build_index(docs);
}

RankedRun search(const InvertedIndex& index, const Bm25Params& params, const QueryId& query_id,
                 std::string_view query_text, int depth, Source source,
                 const std::string& ranker) {
    if (depth < 1) {
        throw ValidationError("search depth must be >= 1");
    }
    const auto n = static_cast<double>(index.doc_count());
    std::vector<double> scores(static_cast<std::size_t>(index.doc_count()), 0.0);

    for (const auto& token : tokenize(query_text)) {
        const auto* list = index.postings(token);
        if (!list) continue;
        const auto df = static_cast<double>(list->size());
        const double idf = std::log((n - df + 0.5) / (df + 0.5) + 1.0);
        for (const auto& posting : *list) {
            const auto tf = static_cast<double>(posting.tf);
            const double norm =
                params.k1 * (1.0 - params.b +
                             params.b * index.doc_length(posting.doc) / index.avg_doc_length());
            scores[posting.doc] += idf * tf * (params.k1 + 1.0) / (tf + norm);
        }
    }

    std::vector<std::uint32_t> matched;
    for (std::uint32_t doc = 0; doc < scores.size(); ++doc) {
        if (scores[doc] > 0.0) matched.push_back(doc);
    }
    std::sort(matched.begin(), matched.end(), [&](std::uint32_t a, std::uint32_t b) {
        if (scores[a] != scores[b]) return scores[a] > scores[b];
        return index.doc_ids()[a] < index.doc_ids()[b];
    });
    if (matched.size() > static_cast<std::size_t>(depth)) {
        matched.resize(static_cast<std::size_t>(depth));
    }

    RankedRun run{query_id, source, ranker, {}};
    run.entries.reserve(matched.size());
    int rank = 1;
    for (auto doc : matched) {
        run.entries.push_back(RunEntry{index.doc_ids()[doc], rank++, scores[doc]});
    }
    return run;
}

namespace {
constexpr const char* kIndexFormat = "hfrag.bm25_index";
constexpr int kIndexVersion = 1;
}  // namespace

void InvertedIndex::save(std::ostream& out) const {
    nlohmann::json artifact;
    artifact["format"] = kIndexFormat;
    artifact["version"] = kIndexVersion;
    artifact["avg_doc_length"] = avg_doc_length_;

    nlohmann::json docs = nlohmann::json::array();
    for (std::size_t i = 0; i < doc_ids_.size(); ++i) {
        docs.push_back({{"id", doc_ids_[i]}, {"len", doc_lengths_[i]}});
    }
    artifact["docs"] = std::move(docs);

    // std::map keys give a sorted, reproducible posting order
    std::map<std::string, nlohmann::json> terms;
    for (const auto& [term, list] : postings_) {
        nlohmann::json rows = nlohmann::json::array();
        for (const auto& posting : list) {
            rows.push_back({posting.doc, posting.tf});
        }
        terms.emplace(term, std::move(rows));
    }
    artifact["postings"] = terms;

    out << artifact.dump(2) << '\n';
}

InvertedIndex InvertedIndex::load(std::istream& in) {
    nlohmann::json artifact = nlohmann::json::parse(in, nullptr, false);
    if (artifact.is_discarded() || !artifact.is_object()) {
        throw ParseError("index artifact is not valid JSON");
    }
    if (artifact.value("format", "") != kIndexFormat) {
        throw ParseError("not an index artifact (missing format marker)");
    }
    if (artifact.value("version", 0) != kIndexVersion) {
        throw ParseError("unsupported index version " +
                         std::to_string(artifact.value("version", 0)));
    }

    InvertedIndex index;
    index.avg_doc_length_ = artifact.at("avg_doc_length").get<double>();
    for (const auto& doc : artifact.at("docs")) {
        index.doc_ids_.push_back(doc.at("id").get<std::string>());
        index.doc_lengths_.push_back(doc.at("len").get<std::uint32_t>());
    }
    for (const auto& [term, rows] : artifact.at("postings").items()) {
        auto& list = index.postings_[term];
        for (const auto& row : rows) {
            list.push_back(Posting{row.at(0).get<std::uint32_t>(), row.at(1).get<std::uint32_t>()});
        }
    }
    if (index.doc_ids_.empty()) {
        throw ValidationError("index artifact holds no documents");
    }
    return index;
}

}  // namespace hfrag
