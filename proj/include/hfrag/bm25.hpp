#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "hfrag/core.hpp"

namespace hfrag {

struct Bm25Params {
    double k1 = 1.2;
    double b = 0.75;
};

/// Lowercases and splits on non-alphanumeric bytes; empty tokens dropped.
std::vector<std::string> tokenize(std::string_view text);

struct Posting {
    std::uint32_t doc = 0;  // index into doc_ids()
    std::uint32_t tf = 0;
};

/// Immutable after build; concurrent searches are safe.
class InvertedIndex {
public:
    int doc_count() const { return static_cast<int>(doc_ids_.size()); }
    double avg_doc_length() const { return avg_doc_length_; }
    const std::vector<DocId>& doc_ids() const { return doc_ids_; }
    int doc_length(std::uint32_t doc) const { return static_cast<int>(doc_lengths_[doc]); }
    const std::vector<Posting>* postings(const std::string& term) const;
    int document_frequency(const std::string& term) const;

    /// Versioned JSON artifact; byte-identical for identical corpora.
    void save(std::ostream& out) const;
    static InvertedIndex load(std::istream& in);

    friend InvertedIndex build_index(const std::vector<std::pair<DocId, std::string>>& docs);

private:
    std::vector<DocId> doc_ids_;
    std::vector<std::uint32_t> doc_lengths_;
    std::unordered_map<std::string, std::vector<Posting>> postings_;
    double avg_doc_length_ = 0.0;
};

/// Duplicate DocId or an empty corpus is a ValidationError.
InvertedIndex build_index(const std::vector<std::pair<DocId, std::string>>& docs);
InvertedIndex build_index(const std::vector<Passage>& corpus);
/// Indexes the claim text of each example.
InvertedIndex build_index(const std::vector<LabeledExample>& store);

/// Scores every matching document with BM25,
///   idf = ln((N - df + 0.5) / (df + 0.5) + 1)
///   tf part = tf (k1 + 1) / (tf + k1 (1 - b + b dl/avgdl)),
/// each query token contributing one idf-weighted term. Returns the
/// `depth` best docs with score > 0, ranks 1..n, ties broken by DocId
/// ascending.
RankedRun search(const InvertedIndex& index, const Bm25Params& params, const QueryId& query_id,
                 std::string_view query_text, int depth, Source source,
                 const std::string& ranker = "bm25");

}  // namespace hfrag
