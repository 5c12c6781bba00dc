#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace hfrag {

using DocId = std::string;
using QueryId = std::string;

/// Which store a run or context entry was retrieved from.
enum class Source { Labeled, Unlabeled };

/// The three verification labels. The set is closed: anything else is
/// rejected at parse time.
enum class Label { Supports, Refutes, NotEnoughInfo };

/// Input could not be decoded (wrong field count, bad number, bad JSON).
/// `line` is 1-based; 0 when no line applies.
class ParseError : public std::runtime_error {
public:
    explicit ParseError(const std::string& what) : std::runtime_error(what) {}
    ParseError(int line, const std::string& what)
        : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
    int line() const { return line_; }

private:
    int line_ = 0;
};

/// Decoded input violates a domain invariant (duplicate ids, mixed
/// sources, empty corpus, ...).
class ValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

const char* to_string(Source source);
const char* to_string(Label label);

/// Parses "labeled" / "unlabeled" (exact, lowercase).
Source parse_source(std::string_view text);
std::optional<Source> try_parse_source(std::string_view text);

/// Case-insensitive label lookup over the alias map:
/// supports/support, refutes/refute, nei / not enough info /
/// not-enough-information / not_enough_info.
Label parse_label(std::string_view text);
std::optional<Label> try_parse_label(std::string_view text);

struct RunEntry {
    DocId doc;
    int rank = 0;
    double score = 0.0;
};

/// One ranker's ordered result list for one query. Validated runs have
/// consecutive ranks 1..n, non-increasing scores and no duplicate docs;
/// parse_run_file enforces the duplicate rule, validate_runset reports
/// the rest.
struct RankedRun {
    QueryId query;
    Source source = Source::Unlabeled;
    std::string ranker;
    std::vector<RunEntry> entries;
};

struct Claim {
    QueryId id;
    std::string text;
    std::optional<Label> gold_label;
};

struct LabeledExample {
    DocId id;
    std::string claim_text;
    Label label = Label::NotEnoughInfo;
    std::optional<std::string> evidence;
};

struct Passage {
    DocId id;
    std::string text;
    std::optional<std::string> title;
};

/// Graded relevance judgments. Missing pairs read as grade 0.
class Qrels {
public:
    void set(const QueryId& query, const DocId& doc, int grade);
    int grade(const QueryId& query, const DocId& doc) const;
    bool has_query(const QueryId& query) const;
    /// Judged docs for one query, or nullptr when the query is absent.
    const std::map<DocId, int>* judged(const QueryId& query) const;
    const std::map<QueryId, std::map<DocId, int>>& by_query() const { return grades_; }
    std::size_t size() const;

private:
    std::map<QueryId, std::map<DocId, int>> grades_;
};

/// Renders a score as its shortest round-trip decimal, padded with
/// zeros to at least 6 significant digits.
std::string format_score(double value);

/// Reads the 6-field run format: `qid Q0 docid rank score tag`.
/// The second column is ignored on input. The tag encodes source and
/// ranker as "source:ranker"; a tag without a recognized source prefix
/// names just the ranker and requires `default_source`. `ranker_override`
/// wins over the tag when given. Lines are grouped into one RankedRun
/// per (qid, source, ranker), entries sorted by rank ascending.
///
/// Throws ParseError (with line number) on malformed lines and
/// ValidationError on a duplicate doc within a run.
std::vector<RankedRun> parse_run_file(std::istream& in,
                                      std::optional<Source> default_source = std::nullopt,
                                      std::optional<std::string> ranker_override = std::nullopt);

/// Emits the 6-field format with tag "source:ranker". parse_run_file of
/// the output reproduces the input exactly.
void write_run_file(std::ostream& out, const std::vector<RankedRun>& runs);
std::string write_run_file(const std::vector<RankedRun>& runs);

/// Reads `qid 0 docid grade` lines. A repeated pair with the same grade
/// is tolerated; a conflicting grade is a ValidationError.
Qrels parse_qrels(std::istream& in);

/// What validate_runset found. Empty report == valid run set.
struct RunsetReport {
    struct MissingRun {
        QueryId query;
        std::string ranker;
    };
    struct RankGap {
        QueryId query;
        std::string ranker;
        int expected_rank = 0;
        int actual_rank = 0;
    };
    struct DuplicateDoc {
        QueryId query;
        std::string ranker;
        DocId doc;
    };

    std::vector<MissingRun> missing_runs;
    std::vector<RankGap> rank_gaps;
    std::vector<DuplicateDoc> duplicate_docs;

    bool ok() const { return missing_runs.empty() && rank_gaps.empty() && duplicate_docs.empty(); }
    std::string summary() const;
};

/// Checks that every query seen has a run from every expected ranker,
/// that ranks are 1..n consecutive, and that no run repeats a doc.
RunsetReport validate_runset(const std::vector<RankedRun>& runs,
                             const std::set<std::string>& expected_rankers);

// JSONL record streams, one object per line, UTF-8.
//   corpus:  {"id", "text", "title"?}
//   labeled: {"id", "claim", "label", "evidence"?}
//   claims:  {"id", "text", "label"?}
std::vector<Passage> parse_corpus_jsonl(std::istream& in);
std::vector<LabeledExample> parse_labeled_jsonl(std::istream& in);
std::vector<Claim> parse_claims_jsonl(std::istream& in);

}  // namespace hfrag
