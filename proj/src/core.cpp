#include "hfrag/core.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <istream>
#include <ostream>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

namespace hfrag {

namespace {

std::string lowercase(std::string_view text) {
    std::string out(text);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> fields;
    std::istringstream stream(line);
    std::string field;
    while (stream >> field) {
        fields.push_back(field);
    }
    return fields;
}

int parse_positive_int(const std::string& text, int line, const char* what) {
    int value = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || ptr != text.data() + text.size()) {
        throw ParseError(line, std::string("expected an integer ") + what + ", got '" + text + "'");
    }
    return value;
}

double parse_double(const std::string& text, int line, const char* what) {
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || ptr != text.data() + text.size()) {
        throw ParseError(line, std::string("expected a number ") + what + ", got '" + text + "'");
    }
    return value;
}

nlohmann::json parse_json_line(const std::string& line, int line_no) {
    nlohmann::json record = nlohmann::json::parse(line, nullptr, false);
    if (record.is_discarded() || !record.is_object()) {
        throw ParseError(line_no, "not a JSON object");
    }
    return record;
}

std::string require_string(const nlohmann::json& record, const char* key, int line_no) {
    auto it = record.find(key);
    if (it == record.end() || !it->is_string()) {
        throw ParseError(line_no, std::string("missing or non-string field \"") + key + "\"");
    }
    return it->get<std::string>();
}

std::optional<std::string> optional_string(const nlohmann::json& record, const char* key,
                                           int line_no) {
    auto it = record.find(key);
    if (it == record.end() || it->is_null()) {
        return std::nullopt;
    }
    if (!it->is_string()) {
        throw ParseError(line_no, std::string("field \"") + key + "\" must be a string");
    }
    return it->get<std::string>();
}

void require_token(const std::string& value, const char* what, int line_no) {
    if (value.empty()) {
        throw ParseError(line_no, std::string(what) + " must be non-empty");
    }
    if (value.find_first_of(" \t\r\n") != std::string::npos) {
        throw ParseError(line_no, std::string(what) + " must not contain whitespace: '" + value + "'");
    }
}

}  // namespace

const char* to_string(Source source) {
    return source == Source::Labeled ? "labeled" : "unlabeled";
}

const char* to_string(Label label) {
    switch (label) {
        case Label::Supports: return "SUPPORTS";
        case Label::Refutes: return "REFUTES";
        case Label::NotEnoughInfo: return "NOT_ENOUGH_INFO";
    }
    return "NOT_ENOUGH_INFO";
}

std::optional<Source> try_parse_source(std::string_view text) {
    if (text == "labeled") return Source::Labeled;
    if (text == "unlabeled") return Source::Unlabeled;
    return std::nullopt;
}

Source parse_source(std::string_view text) {
    if (auto source = try_parse_source(text)) {
        return *source;
    }
    throw ValidationError("unknown source '" + std::string(text) + "' (expected labeled|unlabeled)");
}

std::optional<Label> try_parse_label(std::string_view text) {
    const std::string folded = lowercase(text);
    if (folded == "supports" || folded == "support") return Label::Supports;
    if (folded == "refutes" || folded == "refute") return Label::Refutes;
    if (folded == "nei" || folded == "not enough info" || folded == "not-enough-information" ||
        folded == "not_enough_info") {
        return Label::NotEnoughInfo;
    }
    return std::nullopt;
}

Label parse_label(std::string_view text) {
    if (auto label = try_parse_label(text)) {
        return *label;
    }
    throw ValidationError("unknown label '" + std::string(text) + "'");
}

void Qrels::set(const QueryId& query, const DocId& doc, int grade) {
    grades_[query][doc] = grade;
}

int Qrels::grade(const QueryId& query, const DocId& doc) const {
    auto qit = grades_.find(query);
    if (qit == grades_.end()) return 0;
    auto dit = qit->second.find(doc);
    return dit == qit->second.end() ? 0 : dit->second;
}

bool Qrels::has_query(const QueryId& query) const {
    return grades_.count(query) > 0;
}

const std::map<DocId, int>* Qrels::judged(const QueryId& query) const {
    auto it = grades_.find(query);
    return it == grades_.end() ? nullptr : &it->second;
}

std::size_t Qrels::size() const {
    std::size_t total = 0;
    for (const auto& [query, docs] : grades_) {
        total += docs.size();
    }
    return total;
}

std::string format_score(double value) {
    if (value == 0.0) value = 0.0;  // canonicalize -0
    char buffer[64];
    auto [end, ec] = std::to_chars(buffer, buffer + sizeof(buffer), value);
    std::string text(buffer, end);

    auto exp_pos = text.find_first_of("eE");
    std::string mantissa = exp_pos == std::string::npos ? text : text.substr(0, exp_pos);
    const std::string exponent = exp_pos == std::string::npos ? "" : text.substr(exp_pos);

    int significant = 0;
    bool seen_nonzero = false;
    for (char c : mantissa) {
        if (c < '0' || c > '9') continue;
        if (c != '0') seen_nonzero = true;
        if (seen_nonzero) ++significant;
    }
    if (!seen_nonzero) significant = 1;  // plain zero
    if (significant >= 6) return text;

    if (mantissa.find('.') == std::string::npos) mantissa += '.';
    mantissa.append(static_cast<std::size_t>(6 - significant), '0');
    return mantissa + exponent;
}

std::vector<RankedRun> parse_run_file(std::istream& in, std::optional<Source> default_source,
                                      std::optional<std::string> ranker_override) {
    struct Key {
        QueryId query;
        Source source;
        std::string ranker;
        bool operator==(const Key&) const = default;
    };

    std::vector<RankedRun> runs;
    std::vector<Key> keys;  // parallel to runs, first-appearance order

    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;

        const auto fields = split_fields(line);
        if (fields.size() != 6) {
            throw ParseError(line_no, "expected 6 fields (qid Q0 docid rank score tag), got " +
                                          std::to_string(fields.size()));
        }
        const std::string& query = fields[0];
        const std::string& doc = fields[2];
        const int rank = parse_positive_int(fields[3], line_no, "rank");
        if (rank < 1) {
            throw ParseError(line_no, "rank must be >= 1, got " + std::to_string(rank));
        }
        const double score = parse_double(fields[4], line_no, "score");
        const std::string& tag = fields[5];

        Source source;
        std::string ranker;
        const auto colon = tag.find(':');
        const auto tag_source =
            colon == std::string::npos ? std::nullopt : try_parse_source(tag.substr(0, colon));
        if (tag_source) {
            source = *tag_source;
            ranker = tag.substr(colon + 1);
        } else if (default_source) {
            source = *default_source;
            ranker = tag;
        } else {
            throw ParseError(line_no, "tag '" + tag +
                                          "' does not encode a source and no default source was given");
        }
        if (ranker_override) ranker = *ranker_override;
        if (ranker.empty()) {
            throw ParseError(line_no, "empty ranker name in tag '" + tag + "'");
        }

        const Key key{query, source, ranker};
        auto it = std::find(keys.begin(), keys.end(), key);
        RankedRun* run = nullptr;
        if (it == keys.end()) {
            keys.push_back(key);
            runs.push_back(RankedRun{query, source, ranker, {}});
            run = &runs.back();
        } else {
            run = &runs[static_cast<std::size_t>(it - keys.begin())];
        }
        run->entries.push_back(RunEntry{doc, rank, score});
    }

    for (auto& run : runs) {
        std::sort(run.entries.begin(), run.entries.end(), [](const RunEntry& a, const RunEntry& b) {
            return a.rank != b.rank ? a.rank < b.rank : a.doc < b.doc;
        });
        std::unordered_set<std::string> seen;
        for (const auto& entry : run.entries) {
            if (!seen.insert(entry.doc).second) {
                throw ValidationError("duplicate doc '" + entry.doc + "' for query '" + run.query +
                                      "' in run " + to_string(run.source) + ":" + run.ranker);
            }
        }
    }
    return runs;
}

void write_run_file(std::ostream& out, const std::vector<RankedRun>& runs) {
    for (const auto& run : runs) {
        for (const auto& entry : run.entries) {
            out << run.query << " Q0 " << entry.doc << ' ' << entry.rank << ' '
                << format_score(entry.score) << ' ' << to_string(run.source) << ':' << run.ranker
                << '\n';
        }
    }
}

std::string write_run_file(const std::vector<RankedRun>& runs) {
    std::ostringstream out;
    write_run_file(out, runs);
    return out.str();
}

Qrels parse_qrels(std::istream& in) {
    Qrels qrels;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;

        const auto fields = split_fields(line);
        if (fields.size() != 4) {
            throw ParseError(line_no, "expected 4 fields (qid 0 docid grade), got " +
                                          std::to_string(fields.size()));
        }
        const int grade = parse_positive_int(fields[3], line_no, "grade");
        if (grade < 0) {
            throw ParseError(line_no, "grade must be non-negative, got " + std::to_string(grade));
        }
        const auto* existing = qrels.judged(fields[0]);
        if (existing) {
            auto it = existing->find(fields[2]);
            if (it != existing->end() && it->second != grade) {
                throw ValidationError("conflicting grades for (" + fields[0] + ", " + fields[2] +
                                      "): " + std::to_string(it->second) + " vs " +
                                      std::to_string(grade));
            }
        }
        qrels.set(fields[0], fields[2], grade);
    }
    return qrels;
}

std::string RunsetReport::summary() const {
    std::ostringstream out;
    for (const auto& m : missing_runs) {
        out << "missing run: query " << m.query << " ranker " << m.ranker << '\n';
    }
    for (const auto& g : rank_gaps) {
        out << "rank gap: query " << g.query << " ranker " << g.ranker << " expected rank "
            << g.expected_rank << " got " << g.actual_rank << '\n';
    }
    for (const auto& d : duplicate_docs) {
        out << "duplicate doc: query " << d.query << " ranker " << d.ranker << " doc " << d.doc
            << '\n';
    }
    return out.str();
}

RunsetReport validate_runset(const std::vector<RankedRun>& runs,
                             const std::set<std::string>& expected_rankers) {
    RunsetReport report;

    std::set<QueryId> queries;
    std::map<QueryId, std::set<std::string>> rankers_by_query;
    for (const auto& run : runs) {
        queries.insert(run.query);
        rankers_by_query[run.query].insert(run.ranker);
    }
    for (const auto& query : queries) {
        for (const auto& ranker : expected_rankers) {
            if (!rankers_by_query[query].count(ranker)) {
                report.missing_runs.push_back({query, ranker});
            }
        }
    }

    for (const auto& run : runs) {
        int expected = 1;
        for (const auto& entry : run.entries) {
            if (entry.rank != expected) {
                report.rank_gaps.push_back({run.query, run.ranker, expected, entry.rank});
                expected = entry.rank;
            }
            ++expected;
        }
        std::set<DocId> seen;
        for (const auto& entry : run.entries) {
            if (!seen.insert(entry.doc).second) {
                report.duplicate_docs.push_back({run.query, run.ranker, entry.doc});
            }
        }
    }
    return report;
}

std::vector<Passage> parse_corpus_jsonl(std::istream& in) {
    std::vector<Passage> passages;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const auto record = parse_json_line(line, line_no);
        Passage passage;
        passage.id = require_string(record, "id", line_no);
        require_token(passage.id, "\"id\"", line_no);
        passage.text = require_string(record, "text", line_no);
        if (passage.text.empty()) {
            throw ParseError(line_no, "passage text must be non-empty");
        }
        passage.title = optional_string(record, "title", line_no);
        passages.push_back(std::move(passage));
    }
    return passages;
}

std::vector<LabeledExample> parse_labeled_jsonl(std::istream& in) {
    std::vector<LabeledExample> examples;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const auto record = parse_json_line(line, line_no);
        LabeledExample example;
        example.id = require_string(record, "id", line_no);
        require_token(example.id, "\"id\"", line_no);
        example.claim_text = require_string(record, "claim", line_no);
        if (example.claim_text.empty()) {
            throw ParseError(line_no, "claim text must be non-empty");
        }
        const auto label_text = require_string(record, "label", line_no);
        const auto label = try_parse_label(label_text);
        if (!label) {
            throw ParseError(line_no, "unknown label '" + label_text + "'");
        }
        example.label = *label;
        example.evidence = optional_string(record, "evidence", line_no);
        examples.push_back(std::move(example));
    }
    return examples;
}

std::vector<Claim> parse_claims_jsonl(std::istream& in) {
    std::vector<Claim> claims;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const auto record = parse_json_line(line, line_no);
        Claim claim;
        claim.id = require_string(record, "id", line_no);
        require_token(claim.id, "\"id\"", line_no);
        claim.text = require_string(record, "text", line_no);
        if (claim.text.empty()) {
            throw ParseError(line_no, "claim text must be non-empty");
        }
        if (auto label_text = optional_string(record, "label", line_no)) {
            const auto label = try_parse_label(*label_text);
            if (!label) {
                throw ParseError(line_no, "unknown label '" + *label_text + "'");
            }
            claim.gold_label = *label;
        }
        claims.push_back(std::move(claim));
    }
    return claims;
}

}  // namespace hfrag
