#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "hfrag/core.hpp"
#include "hfrag/fusion.hpp"

namespace hfrag {

/// Resolvers for context entries: labeled exemplars and corpus passages,
/// keyed by id.
struct SourceStores {
    std::unordered_map<DocId, LabeledExample> labeled;
    std::unordered_map<DocId, Passage> unlabeled;
};

/// Duplicate ids within a store are a ValidationError.
SourceStores build_stores(const std::vector<LabeledExample>& labeled,
                          const std::vector<Passage>& unlabeled);

struct PromptBlock {
    Source source = Source::Unlabeled;
    DocId doc;
    std::string rendered_text;
    /// Set for labeled exemplars; what the baseline predictor votes on.
    std::optional<Label> label;
};

struct PromptRecord {
    QueryId query;
    std::string claim_text;
    std::vector<PromptBlock> blocks;  // in merged-context order
    std::string instruction;
};

inline constexpr std::string_view kDefaultInstruction =
    "Classify the claim as SUPPORTS, REFUTES, or NOT_ENOUGH_INFO based on the context. "
    "Answer with exactly one of these labels.";

inline constexpr std::string_view kDefaultTemplate =
    "Task: {instruction}\n\nContext:\n{blocks}\n\nClaim: {claim}\nAnswer:";

/// Resolves every context entry in its source store and renders it:
/// labeled entries as "Claim: ...\n[Evidence: ...\n]Label: ...", and
/// unlabeled entries as "Evidence: ...". Block order equals the context
/// order. An entry whose doc is missing from its store is a
/// ValidationError naming (query, doc, source).
PromptRecord assemble(const Claim& claim, const MergedContext& context,
                      const SourceStores& stores,
                      std::string_view instruction = kDefaultInstruction);

/// Substitutes {claim}, {blocks} and {instruction} in the template;
/// blocks are joined with blank lines.
std::string render_prompt(const PromptRecord& record,
                          std::string_view template_text = kDefaultTemplate);

/// Fraction of entries per source over all contexts, (labeled,
/// unlabeled). Sums to 1 whenever any entry exists; (0, 0) when all
/// contexts are empty. An empty context list is an error.
std::pair<double, double> source_proportions(const std::vector<MergedContext>& contexts);

/// Adapter contract: one {"id", "prompt", "n_labeled", "n_unlabeled"}
/// object per line.
void write_prompts_jsonl(std::ostream& out, const std::vector<PromptRecord>& records,
                         std::string_view template_text = kDefaultTemplate);

}  // namespace hfrag
