#include "hfrag/context.hpp"

#include <ostream>

#include <json.hpp>

namespace hfrag {

SourceStores build_stores(const std::vector<LabeledExample>& labeled,
                          const std::vector<Passage>& unlabeled) {
    SourceStores stores;
    for (const auto& example : labeled) {
        if (!stores.labeled.emplace(example.id, example).second) {
            throw ValidationError("duplicate id '" + example.id + "' in labeled store");
        }
    }
    for (const auto& passage : unlabeled) {
        if (!stores.unlabeled.emplace(passage.id, passage).second) {
            throw ValidationError("duplicate id '" + passage.id + "' in corpus");
        }
    }
    return stores;
}

PromptRecord assemble(const Claim& claim, const MergedContext& context,
                      const SourceStores& stores, std::string_view instruction) {
    PromptRecord record;
    record.query = claim.id;
    record.claim_text = claim.text;
    record.instruction = std::string(instruction);
    record.blocks.reserve(context.entries.size());

    for (const auto& entry : context.entries) {
        PromptBlock block;
        block.source = entry.source;
        block.doc = entry.doc;
        if (entry.source == Source::Labeled) {
            auto it = stores.labeled.find(entry.doc);
            if (it == stores.labeled.end()) {
                throw ValidationError("query '" + context.query + "': doc '" + entry.doc +
                                      "' not found in labeled store");
            }
            const auto& example = it->second;
            std::string text = "Claim: " + example.claim_text + "\n";
            if (example.evidence) {
                text += "Evidence: " + *example.evidence + "\n";
            }
            text += "Label: ";
            text += to_string(example.label);
            block.rendered_text = std::move(text);
            block.label = example.label;
        } else {
            auto it = stores.unlabeled.find(entry.doc);
            if (it == stores.unlabeled.end()) {
                throw ValidationError("query '" + context.query + "': doc '" + entry.doc +
                                      "' not found in unlabeled corpus");
            }
            block.rendered_text = "Evidence: " + it->second.text;
        }
        record.blocks.push_back(std::move(block));
    }
    return record;
}

namespace {

void replace_all(std::string& text, std::string_view token, const std::string& value) {
    std::size_t pos = 0;
    while ((pos = text.find(token, pos)) != std::string::npos) {
        text.replace(pos, token.size(), value);
        pos += value.size();
    }
}

}  // namespace

std::string render_prompt(const PromptRecord& record, std::string_view template_text) {
    std::string blocks;
    for (std::size_t i = 0; i < record.blocks.size(); ++i) {
        if (i > 0) blocks += "\n\n";
        blocks += record.blocks[i].rendered_text;
    }
    std::string prompt(template_text);
    replace_all(prompt, "{instruction}", record.instruction);
    replace_all(prompt, "{blocks}", blocks);
    replace_all(prompt, "{claim}", record.claim_text);
    return prompt;
}

std::pair<double, double> source_proportions(const std::vector<MergedContext>& contexts) {
    if (contexts.empty()) {
        throw ValidationError("source_proportions needs at least one context");
    }
    std::size_t labeled = 0;
    std::size_t unlabeled = 0;
    for (const auto& context : contexts) {
        for (const auto& entry : context.entries) {
            (entry.source == Source::Labeled ? labeled : unlabeled) += 1;
        }
    }
    const auto total = labeled + unlabeled;
    if (total == 0) return {0.0, 0.0};
    return {static_cast<double>(labeled) / static_cast<double>(total),
            static_cast<double>(unlabeled) / static_cast<double>(total)};
}

void write_prompts_jsonl(std::ostream& out, const std::vector<PromptRecord>& records,
                         std::string_view template_text) {
    for (const auto& record : records) {
        std::size_t labeled = 0;
        for (const auto& block : record.blocks) {
            if (block.source == Source::Labeled) ++labeled;
        }
        nlohmann::json row;
        row["id"] = record.query;
        row["prompt"] = render_prompt(record, template_text);
        row["n_labeled"] = labeled;
        row["n_unlabeled"] = record.blocks.size() - labeled;
        out << row.dump() << '\n';
    }
}

}  // namespace hfrag
