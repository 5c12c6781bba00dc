#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "hfrag/context.hpp"
#include "hfrag/core.hpp"

namespace hfrag {

struct Prediction {
    QueryId query;
    Label label = Label::NotEnoughInfo;
    std::optional<std::string> raw_output;
};

/// Deterministic stand-in for an LLM: votes the majority label among the
/// labeled blocks; a tie or an exemplar-free context yields
/// NOT_ENOUGH_INFO.
Prediction baseline_predict(const PromptRecord& record);

/// Reads prediction JSONL {"id", "label", "raw"?}. Labels go through
/// the alias map; anything outside the enumeration is a ParseError with
/// the line number.
std::vector<Prediction> parse_predictions(std::istream& in);

void write_predictions_jsonl(std::ostream& out, const std::vector<Prediction>& predictions);

}  // namespace hfrag
