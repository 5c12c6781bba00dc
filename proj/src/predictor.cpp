#include "hfrag/predictor.hpp"

#include <array>
#include <istream>
#include <ostream>

#include <json.hpp>

namespace hfrag {

Prediction baseline_predict(const PromptRecord& record) {
    std::array<int, 3> counts{0, 0, 0};
    for (const auto& block : record.blocks) {
        if (block.label) counts[static_cast<std::size_t>(*block.label)] += 1;
    }
    int best = 0;
    for (int c : counts) best = std::max(best, c);

    Prediction prediction;
    prediction.query = record.query;
    if (best == 0) {
        prediction.label = Label::NotEnoughInfo;  // no exemplars to vote
        return prediction;
    }
    int winners = 0;
    Label winner = Label::NotEnoughInfo;
    for (std::size_t i = 0; i < counts.size(); ++i) {
        if (counts[i] == best) {
            ++winners;
            winner = static_cast<Label>(i);
        }
    }
    prediction.label = winners == 1 ? winner : Label::NotEnoughInfo;
    return prediction;
}

std::vector<Prediction> parse_predictions(std::istream& in) {
    std::vector<Prediction> predictions;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;

        nlohmann::json record = nlohmann::json::parse(line, nullptr, false);
        if (record.is_discarded() || !record.is_object()) {
            throw ParseError(line_no, "not a JSON object");
        }
        Prediction prediction;
        auto id = record.find("id");
        if (id == record.end() || !id->is_string() || id->get<std::string>().empty()) {
            throw ParseError(line_no, "missing or empty \"id\"");
        }
        prediction.query = id->get<std::string>();

        auto label = record.find("label");
        if (label == record.end() || !label->is_string()) {
            throw ParseError(line_no, "missing or non-string \"label\"");
        }
        const auto parsed = try_parse_label(label->get<std::string>());
        if (!parsed) {
            throw ParseError(line_no, "unknown label '" + label->get<std::string>() + "'");
        }
        prediction.label = *parsed;

        auto raw = record.find("raw");
        if (raw != record.end() && raw->is_string()) {
            prediction.raw_output = raw->get<std::string>();
        }
        predictions.push_back(std::move(prediction));
    }
    return predictions;
}

void write_predictions_jsonl(std::ostream& out, const std::vector<Prediction>& predictions) {
    for (const auto& prediction : predictions) {
        nlohmann::json row;
        row["id"] = prediction.query;
        row["label"] = to_string(prediction.label);
        if (prediction.raw_output) row["raw"] = *prediction.raw_output;
        out << row.dump() << '\n';
    }
}

}  // namespace hfrag
