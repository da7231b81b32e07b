#pragma once

// One score for one (model, task) pair. The same record is written by the
// automated judges and exported by the annotation service.
//
//   {"task_id": "...", "model_name": "...", "rater": "oracle" | "ai:<name>" | "human:<id>",
//    "score": 1..5, "explanation": "...", "success": bool}

#include <algorithm>
#include <string>
#include <tuple>
#include <vector>

#include "../error.hpp"
#include "../io.hpp"
#include "../task.hpp"

namespace vmeval::judge {

inline constexpr int kMinScore = 1;
inline constexpr int kMaxScore = 5;
inline constexpr int kSuccessScore = 4;

/// The one success rule: scores 4 and 5 count, 1 to 3 do not.
inline constexpr bool is_success(int score) { return score >= kSuccessScore; }

inline bool valid_score(int score) { return score >= kMinScore && score <= kMaxScore; }

struct Judgment {
    std::string task_id;
    std::string model;
    std::string rater;
    int score = kMinScore;
    std::string explanation;

    bool success() const { return is_success(score); }
    friend bool operator==(const Judgment&, const Judgment&) = default;
};

inline Judgment make_judgment(std::string task_id, std::string model, std::string rater, int score,
                              std::string explanation) {
    if (!valid_score(score)) throw ArgumentError("score " + std::to_string(score) + " is outside 1..5");
    return {std::move(task_id), std::move(model), std::move(rater), score, std::move(explanation)};
}

inline Json judgment_to_json(const Judgment& j) {
    return {{"task_id", j.task_id},   {"model_name", j.model},         {"rater", j.rater},
            {"score", j.score},       {"explanation", j.explanation}, {"success", j.success()}};
}

inline Judgment judgment_from_json(const Json& j) {
    Judgment out;
    try {
        out.task_id = j.at("task_id").get<std::string>();
        out.model = j.at("model_name").get<std::string>();
        out.rater = j.at("rater").get<std::string>();
        out.score = j.at("score").get<int>();
        out.explanation = j.value("explanation", std::string{});
    } catch (const Json::exception& e) {
        throw ParseError(std::string("bad judgment record: ") + e.what());
    }
    if (!valid_score(out.score)) throw ParseError("judgment score " + std::to_string(out.score) + " is outside 1..5");
    if (j.contains("success") && j["success"] != out.success())
        throw ParseError("judgment for " + out.task_id + ": success flag disagrees with score");
    return out;
}

inline bool judgment_less(const Judgment& a, const Judgment& b) {
    return std::tie(a.model, a.task_id, a.rater) < std::tie(b.model, b.task_id, b.rater);
}

inline std::string judgments_to_text(std::vector<Judgment> js) {
    std::sort(js.begin(), js.end(), judgment_less);
    Json arr = Json::array();
    for (const auto& j : js) arr.push_back(judgment_to_json(j));
    return arr.dump(2) + "\n";
}

/// Reads a JSON array of judgments, or JSON lines (one record per line;
/// blank lines skipped).
inline std::vector<Judgment> load_judgments(const fs::path& path) {
    const std::string text = io::read_text(path);
    std::vector<Judgment> out;
    const auto first = text.find_first_not_of(" \t\r\n");
    try {
        if (first != std::string::npos && text[first] == '[') {
            for (const auto& j : Json::parse(text)) out.push_back(judgment_from_json(j));
            return out;
        }
        std::size_t at = 0, line_no = 0;
        while (at < text.size()) {
            auto nl = text.find('\n', at);
            if (nl == std::string::npos) nl = text.size();
            ++line_no;
            const std::string line = text.substr(at, nl - at);
            at = nl + 1;
            if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
            try {
                out.push_back(judgment_from_json(Json::parse(line)));
            } catch (const ParseError& e) {
                throw ParseError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
            } catch (const Json::parse_error&) {
                throw ParseError(path.string() + ":" + std::to_string(line_no) + ": invalid JSON");
            }
        }
    } catch (const Json::parse_error& e) {
        throw ParseError(path.string() + ": invalid JSON at byte " + std::to_string(e.byte));
    }
    return out;
}

} // namespace vmeval::judge
