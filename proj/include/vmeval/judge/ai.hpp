#pragma once

// Vision-language judge over an OpenAI-style chat completions endpoint.
//
// Request (POST to the configured URL):
//   {"model": M, "temperature": 0,
//    "messages": [{"role": "user", "content": [
//        {"type": "text", "text": <judge prompt>},
//        {"type": "image_url", "image_url": {"url": "data:image/png;base64,..."}},  x5
//    ]}]}
// Reply: {"choices": [{"message": {"content": "Score: 4\nExplanation: ..."}}]}
//
// Configuration comes from VMEVAL_JUDGE_ENDPOINT (full URL),
// VMEVAL_JUDGE_MODEL and VMEVAL_JUDGE_API_KEY (optional bearer token).

#include <httplib.h>

#include <cctype>
#include <cstdlib>
#include <optional>
#include <string>

#include "../error.hpp"
#include "../pipeline/backend.hpp"
#include "../pipeline/base64.hpp"
#include "../raster/png.hpp"
#include "../task.hpp"
#include "frames.hpp"
#include "judgment.hpp"
#include "prompt.hpp"

namespace vmeval::judge {

inline constexpr const char* kJudgeEndpointEnv = "VMEVAL_JUDGE_ENDPOINT";
inline constexpr const char* kJudgeModelEnv = "VMEVAL_JUDGE_MODEL";
inline constexpr const char* kJudgeKeyEnv = "VMEVAL_JUDGE_API_KEY";

/// Reply without a usable score. Recorded, never turned into a guess.
class JudgeParseError : public ParseError {
public:
    using ParseError::ParseError;
};

/// Transport or server failure; transient ones are worth one retry.
class JudgeEndpointError : public IoError {
public:
    JudgeEndpointError(const std::string& what, bool transient) : IoError(what), transient_(transient) {}
    bool transient() const noexcept { return transient_; }

private:
    bool transient_;
};

struct JudgeEndpoint {
    std::string url;
    std::string model = "gpt-4o";
    std::string api_key;

    std::string rater() const { return "ai:" + model; }
};

/// Endpoint settings from the environment; a missing URL is a configuration
/// error.
inline JudgeEndpoint judge_endpoint_from_env() {
    const char* url = std::getenv(kJudgeEndpointEnv);
    if (!url || !*url) throw ArgumentError(std::string(kJudgeEndpointEnv) + " is not set; the ai judge needs an endpoint");
    JudgeEndpoint e;
    e.url = url;
    if (const char* m = std::getenv(kJudgeModelEnv); m && *m) e.model = m;
    if (const char* k = std::getenv(kJudgeKeyEnv); k && *k) e.api_key = k;
    return e;
}

struct ParsedReply {
    int score = 0;
    std::string explanation;
};

namespace detail {

inline std::string lower(std::string s) {
    for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    return s.substr(b, s.find_last_not_of(" \t\r\n") - b + 1);
}

} // namespace detail

/// Grammar: the first integer after the word "score" (any case), with only
/// punctuation or spaces between them. It must be 1..5; anything else is a
/// parse error.
inline ParsedReply parse_judge_reply(const std::string& reply) {
    const std::string low = detail::lower(reply);
    std::size_t at = low.find("score");
    while (at != std::string::npos) {
        std::size_t j = at + 5;
        while (j < low.size() && !std::isalnum(static_cast<unsigned char>(low[j]))) ++j;
        if (j < low.size() && std::isdigit(static_cast<unsigned char>(low[j]))) {
            std::size_t end = j;
            while (end < low.size() && std::isdigit(static_cast<unsigned char>(low[end]))) ++end;
            if (end + 1 < low.size() && low[end] == '.' && std::isdigit(static_cast<unsigned char>(low[end + 1])))
                throw JudgeParseError("score '" + reply.substr(j, end + 2 - j) + "' is not an integer");
            const std::string digits = low.substr(j, end - j);
            if (digits.size() > 1 || digits[0] < '1' || digits[0] > '5')
                throw JudgeParseError("score " + digits + " is outside 1..5");
            ParsedReply out;
            out.score = digits[0] - '0';
            const auto ex = low.find("explanation", end);
            if (ex != std::string::npos) {
                std::size_t k = ex + 11;
                while (k < reply.size() && (reply[k] == ':' || reply[k] == ' ' || reply[k] == '*')) ++k;
                out.explanation = detail::trim(reply.substr(k));
            } else {
                out.explanation = detail::trim(reply);
            }
            return out;
        }
        at = low.find("score", at + 5);
    }
    throw JudgeParseError("no score in judge reply: '" + reply.substr(0, 120) + "'");
}

inline Json judge_request(const JudgeEndpoint& ep, const TaskUnit& task, const KeyFrames& frames) {
    Json content = Json::array();
    content.push_back({{"type", "text"}, {"text", build_judge_prompt(task)}});
    for (const raster::Image* img : {&task.first_frame, &task.final_frame, &frames.first, &frames.mid, &frames.last}) {
        const std::string data = "data:image/png;base64," + pipeline::base64_encode(raster::encode_png(*img));
        content.push_back({{"type", "image_url"}, {"image_url", {{"url", data}}}});
    }
    return {{"model", ep.model},
            {"temperature", 0},
            {"messages", Json::array({{{"role", "user"}, {"content", content}}})}};
}

/// The assistant text of a chat completion reply.
inline std::string reply_text(const Json& body) {
    try {
        const Json& content = body.at("choices").at(0).at("message").at("content");
        if (content.is_string()) return content.get<std::string>();
        std::string text;
        for (const auto& part : content)
            if (part.value("type", "") == "text") text += part.value("text", "");
        return text;
    } catch (const Json::exception&) {
        throw JudgeParseError("judge reply has no choices[0].message.content");
    }
}

inline std::string post_judge_request(const JudgeEndpoint& ep, const Json& request) {
    pipeline::Url u;
    try {
        u = pipeline::parse_url(ep.url);
    } catch (const ArgumentError& e) {
        throw ArgumentError(std::string("judge endpoint: ") + e.what());
    }
    httplib::Client cli(u.host_port);
    cli.set_connection_timeout(10, 0);
    cli.set_read_timeout(120, 0);
    httplib::Headers h;
    if (!ep.api_key.empty()) h.emplace("Authorization", "Bearer " + ep.api_key);
    auto res = cli.Post(u.path.empty() ? "/" : u.path, h, request.dump(), "application/json");
    if (!res) throw JudgeEndpointError("judge endpoint: " + httplib::to_string(res.error()), true);
    if (res->status >= 500 || res->status == 429)
        throw JudgeEndpointError("judge endpoint: HTTP " + std::to_string(res->status), true);
    if (res->status >= 300)
        throw JudgeEndpointError("judge endpoint: HTTP " + std::to_string(res->status) + " " + res->body.substr(0, 200),
                                 false);
    return res->body;
}

inline Judgment judge_ai(const TaskUnit& task, const std::string& model, const KeyFrames& frames,
                         const JudgeEndpoint& ep) {
    const std::string body = post_judge_request(ep, judge_request(ep, task, frames));
    Json reply;
    try {
        reply = Json::parse(body);
    } catch (const Json::parse_error&) {
        throw JudgeParseError("judge reply is not JSON");
    }
    const ParsedReply p = parse_judge_reply(reply_text(reply));
    return make_judgment(task.id, model, ep.rater(), p.score, p.explanation);
}

} // namespace vmeval::judge
