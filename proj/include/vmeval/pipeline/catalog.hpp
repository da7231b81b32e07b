#pragma once

// Declarative model catalog. A catalog file is a JSON object:
//
//   {"models": [{"name": "sora-like", "family": "openai",
//                "endpoint": "https://host/v1/{model}" | "mock://oracle",
//                "auth_env": "SORA_API_KEY",
//                "landscape": [1280, 720], "portrait": [720, 1280],
//                "encoding": "base64-inline" | "multipart" | "local",
//                "poll_interval_s": 2.0, "max_wait_s": 600,
//                "supports_temperature": true,
//                "options": {...}}]}
//
// `options` is passed to the backend untouched as `model_options`.

#include <algorithm>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "../error.hpp"
#include "../io.hpp"
#include "../raster/png.hpp"
#include "../task.hpp"
#include "base64.hpp"
#include "letterbox.hpp"

namespace vmeval::pipeline {

enum class Encoding { base64_inline, multipart, local };
enum class Orientation { landscape, portrait };

inline std::string_view to_string(Encoding e) {
    switch (e) {
    case Encoding::base64_inline: return "base64-inline";
    case Encoding::multipart: return "multipart";
    case Encoding::local: return "local";
    }
    return "?";
}

inline Encoding parse_encoding(std::string_view s) {
    for (Encoding e : {Encoding::base64_inline, Encoding::multipart, Encoding::local})
        if (to_string(e) == s) return e;
    throw ArgumentError("unknown encoding '" + std::string(s) + "'");
}

inline Orientation parse_orientation(std::string_view s) {
    if (s == "landscape") return Orientation::landscape;
    if (s == "portrait") return Orientation::portrait;
    throw ArgumentError("unknown orientation '" + std::string(s) + "'");
}

struct ModelSpec {
    std::string name;
    std::string family;
    std::string endpoint;
    std::string auth_env; ///< empty when the backend needs no credential
    Size landscape{1280, 720};
    Size portrait{720, 1280};
    Encoding encoding = Encoding::base64_inline;
    double poll_interval_s = 2.0;
    double max_wait_s = 600.0;
    bool supports_temperature = true;
    Json options = Json::object();

    void validate() const {
        if (name.empty()) throw ArgumentError("model entry without a name");
        if (name.find('/') != std::string::npos || name == "." || name == "..")
            throw ArgumentError("model name '" + name + "' cannot be used as a directory name");
        if (endpoint.empty()) throw ArgumentError("model '" + name + "' has no endpoint");
        for (Size s : {landscape, portrait})
            if (s.width <= 0 || s.height <= 0) throw ArgumentError("model '" + name + "' has a non-positive resolution");
        if (!(poll_interval_s > 0) || !(poll_interval_s < max_wait_s))
            throw ArgumentError("model '" + name + "' needs 0 < poll_interval_s < max_wait_s");
    }

    /// Endpoint with `{model}` replaced by the model name.
    std::string resolved_endpoint() const {
        std::string out = endpoint;
        const std::string key = "{model}";
        for (auto at = out.find(key); at != std::string::npos; at = out.find(key, at + name.size()))
            out.replace(at, key.size(), name);
        return out;
    }
};

inline Size resolve_resolution(const ModelSpec& m, Orientation o) {
    return o == Orientation::landscape ? m.landscape : m.portrait;
}

inline Size resolve_resolution(const ModelSpec& m, std::string_view orientation) {
    return resolve_resolution(m, parse_orientation(orientation));
}

/// Square and wide frames are treated as landscape.
inline Orientation orientation_of(const raster::Image& img) {
    return img.width() >= img.height() ? Orientation::landscape : Orientation::portrait;
}

namespace detail {

inline Size size_from_json(const Json& j, const std::string& what) {
    if (!j.is_array() || j.size() != 2 || !j[0].is_number_integer() || !j[1].is_number_integer())
        throw ArgumentError(what + " must be a [width, height] pair");
    return {j[0].get<int>(), j[1].get<int>()};
}

} // namespace detail

inline ModelSpec model_from_json(const Json& j) {
    if (!j.is_object()) throw ArgumentError("catalog entry must be an object");
    ModelSpec m;
    try {
        m.name = j.at("name").get<std::string>();
        m.family = j.value("family", std::string{});
        m.endpoint = j.at("endpoint").get<std::string>();
        m.auth_env = j.value("auth_env", std::string{});
        if (j.contains("landscape")) m.landscape = detail::size_from_json(j["landscape"], m.name + ".landscape");
        if (j.contains("portrait")) m.portrait = detail::size_from_json(j["portrait"], m.name + ".portrait");
        m.encoding = parse_encoding(j.value("encoding", std::string("base64-inline")));
        m.poll_interval_s = j.value("poll_interval_s", m.poll_interval_s);
        m.max_wait_s = j.value("max_wait_s", m.max_wait_s);
        m.supports_temperature = j.value("supports_temperature", true);
        m.options = j.value("options", Json::object());
    } catch (const Json::exception& e) {
        throw ArgumentError(std::string("bad catalog entry: ") + e.what());
    }
    m.validate();
    return m;
}

inline Json model_to_json(const ModelSpec& m) {
    return {{"name", m.name},
            {"family", m.family},
            {"endpoint", m.endpoint},
            {"auth_env", m.auth_env},
            {"landscape", {m.landscape.width, m.landscape.height}},
            {"portrait", {m.portrait.width, m.portrait.height}},
            {"encoding", to_string(m.encoding)},
            {"poll_interval_s", m.poll_interval_s},
            {"max_wait_s", m.max_wait_s},
            {"supports_temperature", m.supports_temperature},
            {"options", m.options}};
}

inline std::vector<ModelSpec> parse_catalog(const Json& j) {
    if (!j.is_object() || !j.contains("models") || !j["models"].is_array())
        throw ArgumentError("catalog must be an object with a 'models' array");
    std::vector<ModelSpec> out;
    std::set<std::string> names;
    for (const auto& entry : j["models"]) {
        out.push_back(model_from_json(entry));
        if (!names.insert(out.back().name).second) throw ArgumentError("duplicate model name '" + out.back().name + "'");
    }
    if (out.empty()) throw ArgumentError("catalog lists no models");
    return out;
}

inline std::vector<ModelSpec> load_catalog(const fs::path& path) {
    const std::string text = io::read_text(path);
    Json j;
    try {
        j = Json::parse(text);
    } catch (const Json::parse_error& e) {
        throw ParseError(path.string() + ": invalid JSON at byte " + std::to_string(e.byte));
    }
    return parse_catalog(j);
}

struct InferenceParams {
    double duration_s = 8.0;
    double temperature = 0.7;
    std::int64_t seed = -1;

    void validate() const {
        if (!(duration_s > 0)) throw ArgumentError("duration_s must be positive");
    }
};

inline Json params_json(const InferenceParams& p, const ModelSpec& m) {
    Json j = {{"duration_s", p.duration_s}, {"seed", p.seed}};
    if (m.supports_temperature) j["temperature"] = p.temperature;
    return j;
}

inline constexpr std::array<std::string_view, 3> kAllowedMimes{"image/jpeg", "image/png", "image/webp"};

inline void validate_mime(std::string_view mime) {
    if (std::find(kAllowedMimes.begin(), kAllowedMimes.end(), mime) == kAllowedMimes.end())
        throw ArgumentError("image MIME type '" + std::string(mime) + "' is not allowed (jpeg, png or webp)");
}

struct ImagePayload {
    std::string mime;
    std::vector<std::uint8_t> bytes; ///< raw encoded image
    std::string base64;              ///< filled for inline encoding
};

/// Frames are always sent as PNG; the MIME check guards what leaves the
/// process.
inline ImagePayload encode_image_payload(const raster::Image& img, Encoding encoding, std::string mime = "image/png") {
    validate_mime(mime);
    if (mime != "image/png") throw ArgumentError("only PNG frame encoding is implemented");
    if (encoding == Encoding::local) throw ArgumentError("local model execution is not implemented");
    ImagePayload p{mime, raster::encode_png(img), {}};
    if (encoding == Encoding::base64_inline) p.base64 = base64_encode(p.bytes);
    return p;
}

} // namespace vmeval::pipeline
