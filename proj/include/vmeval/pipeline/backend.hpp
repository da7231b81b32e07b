#pragma once

// Generic video-generation job protocol.
//
//   POST {endpoint}/v1/jobs
//     application/json: {"model", "task_id", "prompt", "params", "model_options",
//                        "image": {"mime", "data": <base64>}}
//     multipart/form-data: part "request" (the JSON above without "image")
//                          and part "image" (the raw PNG)
//     -> 2xx {"job_id": "..."}
//   GET  {endpoint}/v1/jobs/{job_id}
//     -> {"status": "queued"|"running"|"succeeded"|"failed",
//         "video_url": absolute URL, or a path on the same host,
//         "error": text or null}
//   GET  {video_url} -> video bytes
//
// Requests carry "Authorization: Bearer $<auth_env>" when the model names a
// credential variable. Connection failures and 5xx replies are transient
// and retried once; other failures are final.

#include <httplib.h>

#include <chrono>
#include <cstdlib>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <thread>

#include "../error.hpp"
#include "../io.hpp"
#include "../task.hpp"
#include "catalog.hpp"
#include "mock.hpp"

namespace vmeval::pipeline {

class BackendError : public IoError {
public:
    BackendError(const std::string& what, bool transient) : IoError(what), transient_(transient) {}
    bool transient() const noexcept { return transient_; }

private:
    bool transient_;
};

struct JobStatus {
    std::string status;
    std::string video_url;
    std::string error;
};

class Backend {
public:
    virtual ~Backend() = default;
    virtual std::string submit(const Json& request, const ImagePayload& image) = 0;
    virtual JobStatus poll(const std::string& job_id) = 0;
    virtual std::vector<std::uint8_t> download(const std::string& url) = 0;
};

struct Url {
    std::string scheme;
    std::string host_port; ///< scheme://host[:port]
    std::string path;      ///< no trailing slash
};

inline Url parse_url(const std::string& url) {
    const auto sep = url.find("://");
    if (sep == std::string::npos) throw ArgumentError("not an absolute URL: '" + url + "'");
    Url u;
    u.scheme = url.substr(0, sep);
    const auto slash = url.find('/', sep + 3);
    u.host_port = url.substr(0, slash);
    u.path = slash == std::string::npos ? "" : url.substr(slash);
    while (!u.path.empty() && u.path.back() == '/') u.path.pop_back();
    if (u.host_port.size() <= sep + 3) throw ArgumentError("URL has no host: '" + url + "'");
    return u;
}

inline JobStatus parse_job_status(const Json& j) {
    if (!j.is_object() || !j.contains("status") || !j["status"].is_string())
        throw BackendError("job status reply has no status field", false);
    JobStatus s;
    s.status = j["status"].get<std::string>();
    if (j.contains("video_url") && j["video_url"].is_string()) s.video_url = j["video_url"].get<std::string>();
    if (j.contains("error") && j["error"].is_string()) s.error = j["error"].get<std::string>();
    return s;
}

class HttpBackend final : public Backend {
public:
    HttpBackend(std::string endpoint, std::string token, Encoding encoding)
        : base_(parse_url(endpoint)), token_(std::move(token)), encoding_(encoding) {
        if (base_.scheme != "http" && base_.scheme != "https")
            throw ArgumentError("unsupported endpoint scheme '" + base_.scheme + "'");
#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
        if (base_.scheme == "https") throw ArgumentError("this build has no TLS support for https endpoints");
#endif
    }

    std::string submit(const Json& request, const ImagePayload& image) override {
        auto cli = client(base_.host_port);
        httplib::Result res;
        if (encoding_ == Encoding::multipart) {
            httplib::MultipartFormDataItems items{
                {"request", request.dump(), "", "application/json"},
                {"image", std::string(image.bytes.begin(), image.bytes.end()), "first_frame.png", image.mime}};
            res = cli->Post(base_.path + "/v1/jobs", headers(), items);
        } else {
            Json body = request;
            body["image"] = {{"mime", image.mime}, {"data", image.base64}};
            res = cli->Post(base_.path + "/v1/jobs", headers(), body.dump(), "application/json");
        }
        const Json reply = json_reply(res, "submit");
        if (!reply.contains("job_id") || !reply["job_id"].is_string())
            throw BackendError("submit reply has no job_id", false);
        return reply["job_id"].get<std::string>();
    }

    JobStatus poll(const std::string& job_id) override {
        auto cli = client(base_.host_port);
        return parse_job_status(json_reply(cli->Get(base_.path + "/v1/jobs/" + job_id, headers()), "poll"));
    }

    std::vector<std::uint8_t> download(const std::string& url) override {
        std::string host = base_.host_port, path = url;
        if (url.find("://") != std::string::npos) {
            const Url u = parse_url(url);
            host = u.host_port;
            path = u.path.empty() ? "/" : u.path;
            const auto q = url.find('?', url.find("://") + 3);
            if (q != std::string::npos) path += url.substr(q);
        } else if (url.empty() || url.front() != '/') {
            path = base_.path + "/" + url;
        }
        auto cli = client(host);
        cli->set_read_timeout(120, 0);
        auto res = cli->Get(path, headers());
        check(res, "download");
        return {res->body.begin(), res->body.end()};
    }

private:
    std::unique_ptr<httplib::Client> client(const std::string& host) const {
        auto cli = std::make_unique<httplib::Client>(host);
        cli->set_connection_timeout(5, 0);
        cli->set_read_timeout(30, 0);
        cli->set_follow_location(true);
        return cli;
    }

    httplib::Headers headers() const {
        httplib::Headers h;
        if (!token_.empty()) h.emplace("Authorization", "Bearer " + token_);
        return h;
    }

    static void check(const httplib::Result& res, const char* what) {
        if (!res) throw BackendError(std::string(what) + ": " + httplib::to_string(res.error()), true);
        if (res->status >= 500) throw BackendError(std::string(what) + ": HTTP " + std::to_string(res->status), true);
        if (res->status >= 300)
            throw BackendError(std::string(what) + ": HTTP " + std::to_string(res->status) + " " + res->body.substr(0, 200),
                               false);
    }

    static Json json_reply(const httplib::Result& res, const char* what) {
        check(res, what);
        try {
            return Json::parse(res->body);
        } catch (const Json::parse_error&) {
            throw BackendError(std::string(what) + ": reply is not JSON", false);
        }
    }

    Url base_;
    std::string token_;
    Encoding encoding_;
};

/// `mock://<mode>` endpoints run the mock service inside this process.
class InProcessBackend final : public Backend {
public:
    InProcessBackend(std::shared_ptr<MockService> service, std::string mode)
        : service_(std::move(service)), mode_(std::move(mode)) {
        parse_mock_mode(mode_);
    }

    std::string submit(const Json& request, const ImagePayload& image) override {
        try {
            return service_->submit(mode_, request, image.bytes);
        } catch (const MockTransientError& e) {
            throw BackendError(std::string("submit: ") + e.what(), true);
        } catch (const std::exception& e) {
            throw BackendError(std::string("submit: ") + e.what(), false);
        }
    }

    JobStatus poll(const std::string& job_id) override {
        try {
            return parse_job_status(service_->status(job_id, "mock-video:" + job_id));
        } catch (const BackendError&) {
            throw;
        } catch (const std::exception& e) {
            throw BackendError(std::string("poll: ") + e.what(), false);
        }
    }

    std::vector<std::uint8_t> download(const std::string& url) override {
        const std::string prefix = "mock-video:";
        if (url.rfind(prefix, 0) != 0) throw BackendError("download: unexpected URL '" + url + "'", false);
        auto v = service_->video(url.substr(prefix.size()));
        if (!v) throw BackendError("download: no video for '" + url + "'", false);
        return *v;
    }

private:
    std::shared_ptr<MockService> service_;
    std::string mode_;
};

/// Backend for a catalog entry. Missing credentials surface as a final
/// BackendError so the affected jobs fail with a readable reason.
inline std::unique_ptr<Backend> make_backend(const ModelSpec& m, const std::shared_ptr<MockService>& mock) {
    const std::string endpoint = m.resolved_endpoint();
    if (endpoint.rfind("mock://", 0) == 0) {
        if (!mock) throw ArgumentError("mock endpoint without a mock service");
        return std::make_unique<InProcessBackend>(mock, endpoint.substr(7));
    }
    std::string token;
    if (!m.auth_env.empty()) {
        const char* v = std::getenv(m.auth_env.c_str());
        if (!v || !*v) throw BackendError("credential variable " + m.auth_env + " is not set", false);
        token = v;
    }
    return std::make_unique<HttpBackend>(endpoint, token, m.encoding);
}

enum class GenerationStatus { succeeded, failed, timeout };

inline std::string_view to_string(GenerationStatus s) {
    switch (s) {
    case GenerationStatus::succeeded: return "succeeded";
    case GenerationStatus::failed: return "failed";
    case GenerationStatus::timeout: return "timeout";
    }
    return "?";
}

inline GenerationStatus parse_generation_status(std::string_view s) {
    for (auto g : {GenerationStatus::succeeded, GenerationStatus::failed, GenerationStatus::timeout})
        if (to_string(g) == s) return g;
    throw ParseError("unknown generation status '" + std::string(s) + "'");
}

struct GenerationResult {
    std::string task_id;
    std::string model;
    GenerationStatus status = GenerationStatus::failed;
    std::optional<std::string> video; ///< file name inside the result directory
    double latency_s = 0;
    std::optional<std::string> error;
    int polls = 0;
    int attempts = 0;
    std::int64_t started_at_ms = 0;
    std::int64_t finished_at_ms = 0;
};

inline Json result_to_json(const GenerationResult& r) {
    return {{"task_id", r.task_id},
            {"model", r.model},
            {"status", to_string(r.status)},
            {"video", r.video ? Json(*r.video) : Json(nullptr)},
            {"latency_s", r.latency_s},
            {"error", r.error ? Json(*r.error) : Json(nullptr)},
            {"polls", r.polls},
            {"attempts", r.attempts},
            {"started_at_ms", r.started_at_ms},
            {"finished_at_ms", r.finished_at_ms}};
}

inline GenerationResult result_from_json(const Json& j) {
    try {
        GenerationResult r;
        r.task_id = j.at("task_id").get<std::string>();
        r.model = j.at("model").get<std::string>();
        r.status = parse_generation_status(j.at("status").get<std::string>());
        if (j.contains("video") && j["video"].is_string()) r.video = j["video"].get<std::string>();
        r.latency_s = j.value("latency_s", 0.0);
        if (j.contains("error") && j["error"].is_string()) r.error = j["error"].get<std::string>();
        r.polls = j.value("polls", 0);
        r.attempts = j.value("attempts", 0);
        r.started_at_ms = j.value("started_at_ms", std::int64_t{0});
        r.finished_at_ms = j.value("finished_at_ms", std::int64_t{0});
        return r;
    } catch (const Json::exception& e) {
        throw ParseError(std::string("bad generation result: ") + e.what());
    }
}

inline std::int64_t wall_ms() {
    return std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::system_clock::now().time_since_epoch())
        .count();
}

inline std::string video_extension(std::span<const std::uint8_t> bytes) {
    if (looks_like_avi(bytes)) return ".avi";
    if (bytes.size() >= 12 && std::memcmp(bytes.data() + 4, "ftyp", 4) == 0) return ".mp4";
    if (bytes.size() >= 4 && bytes[0] == 0x1a && bytes[1] == 0x45 && bytes[2] == 0xdf && bytes[3] == 0xa3) return ".webm";
    return ".bin";
}

inline Json build_request(const ModelSpec& m, const TaskUnit& task, const InferenceParams& p) {
    return {{"model", m.name},
            {"task_id", task.id},
            {"prompt", task.prompt},
            {"params", params_json(p, m)},
            {"model_options", m.options}};
}

/// Submits one task, polls until a terminal state or max_wait, and saves
/// the video as `video.<ext>` in out_dir.
inline GenerationResult submit_and_poll(const ModelSpec& model, const TaskUnit& task, const InferenceParams& params,
                                        Backend& backend, const fs::path& out_dir) {
    using clock = std::chrono::steady_clock;
    GenerationResult r;
    r.task_id = task.id;
    r.model = model.name;
    r.started_at_ms = wall_ms();
    const auto t0 = clock::now();
    auto elapsed = [&] { return std::chrono::duration<double>(clock::now() - t0).count(); };
    auto with_retry = [&](auto&& fn) {
        ++r.attempts;
        try {
            return fn();
        } catch (const BackendError& e) {
            if (!e.transient()) throw;
        }
        ++r.attempts;
        return fn();
    };

    try {
        params.validate();
        const raster::Image first = letterbox(task.first_frame, resolve_resolution(model, orientation_of(task.first_frame)));
        const ImagePayload payload = encode_image_payload(first, model.encoding);
        const Json request = build_request(model, task, params);
        const std::string job = with_retry([&] { return backend.submit(request, payload); });

        JobStatus st;
        for (;;) {
            const double remaining = model.max_wait_s - elapsed();
            if (remaining <= 0) {
                r.status = GenerationStatus::timeout;
                r.error = "no terminal status after " + std::to_string(model.max_wait_s) + " s";
                break;
            }
            std::this_thread::sleep_for(std::chrono::duration<double>(std::min(model.poll_interval_s, remaining)));
            st = with_retry([&] { return backend.poll(job); });
            ++r.polls;
            if (st.status == "succeeded" || st.status == "failed") break;
            if (st.status != "queued" && st.status != "running")
                throw BackendError("unknown job status '" + st.status + "'", false);
        }
        if (r.status != GenerationStatus::timeout) {
            if (st.status == "failed") {
                r.status = GenerationStatus::failed;
                r.error = st.error.empty() ? "backend reported failure" : st.error;
            } else {
                const auto bytes = with_retry([&] { return backend.download(st.video_url); });
                if (bytes.empty()) throw BackendError("downloaded video is empty", false);
                fs::create_directories(out_dir);
                const std::string name = "video" + video_extension(bytes);
                io::write_bytes(out_dir / name, bytes);
                r.video = name;
                r.status = GenerationStatus::succeeded;
            }
        }
    } catch (const std::exception& e) {
        r.status = GenerationStatus::failed;
        r.error = e.what();
    }
    r.latency_s = elapsed();
    r.finished_at_ms = wall_ms();
    return r;
}

} // namespace vmeval::pipeline
