#pragma once

// HTTP front of the session store.
//   GET  /api/run                          run id, item count, reveal flag
//   POST /api/sessions                     {annotator_id, run_id?} -> session
//   GET  /api/sessions/<id>/next           pending item, or {"done": true}
//   POST /api/sessions/<id>/scores         {model_name, task_id, score, note?}
//   GET  /api/sessions/<id>/progress
//   GET  /api/export                       human_scores.jsonl
//   GET  /media/<model>/<task_id>/<kind>   kind: first_frame, video, final_frame
// final_frame is 404 unless the server was started with reveal_final.
// Errors are {"error": message} with 404 (unknown), 409 (conflict) or
// 422 (invalid input).

#include <httplib.h>

#include <string>
#include <thread>

#include "../error.hpp"
#include "../io.hpp"
#include "session.hpp"

namespace vmeval::annotate {

struct ServerOptions {
    bool reveal_final = false;
    fs::path static_dir; ///< optional UI bundle served at /
};

inline Json progress_json(const Session& s) {
    return {{"session_id", s.session_id}, {"scored", s.cursor()}, {"total", s.items.size()}, {"done", s.done()}};
}

inline std::string media_url(const Item& it, const std::string& kind) {
    return "/media/" + httplib::detail::encode_url(it.first) + "/" + httplib::detail::encode_url(it.second) + "/" + kind;
}

inline std::string export_jsonl(const std::vector<judge::Judgment>& js) {
    std::string out;
    for (const auto& j : js) out += judge::judgment_to_json(j).dump() + "\n";
    return out;
}

class AnnotationServer {
public:
    AnnotationServer(const fs::path& run_root, ServerOptions opt = {})
        : store_(run_root, pipeline::load_manifest(run_root)), opt_(std::move(opt)) {
        routes();
    }

    ~AnnotationServer() { stop(); }

    AnnotationServer(const AnnotationServer&) = delete;
    AnnotationServer& operator=(const AnnotationServer&) = delete;

    int start(const std::string& host = "127.0.0.1", int port = 0) {
        port_ = port == 0 ? server_.bind_to_any_port(host) : (server_.bind_to_port(host, port) ? port : -1);
        if (port_ < 0) throw IoError("annotation server could not bind " + host + ":" + std::to_string(port));
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
        return port_;
    }

    void run(const std::string& host, int port) {
        if (!server_.listen(host, port))
            throw IoError("annotation server could not listen on " + host + ":" + std::to_string(port));
    }

    void stop() {
        server_.stop();
        if (thread_.joinable()) thread_.join();
    }

    SessionStore& store() { return store_; }

private:
    static void reply(httplib::Response& res, int status, const Json& body) {
        res.status = status;
        res.set_content(body.dump(), "application/json");
    }

    template <class Fn>
    static void guarded(httplib::Response& res, Fn&& fn) {
        try {
            fn();
        } catch (const ApiError& e) {
            reply(res, e.status(), {{"error", e.what()}});
        } catch (const Json::exception& e) {
            reply(res, 400, {{"error", std::string("malformed request: ") + e.what()}});
        } catch (const std::exception& e) {
            reply(res, 500, {{"error", e.what()}});
        }
    }

    static Json body_json(const httplib::Request& req) {
        try {
            Json j = Json::parse(req.body);
            if (!j.is_object()) throw invalid("request body must be a JSON object");
            return j;
        } catch (const Json::parse_error&) {
            throw ApiError(400, "request body is not JSON");
        }
    }

    static std::string required_string(const Json& j, const char* key) {
        if (!j.contains(key) || !j[key].is_string()) throw invalid(std::string("missing string field '") + key + "'");
        return j[key].get<std::string>();
    }

    Json next_json(const Session& s) const {
        if (s.done()) return {{"done", true}, {"total", s.items.size()}};
        const Item& it = s.items[s.cursor()];
        std::string prompt;
        try {
            prompt = io::read_text(store_.manifest().task_root / it.second / task_files::prompt);
        } catch (const IoError&) {
        }
        Json j{{"done", false},
               {"index", s.cursor()},
               {"total", s.items.size()},
               {"model_name", it.first},
               {"task_id", it.second},
               {"prompt", prompt},
               {"first_frame_url", media_url(it, "first_frame")},
               {"video_url", media_url(it, "video")}};
        if (opt_.reveal_final) j["final_frame_url"] = media_url(it, "final_frame");
        return j;
    }

    void serve_media(const Item& it, const std::string& kind, httplib::Response& res) const {
        if (!store_.has_item(it)) throw not_found("no rated item " + it.first + "/" + it.second);
        const fs::path task_dir = store_.manifest().task_root / it.second;
        if (kind == "final_frame" && !opt_.reveal_final) throw not_found("final frames are hidden in this session");
        fs::path p;
        std::string type = "image/png";
        if (kind == "first_frame") {
            p = task_dir / task_files::first_frame;
        } else if (kind == "final_frame") {
            p = task_dir / task_files::final_frame;
        } else {
            const auto& results = store_.manifest().results;
            const auto r = std::find_if(results.begin(), results.end(), [&](const pipeline::GenerationResult& g) {
                return g.model == it.first && g.task_id == it.second;
            });
            p = pipeline::result_dir(store_.run_root(), it.first, it.second) / *r->video;
            const auto ext = p.extension().string();
            type = ext == ".mp4" ? "video/mp4" : ext == ".webm" ? "video/webm" : "video/x-msvideo";
        }
        if (!fs::is_regular_file(p)) throw not_found("missing media file " + p.filename().string());
        const auto bytes = io::read_bytes(p);
        res.set_content(std::string(bytes.begin(), bytes.end()), type);
    }

    void routes() {
        server_.set_default_headers({{"Access-Control-Allow-Origin", "*"}});
        server_.Options(R"(/.*)", [](const httplib::Request&, httplib::Response& res) {
            res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
            res.set_header("Access-Control-Allow-Headers", "Content-Type");
            res.status = 204;
        });
        server_.Get("/api/run", [this](const httplib::Request&, httplib::Response& res) {
            guarded(res, [&] {
                reply(res, 200,
                      {{"run_id", store_.manifest().run_id},
                       {"items", ratable_items(store_.manifest()).size()},
                       {"reveal_final", opt_.reveal_final}});
            });
        });
        server_.Post("/api/sessions", [this](const httplib::Request& req, httplib::Response& res) {
            guarded(res, [&] {
                const Json body = body_json(req);
                const std::string run_id = body.contains("run_id") ? required_string(body, "run_id") : store_.manifest().run_id;
                const Session s = store_.create(required_string(body, "annotator_id"), run_id);
                Json j = progress_json(s);
                j["annotator_id"] = s.annotator_id;
                j["run_id"] = s.run_id;
                reply(res, 201, j);
            });
        });
        server_.Get(R"(/api/sessions/([^/]+)/next)", [this](const httplib::Request& req, httplib::Response& res) {
            guarded(res, [&] { reply(res, 200, next_json(store_.get(req.matches[1]))); });
        });
        server_.Get(R"(/api/sessions/([^/]+)/progress)", [this](const httplib::Request& req, httplib::Response& res) {
            guarded(res, [&] { reply(res, 200, progress_json(store_.get(req.matches[1]))); });
        });
        server_.Post(R"(/api/sessions/([^/]+)/scores)", [this](const httplib::Request& req, httplib::Response& res) {
            guarded(res, [&] {
                const Json body = body_json(req);
                if (!body.contains("score")) throw invalid("missing field 'score'");
                const std::string note = body.contains("note") ? required_string(body, "note") : std::string{};
                const Item it{required_string(body, "model_name"), required_string(body, "task_id")};
                const Session s = store_.submit(req.matches[1], it, body["score"], note);
                reply(res, 201, progress_json(s));
            });
        });
        server_.Get("/api/export", [this](const httplib::Request&, httplib::Response& res) {
            guarded(res, [&] {
                res.set_content(export_jsonl(store_.export_judgments()), "application/x-ndjson");
                res.set_header("Content-Disposition", std::string("attachment; filename=") + kHumanScoresFile);
            });
        });
        server_.Get(R"(/media/([^/]+)/([^/]+)/([a-z_]+))", [this](const httplib::Request& req, httplib::Response& res) {
            guarded(res, [&] {
                const std::string kind = req.matches[3];
                if (kind != "first_frame" && kind != "video" && kind != "final_frame")
                    throw not_found("unknown media kind '" + kind + "'");
                serve_media({req.matches[1], req.matches[2]}, kind, res);
            });
        });
        if (!opt_.static_dir.empty() && !server_.set_mount_point("/", opt_.static_dir.string()))
            throw IoError("UI directory not found: " + opt_.static_dir.string());
    }

    SessionStore store_;
    ServerOptions opt_;
    httplib::Server server_;
    std::thread thread_;
    int port_ = -1;
};

} // namespace vmeval::annotate
