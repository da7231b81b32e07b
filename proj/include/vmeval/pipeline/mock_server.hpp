#pragma once

// The job protocol from backend.hpp served over HTTP by the mock service.
// Routes:
//   POST /<mode>/v1/jobs
//   GET  /<mode>/v1/jobs/<job_id>
//   GET  /videos/<job_id>.avi
// where <mode> is oracle, lazy or noisy. A catalog entry points at it with
// an endpoint such as http://127.0.0.1:8765/oracle.

#include <httplib.h>

#include <memory>
#include <string>
#include <thread>

#include "../error.hpp"
#include "backend.hpp"
#include "base64.hpp"
#include "mock.hpp"

namespace vmeval::pipeline {

class MockHttpServer {
public:
    explicit MockHttpServer(fs::path task_root, std::string required_token = {})
        : service_(std::make_shared<MockService>(std::move(task_root))), token_(std::move(required_token)) {
        routes();
    }

    ~MockHttpServer() { stop(); }

    MockHttpServer(const MockHttpServer&) = delete;
    MockHttpServer& operator=(const MockHttpServer&) = delete;

    /// Binds (port 0 picks a free one) and serves on a background thread.
    int start(const std::string& host = "127.0.0.1", int port = 0) {
        port_ = port == 0 ? server_.bind_to_any_port(host) : (server_.bind_to_port(host, port) ? port : -1);
        if (port_ < 0) throw IoError("mock server could not bind " + host + ":" + std::to_string(port));
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
        return port_;
    }

    /// Serves on the calling thread until stop() is called elsewhere.
    void run(const std::string& host, int port) {
        if (!server_.listen(host, port)) throw IoError("mock server could not listen on " + host + ":" + std::to_string(port));
    }

    void stop() {
        server_.stop();
        if (thread_.joinable()) thread_.join();
    }

    int port() const { return port_; }
    MockService& service() { return *service_; }

private:
    static void reply_error(httplib::Response& res, int status, const std::string& msg) {
        res.status = status;
        res.set_content(Json{{"error", msg}}.dump(), "application/json");
    }

    bool authorized(const httplib::Request& req, httplib::Response& res) const {
        if (token_.empty() || req.get_header_value("Authorization") == "Bearer " + token_) return true;
        reply_error(res, 401, "missing or wrong bearer token");
        return false;
    }

    void routes() {
        server_.Post(R"(/(oracle|lazy|noisy)/v1/jobs)", [this](const httplib::Request& req, httplib::Response& res) {
            if (!authorized(req, res)) return;
            const std::string mode = req.matches[1];
            try {
                Json request;
                std::vector<std::uint8_t> image;
                if (req.is_multipart_form_data()) {
                    if (!req.has_file("request") || !req.has_file("image"))
                        return reply_error(res, 400, "multipart body needs 'request' and 'image' parts");
                    request = Json::parse(req.get_file_value("request").content);
                    const auto& part = req.get_file_value("image");
                    validate_mime(part.content_type);
                    image.assign(part.content.begin(), part.content.end());
                } else {
                    request = Json::parse(req.body);
                    const Json& img = request.at("image");
                    validate_mime(img.at("mime").get<std::string>());
                    image = base64_decode(img.at("data").get<std::string>());
                }
                const std::string id = service_->submit(mode, request, image);
                res.status = 201;
                res.set_content(Json{{"job_id", id}}.dump(), "application/json");
            } catch (const MockTransientError& e) {
                reply_error(res, 503, e.what());
            } catch (const std::exception& e) {
                reply_error(res, 400, e.what());
            }
        });

        server_.Get(R"(/(oracle|lazy|noisy)/v1/jobs/([A-Za-z0-9_-]+))",
                    [this](const httplib::Request& req, httplib::Response& res) {
                        if (!authorized(req, res)) return;
                        const std::string id = req.matches[2];
                        try {
                            res.set_content(service_->status(id, "/videos/" + id + ".avi").dump(), "application/json");
                        } catch (const std::exception& e) {
                            reply_error(res, 404, e.what());
                        }
                    });

        server_.Get(R"(/videos/([A-Za-z0-9_-]+)\.avi)", [this](const httplib::Request& req, httplib::Response& res) {
            if (!authorized(req, res)) return;
            auto v = service_->video(req.matches[1]);
            if (!v) return reply_error(res, 404, "no such video");
            res.set_content(std::string(v->begin(), v->end()), "video/x-msvideo");
        });
    }

    std::shared_ptr<MockService> service_;
    std::string token_;
    httplib::Server server_;
    std::thread thread_;
    int port_ = -1;
};

} // namespace vmeval::pipeline
