#pragma once

// Deterministic stand-in for a video model. `oracle` ends on the expected
// final frame, `lazy` never moves, `noisy` ends on the final frame with
// seeded per-pixel noise of a given amplitude.

#include <algorithm>
#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "../error.hpp"
#include "../io.hpp"
#include "../raster/png.hpp"
#include "../rng.hpp"
#include "../task.hpp"
#include "letterbox.hpp"
#include "video.hpp"

namespace vmeval::pipeline {

enum class MockMode { oracle, lazy, noisy };

inline std::string_view to_string(MockMode m) {
    switch (m) {
    case MockMode::oracle: return "oracle";
    case MockMode::lazy: return "lazy";
    case MockMode::noisy: return "noisy";
    }
    return "?";
}

inline MockMode parse_mock_mode(std::string_view s) {
    for (MockMode m : {MockMode::oracle, MockMode::lazy, MockMode::noisy})
        if (to_string(m) == s) return m;
    throw ArgumentError("unknown mock mode '" + std::string(s) + "' (oracle, lazy or noisy)");
}

struct MockOptions {
    int noise = 4;              ///< per-channel amplitude for noisy mode
    std::uint64_t noise_seed = 0;
};

inline raster::Image add_noise(const raster::Image& img, int amplitude, std::uint64_t seed) {
    if (amplitude < 0) throw ArgumentError("noise amplitude must be non-negative");
    raster::Image out = img;
    if (amplitude == 0) return out;
    Rng rng(seed, "mock-noise");
    for (auto& b : out.bytes()) {
        const auto delta = rng.uniform_int(-amplitude, amplitude);
        b = static_cast<std::uint8_t>(std::clamp<std::int64_t>(b + delta, 0, 255));
    }
    return out;
}

inline raster::Image blend(const raster::Image& a, const raster::Image& b) {
    raster::Image out = a;
    auto ob = out.bytes();
    auto bb = b.bytes();
    for (std::size_t i = 0; i < ob.size(); ++i) ob[i] = static_cast<std::uint8_t>((ob[i] + bb[i] + 1) / 2);
    return out;
}

/// Three frames: start, halfway blend, end. `final_frame` is letterboxed
/// to the size of `first` when they differ.
inline std::vector<std::uint8_t> mock_video(const raster::Image& first, const raster::Image& final_frame, MockMode mode,
                                            const MockOptions& opt = {}) {
    const Size size{first.width(), first.height()};
    raster::Image last = first;
    if (mode != MockMode::lazy) {
        last = Size{final_frame.width(), final_frame.height()} == size ? final_frame : letterbox(final_frame, size);
        if (mode == MockMode::noisy) last = add_noise(last, opt.noise, opt.noise_seed);
    }
    return write_avi({first, blend(first, last), last});
}

/// Mock video for a task, optionally at a model resolution.
inline std::vector<std::uint8_t> mock_generate(const TaskUnit& task, MockMode mode, const MockOptions& opt = {},
                                               std::optional<Size> resolution = std::nullopt) {
    raster::Image first = task.first_frame;
    if (resolution) first = letterbox(first, *resolution);
    MockOptions o = opt;
    if (o.noise_seed == 0) o.noise_seed = fnv1a(task.id);
    return mock_video(first, task.final_frame, mode, o);
}

/// Thrown by the mock service for failures a client should retry.
class MockTransientError : public IoError {
public:
    using IoError::IoError;
};

/// Job bookkeeping behind both the in-process and the HTTP mock backend.
///
/// model_options understood:
///   delay_polls         number of polls answered with "running" first
///   noise               noise amplitude for noisy mode
///   fail_job            the job ends in "failed"
///   transient_failures  this many submits per task fail transiently first
class MockService {
public:
    explicit MockService(fs::path task_root) : task_root_(std::move(task_root)) {}

    std::string submit(std::string_view mode_name, const Json& request, std::span<const std::uint8_t> image_png) {
        const MockMode mode = parse_mock_mode(mode_name);
        if (!request.is_object() || !request.contains("task_id") || !request["task_id"].is_string())
            throw ArgumentError("request needs a string task_id");
        const std::string task_id = request["task_id"].get<std::string>();
        if (task_id.find('/') != std::string::npos || task_id.find("..") != std::string::npos)
            throw ArgumentError("bad task_id");
        const Json opts = request.value("model_options", Json::object());
        {
            std::lock_guard lock(mu_);
            const int allowed = opts.value("transient_failures", 0);
            if (transient_seen_[task_id] < allowed) {
                ++transient_seen_[task_id];
                throw MockTransientError("simulated transient failure");
            }
        }
        const raster::Image first = raster::decode_png(image_png);
        const raster::Image final_frame =
            raster::decode_png(io::read_bytes(task_root_ / task_id / task_files::final_frame));
        MockOptions mo;
        mo.noise = opts.value("noise", mo.noise);
        mo.noise_seed = fnv1a(task_id);

        Job job;
        job.polls_left = opts.value("delay_polls", 0);
        if (opts.value("fail_job", false)) job.error = "simulated generation failure";
        else job.video = mock_video(first, final_frame, mode, mo);

        std::lock_guard lock(mu_);
        const std::string id = "job-" + std::to_string(++counter_);
        jobs_.emplace(id, std::move(job));
        return id;
    }

    /// {"status": queued|running|succeeded|failed, "video_url": ..., "error": ...}
    Json status(const std::string& id, const std::string& video_url) {
        std::lock_guard lock(mu_);
        auto it = jobs_.find(id);
        if (it == jobs_.end()) throw ArgumentError("unknown job '" + id + "'");
        Job& job = it->second;
        ++job.polls;
        if (job.polls_left > 0) {
            --job.polls_left;
            return {{"status", "running"}, {"video_url", nullptr}, {"error", nullptr}};
        }
        if (!job.error.empty()) return {{"status", "failed"}, {"video_url", nullptr}, {"error", job.error}};
        return {{"status", "succeeded"}, {"video_url", video_url}, {"error", nullptr}};
    }

    std::optional<std::vector<std::uint8_t>> video(const std::string& id) const {
        std::lock_guard lock(mu_);
        auto it = jobs_.find(id);
        if (it == jobs_.end() || it->second.video.empty() || it->second.polls_left > 0) return std::nullopt;
        return it->second.video;
    }

    std::size_t job_count() const {
        std::lock_guard lock(mu_);
        return jobs_.size();
    }

    const fs::path& task_root() const { return task_root_; }

private:
    struct Job {
        std::vector<std::uint8_t> video;
        std::string error;
        int polls_left = 0;
        int polls = 0;
    };

    fs::path task_root_;
    mutable std::mutex mu_;
    std::map<std::string, Job> jobs_;
    std::map<std::string, int> transient_seen_;
    std::uint64_t counter_ = 0;
};

} // namespace vmeval::pipeline
