#pragma once

// Runs every (model, task) job of a suite under a concurrency limit.
//
// Layout:
//   <run_root>/manifest.json
//   <run_root>/<model>/<task_id>/result.json
//   <run_root>/<model>/<task_id>/video.<ext>

#include <algorithm>
#include <cstdio>
#include <memory>
#include <mutex>
#include <string>
#include <tuple>
#include <vector>

#include "../error.hpp"
#include "../io.hpp"
#include "../parallel.hpp"
#include "../rng.hpp"
#include "../task.hpp"
#include "backend.hpp"
#include "catalog.hpp"
#include "mock.hpp"

namespace vmeval::pipeline {

inline constexpr const char* kManifestFile = "manifest.json";
inline constexpr const char* kResultFile = "result.json";

struct RunOptions {
    std::size_t concurrency = 4;
    InferenceParams params;
    bool resume = true;
};

struct RunManifest {
    std::string run_id;
    fs::path task_root;
    std::vector<ModelSpec> models;
    std::vector<GenerationResult> results; ///< sorted by (model, task_id)

    std::size_t count(GenerationStatus s) const {
        return static_cast<std::size_t>(
            std::count_if(results.begin(), results.end(), [&](const GenerationResult& r) { return r.status == s; }));
    }
};

/// Sorted ids of the task directories under root.
inline std::vector<std::string> list_task_ids(const fs::path& root) {
    if (!fs::is_directory(root)) throw IoError("task root is not a directory: " + root.string());
    std::vector<std::string> ids;
    for (const auto& e : fs::directory_iterator(root))
        if (e.is_directory() && fs::is_regular_file(e.path() / task_files::metadata)) ids.push_back(e.path().filename().string());
    std::sort(ids.begin(), ids.end());
    return ids;
}

/// Stable identifier of a job set: the same models and tasks give the same id.
inline std::string make_run_id(const std::vector<ModelSpec>& models, const std::vector<std::string>& task_ids) {
    std::string key;
    for (const auto& m : models) key += m.name + "\n";
    key += "--\n";
    for (const auto& t : task_ids) key += t + "\n";
    char buf[32];
    std::snprintf(buf, sizeof buf, "run-%016llx", static_cast<unsigned long long>(fnv1a(key)));
    return buf;
}

inline Json manifest_to_json(const RunManifest& m) {
    Json models = Json::array(), results = Json::array();
    for (const auto& s : m.models) models.push_back(model_to_json(s));
    for (const auto& r : m.results) results.push_back(result_to_json(r));
    return {{"run_id", m.run_id}, {"task_root", m.task_root.string()}, {"models", models}, {"results", results}};
}

inline RunManifest manifest_from_json(const Json& j) {
    RunManifest m;
    try {
        m.run_id = j.at("run_id").get<std::string>();
        m.task_root = j.at("task_root").get<std::string>();
        for (const auto& s : j.at("models")) m.models.push_back(model_from_json(s));
        for (const auto& r : j.at("results")) m.results.push_back(result_from_json(r));
    } catch (const Json::exception& e) {
        throw ParseError(std::string("bad run manifest: ") + e.what());
    }
    return m;
}

inline RunManifest load_manifest(const fs::path& run_root) {
    const fs::path p = run_root / kManifestFile;
    const std::string text = io::read_text(p);
    try {
        return manifest_from_json(Json::parse(text));
    } catch (const Json::parse_error& e) {
        throw ParseError(p.string() + ": invalid JSON at byte " + std::to_string(e.byte));
    }
}

inline fs::path result_dir(const fs::path& run_root, const std::string& model, const std::string& task_id) {
    return run_root / model / task_id;
}

/// A stored result that can be reused on resume.
inline std::optional<GenerationResult> reusable_result(const fs::path& dir) {
    const fs::path p = dir / kResultFile;
    if (!fs::is_regular_file(p)) return std::nullopt;
    try {
        GenerationResult r = result_from_json(Json::parse(io::read_text(p)));
        if (r.status != GenerationStatus::succeeded || !r.video) return std::nullopt;
        const fs::path v = dir / *r.video;
        if (!fs::is_regular_file(v) || fs::file_size(v) == 0) return std::nullopt;
        return r;
    } catch (const std::exception&) {
        return std::nullopt;
    }
}

/// Executes all jobs; failures are recorded per item and never abort the
/// suite. The manifest is written once, by the calling thread.
inline RunManifest run_suite(const std::vector<ModelSpec>& models, const fs::path& task_root, const fs::path& run_root,
                             const RunOptions& opt = {}) {
    if (models.empty()) throw ArgumentError("no models to run");
    if (opt.concurrency == 0) throw ArgumentError("concurrency limit must be at least 1");
    opt.params.validate();
    const auto task_ids = list_task_ids(task_root);
    fs::create_directories(run_root);

    auto mock = std::make_shared<MockService>(task_root);
    std::vector<std::unique_ptr<Backend>> backends(models.size());
    std::vector<std::string> backend_errors(models.size());
    for (std::size_t i = 0; i < models.size(); ++i) {
        try {
            backends[i] = make_backend(models[i], mock);
        } catch (const std::exception& e) {
            backend_errors[i] = e.what();
        }
    }

    const std::size_t total = models.size() * task_ids.size();
    std::vector<GenerationResult> results(total);
    parallel_for(total, opt.concurrency, [&](std::size_t k) {
        const std::size_t mi = k / task_ids.size();
        const ModelSpec& m = models[mi];
        const std::string& tid = task_ids[k % task_ids.size()];
        const fs::path dir = result_dir(run_root, m.name, tid);
        if (opt.resume) {
            if (auto prior = reusable_result(dir)) {
                results[k] = *prior;
                return;
            }
        }
        GenerationResult r;
        if (!backends[mi]) {
            r.task_id = tid;
            r.model = m.name;
            r.started_at_ms = r.finished_at_ms = wall_ms();
            r.error = backend_errors[mi];
        } else {
            try {
                const TaskUnit task = read_task(task_root / tid);
                r = submit_and_poll(m, task, opt.params, *backends[mi], dir);
            } catch (const std::exception& e) {
                r.task_id = tid;
                r.model = m.name;
                r.started_at_ms = r.finished_at_ms = wall_ms();
                r.error = e.what();
            }
        }
        try {
            fs::create_directories(dir);
            io::write_text_atomic(dir / kResultFile, result_to_json(r).dump(2) + "\n");
        } catch (const std::exception& e) {
            r.status = GenerationStatus::failed;
            r.error = std::string("could not record result: ") + e.what();
        }
        results[k] = std::move(r);
    });

    RunManifest manifest;
    manifest.run_id = make_run_id(models, task_ids);
    manifest.task_root = fs::absolute(task_root).lexically_normal();
    manifest.models = models;
    manifest.results = std::move(results);
    std::stable_sort(manifest.results.begin(), manifest.results.end(), [](const auto& a, const auto& b) {
        return std::tie(a.model, a.task_id) < std::tie(b.model, b.task_id);
    });
    io::write_text_atomic(run_root / kManifestFile, manifest_to_json(manifest).dump(2) + "\n");
    return manifest;
}

} // namespace vmeval::pipeline
