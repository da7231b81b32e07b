#pragma once

// Judges every result of a run.
//
//   <run_root>/judgments.json    all judgments, sorted by (model, task_id, rater)
//   <run_root>/judge_errors.json items this rater could not score on the last pass
//
// Rejudging with the same rater replaces that rater's entries; judgments by
// other raters in the file are kept.

#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "../io.hpp"
#include "../parallel.hpp"
#include "../pipeline/run.hpp"
#include "ai.hpp"
#include "frames.hpp"
#include "judgment.hpp"
#include "oracle.hpp"

namespace vmeval::judge {

inline constexpr const char* kJudgmentsFile = "judgments.json";
inline constexpr const char* kJudgeErrorsFile = "judge_errors.json";
inline constexpr const char* kGenerationFailed = "generation failed";

enum class JudgeKind { oracle, ai };

inline JudgeKind parse_judge_kind(std::string_view s) {
    if (s == "oracle") return JudgeKind::oracle;
    if (s == "ai") return JudgeKind::ai;
    throw ArgumentError("unknown judge '" + std::string(s) + "' (oracle or ai)");
}

struct JudgeOptions {
    JudgeKind kind = JudgeKind::oracle;
    std::optional<JudgeEndpoint> endpoint; ///< required for the ai judge
    std::size_t concurrency = 4;
};

struct ItemError {
    std::string task_id;
    std::string model;
    std::string error;
};

struct JudgeRunResult {
    std::vector<Judgment> judgments; ///< this pass only, sorted
    std::vector<ItemError> errors;
    fs::path judgments_path;
};

inline Judgment judge_result(const pipeline::GenerationResult& r, const fs::path& run_root, const fs::path& task_root,
                             const JudgeOptions& opt, const std::string& rater) {
    if (r.status != pipeline::GenerationStatus::succeeded || !r.video) {
        std::string why = kGenerationFailed;
        why += " (" + std::string(pipeline::to_string(r.status));
        if (r.error) why += ": " + *r.error;
        why += ")";
        return make_judgment(r.task_id, r.model, rater, kMinScore, why);
    }
    const TaskUnit task = read_task(task_root / r.task_id);
    const KeyFrames frames = extract_frames(pipeline::result_dir(run_root, r.model, r.task_id) / *r.video);
    if (opt.kind == JudgeKind::oracle) return judge_oracle(task, r.model, frames.last);
    try {
        return judge_ai(task, r.model, frames, *opt.endpoint);
    } catch (const JudgeEndpointError& e) {
        if (!e.transient()) throw;
    }
    return judge_ai(task, r.model, frames, *opt.endpoint);
}

inline JudgeRunResult judge_run(const fs::path& run_root, const JudgeOptions& opt = {}) {
    if (opt.kind == JudgeKind::ai && !opt.endpoint) throw ArgumentError("the ai judge needs an endpoint");
    const pipeline::RunManifest manifest = pipeline::load_manifest(run_root);
    const std::string rater = opt.kind == JudgeKind::oracle ? kOracleRater : opt.endpoint->rater();

    const auto& results = manifest.results;
    std::vector<std::optional<Judgment>> scored(results.size());
    std::vector<std::string> failures(results.size());
    parallel_for(results.size(), opt.concurrency, [&](std::size_t k) {
        try {
            scored[k] = judge_result(results[k], run_root, manifest.task_root, opt, rater);
        } catch (const std::exception& e) {
            failures[k] = e.what();
        }
    });

    JudgeRunResult out;
    out.judgments_path = run_root / kJudgmentsFile;
    std::set<std::pair<std::string, std::string>> covered;
    for (std::size_t k = 0; k < results.size(); ++k) {
        covered.emplace(results[k].model, results[k].task_id);
        if (scored[k]) out.judgments.push_back(*scored[k]);
        else out.errors.push_back({results[k].task_id, results[k].model, failures[k]});
    }
    std::sort(out.judgments.begin(), out.judgments.end(), judgment_less);

    std::vector<Judgment> merged;
    if (fs::exists(out.judgments_path)) {
        for (auto& j : load_judgments(out.judgments_path))
            if (j.rater != rater || !covered.count({j.model, j.task_id})) merged.push_back(std::move(j));
    }
    merged.insert(merged.end(), out.judgments.begin(), out.judgments.end());
    io::write_text_atomic(out.judgments_path, judgments_to_text(std::move(merged)));

    Json errs = Json::array();
    for (const auto& e : out.errors)
        errs.push_back({{"task_id", e.task_id}, {"model_name", e.model}, {"rater", rater}, {"error", e.error}});
    io::write_text_atomic(run_root / kJudgeErrorsFile, errs.dump(2) + "\n");
    return out;
}

} // namespace vmeval::judge
