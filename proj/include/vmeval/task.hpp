#pragma once

// Task pair data model and on-disk layout.
//
// A task directory `<root>/<id>/` holds:
//   first_frame.png   image shown to the model
//   final_frame.png   withheld solution image
//   prompt.txt        instruction text (UTF-8, no trailing newline added)
//   ground_truth.json domain record, keys sorted
//   task.json         {id, domain, seed, index, width, height}

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include <json.hpp>

#include "error.hpp"
#include "io.hpp"
#include "raster/image.hpp"
#include "raster/png.hpp"

namespace vmeval {

using Json = nlohmann::json;
namespace fs = std::filesystem;

enum class Domain { chess, maze, rpm, rotation, sudoku };

inline constexpr std::array<Domain, 5> kAllDomains{Domain::chess, Domain::maze, Domain::rpm, Domain::rotation,
                                                   Domain::sudoku};

inline constexpr std::string_view to_string(Domain d) {
    switch (d) {
    case Domain::chess: return "chess";
    case Domain::maze: return "maze";
    case Domain::rpm: return "rpm";
    case Domain::rotation: return "rotation";
    case Domain::sudoku: return "sudoku";
    }
    return "?";
}

inline std::optional<Domain> parse_domain(std::string_view s) {
    for (Domain d : kAllDomains)
        if (to_string(d) == s) return d;
    return std::nullopt;
}

/// Domain encoded as the prefix of a task id (`<domain>_<seed>_<index>`).
inline std::optional<Domain> domain_of_task_id(std::string_view id) {
    const auto cut = id.find('_');
    if (cut == std::string_view::npos) return std::nullopt;
    return parse_domain(id.substr(0, cut));
}

inline std::string make_task_id(Domain d, std::uint64_t seed, std::uint64_t index) {
    return std::string(to_string(d)) + "_" + std::to_string(seed) + "_" + std::to_string(index);
}

struct TaskUnit {
    std::string id;
    Domain domain = Domain::chess;
    std::uint64_t seed = 0;
    std::uint64_t index = 0;
    raster::Image first_frame;
    raster::Image final_frame;
    std::string prompt;
    Json ground_truth;

    friend bool operator==(const TaskUnit&, const TaskUnit&) = default;
};

/// Throws InvariantError unless the frames share dimensions and differ.
inline void check_task_invariants(const TaskUnit& t) {
    if (t.first_frame.width() != t.final_frame.width() || t.first_frame.height() != t.final_frame.height())
        throw InvariantError("task " + t.id + ": first and final frame dimensions differ");
    if (t.first_frame == t.final_frame) throw InvariantError("task " + t.id + ": final frame equals first frame");
}

class TaskExistsError : public IoError {
public:
    using IoError::IoError;
};

namespace task_files {
inline constexpr const char* first_frame = "first_frame.png";
inline constexpr const char* final_frame = "final_frame.png";
inline constexpr const char* prompt = "prompt.txt";
inline constexpr const char* ground_truth = "ground_truth.json";
inline constexpr const char* metadata = "task.json";
} // namespace task_files

inline fs::path write_task(const TaskUnit& task, const fs::path& root) {
    check_task_invariants(task);
    std::error_code ec;
    if (!fs::is_directory(root, ec)) throw IoError("task root is not a directory: " + root.string());
    const fs::path dir = root / task.id;
    if (fs::exists(dir, ec)) throw TaskExistsError("task directory already exists: " + dir.string());
    if (!fs::create_directory(dir, ec) || ec)
        throw IoError("cannot create " + dir.string() + ": " + (ec ? ec.message() : "unknown error"));

    io::write_bytes(dir / task_files::first_frame, raster::encode_png(task.first_frame));
    io::write_bytes(dir / task_files::final_frame, raster::encode_png(task.final_frame));
    io::write_text(dir / task_files::prompt, task.prompt);
    io::write_text(dir / task_files::ground_truth, task.ground_truth.dump(2) + "\n");
    Json meta = {{"id", task.id},
                 {"domain", to_string(task.domain)},
                 {"seed", task.seed},
                 {"index", task.index},
                 {"width", task.first_frame.width()},
                 {"height", task.first_frame.height()}};
    io::write_text(dir / task_files::metadata, meta.dump(2) + "\n");
    return dir;
}

namespace detail {

inline fs::path require_file(const fs::path& dir, const char* name) {
    fs::path p = dir / name;
    std::error_code ec;
    if (!fs::is_regular_file(p, ec)) throw IoError("task file missing: " + p.string());
    return p;
}

inline Json parse_json_file(const fs::path& p) {
    const std::string text = io::read_text(p);
    try {
        return Json::parse(text);
    } catch (const Json::parse_error& e) {
        throw ParseError(p.string() + ": JSON parse error at byte " + std::to_string(e.byte) + ": " + e.what());
    }
}

} // namespace detail

inline TaskUnit read_task(const fs::path& dir) {
    const auto first_path = detail::require_file(dir, task_files::first_frame);
    const auto final_path = detail::require_file(dir, task_files::final_frame);
    const auto prompt_path = detail::require_file(dir, task_files::prompt);
    const auto truth_path = detail::require_file(dir, task_files::ground_truth);
    const auto meta_path = detail::require_file(dir, task_files::metadata);

    TaskUnit t;
    const Json meta = detail::parse_json_file(meta_path);
    try {
        t.id = meta.at("id").get<std::string>();
        auto d = parse_domain(meta.at("domain").get<std::string>());
        if (!d) throw ParseError(meta_path.string() + ": unknown domain");
        t.domain = *d;
        t.seed = meta.at("seed").get<std::uint64_t>();
        t.index = meta.at("index").get<std::uint64_t>();
    } catch (const Json::exception& e) {
        throw ParseError(meta_path.string() + ": " + e.what());
    }
    t.ground_truth = detail::parse_json_file(truth_path);
    t.prompt = io::read_text(prompt_path);
    try {
        t.first_frame = raster::decode_png(io::read_bytes(first_path));
        t.final_frame = raster::decode_png(io::read_bytes(final_path));
    } catch (const ParseError& e) {
        throw ParseError(dir.string() + ": " + e.what());
    }
    if (t.first_frame.width() != meta.value("width", -1) || t.first_frame.height() != meta.value("height", -1))
        throw InvariantError(meta_path.string() + ": recorded dimensions do not match first_frame.png");
    check_task_invariants(t);
    return t;
}

} // namespace vmeval
