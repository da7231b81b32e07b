#pragma once

// One entry point over the five generators.

#include <cstdint>
#include <vector>

#include "task.hpp"
#include "tasks/chess.hpp"
#include "tasks/maze.hpp"
#include "tasks/rotation.hpp"
#include "tasks/rpm.hpp"
#include "tasks/sudoku.hpp"

namespace vmeval {

/// The index-th task of a domain under a run seed. Every generator keys
/// its random stream by (seed, domain, index), so tasks are independent
/// of how many others are generated alongside them.
inline TaskUnit generate_task(Domain domain, std::uint64_t seed, std::uint64_t index) {
    TaskUnit t;
    switch (domain) {
    case Domain::chess: t = chess::generate_chess_task(seed, index); break;
    case Domain::maze: t = maze::generate_maze_task(seed, index); break;
    case Domain::rpm: t = rpm::generate_rpm_task(seed, index); break;
    case Domain::rotation: t = rotation::generate_rotation_task(seed, index); break;
    case Domain::sudoku: t = sudoku::generate_sudoku_task(seed, index); break;
    }
    check_task_invariants(t);
    return t;
}

struct GenerateSummary {
    Domain domain;
    std::size_t written = 0;
    std::size_t skipped = 0;
};

/// Writes `count` tasks of each domain under `root`. Task directories that
/// already exist are left untouched and counted as skipped.
inline std::vector<GenerateSummary> generate_tasks(const std::vector<Domain>& domains, std::size_t count,
                                                   std::uint64_t seed, const fs::path& root) {
    if (count == 0) throw ArgumentError("count must be at least 1");
    if (domains.empty()) throw ArgumentError("no domains selected");
    std::vector<GenerateSummary> out;
    for (Domain d : domains) {
        GenerateSummary s{d};
        for (std::size_t i = 0; i < count; ++i) {
            if (fs::exists(root / make_task_id(d, seed, i))) {
                ++s.skipped;
                continue;
            }
            write_task(generate_task(d, seed, i), root);
            ++s.written;
        }
        out.push_back(s);
    }
    return out;
}

} // namespace vmeval
