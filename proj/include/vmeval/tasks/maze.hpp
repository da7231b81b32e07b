#pragma once

// 3x3 grid mazes carved by Kruskal's algorithm over randomly weighted
// lattice edges.

#include <algorithm>
#include <array>
#include <cstdint>
#include <numeric>
#include <optional>
#include <queue>
#include <vector>

#include "../error.hpp"
#include "../raster/draw.hpp"
#include "../rng.hpp"
#include "../task.hpp"

namespace vmeval::maze {

inline constexpr int kRows = 3;
inline constexpr int kCols = 3;
inline constexpr int kCells = kRows * kCols;
inline constexpr int kMinPathCells = 3;

struct Cell {
    int row = 0;
    int col = 0;
    friend constexpr bool operator==(Cell, Cell) = default;
    friend constexpr auto operator<=>(Cell, Cell) = default;
};

inline constexpr int cell_index(Cell c) { return c.row * kCols + c.col; }
inline constexpr Cell cell_at(int index) { return {index / kCols, index % kCols}; }

struct Edge {
    Cell a;
    Cell b;
    friend constexpr bool operator==(Edge, Edge) = default;
    friend constexpr auto operator<=>(Edge, Edge) = default;
};

/// The 12 lattice edges: horizontal neighbours row-major, then vertical.
inline std::vector<Edge> lattice_edges() {
    std::vector<Edge> out;
    for (int r = 0; r < kRows; ++r)
        for (int c = 0; c + 1 < kCols; ++c) out.push_back({{r, c}, {r, c + 1}});
    for (int r = 0; r + 1 < kRows; ++r)
        for (int c = 0; c < kCols; ++c) out.push_back({{r, c}, {r + 1, c}});
    return out;
}

struct MazeSpec {
    int rows = kRows;
    int cols = kCols;
    std::vector<Edge> passages; ///< in lattice order
    std::vector<Edge> walls;    ///< interior edges that stay closed, in lattice order
    Cell start;
    Cell goal;
    std::vector<Cell> solution;

    friend bool operator==(const MazeSpec&, const MazeSpec&) = default;
};

class DisjointSets {
public:
    explicit DisjointSets(std::size_t n) : parent_(n), rank_(n, 0) { std::iota(parent_.begin(), parent_.end(), 0); }

    std::size_t find(std::size_t x) {
        while (parent_[x] != x) {
            parent_[x] = parent_[parent_[x]];
            x = parent_[x];
        }
        return x;
    }

    bool unite(std::size_t a, std::size_t b) {
        a = find(a);
        b = find(b);
        if (a == b) return false;
        if (rank_[a] < rank_[b]) std::swap(a, b);
        parent_[b] = a;
        if (rank_[a] == rank_[b]) ++rank_[a];
        return true;
    }

private:
    std::vector<std::size_t> parent_;
    std::vector<int> rank_;
};

/// Minimum spanning forest; ties in weight fall back to edge order.
inline std::vector<std::size_t> kruskal(std::size_t vertices, const std::vector<Edge>& edges,
                                        const std::vector<std::uint64_t>& weights) {
    std::vector<std::size_t> order(edges.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return weights[a] < weights[b]; });
    DisjointSets sets(vertices);
    std::vector<std::size_t> chosen;
    for (std::size_t e : order) {
        if (sets.unite(static_cast<std::size_t>(cell_index(edges[e].a)), static_cast<std::size_t>(cell_index(edges[e].b))))
            chosen.push_back(e);
    }
    std::sort(chosen.begin(), chosen.end());
    return chosen;
}

namespace detail {

inline std::array<std::vector<int>, kCells> adjacency(const std::vector<Edge>& passages) {
    std::array<std::vector<int>, kCells> adj;
    for (const auto& e : passages) {
        adj[static_cast<std::size_t>(cell_index(e.a))].push_back(cell_index(e.b));
        adj[static_cast<std::size_t>(cell_index(e.b))].push_back(cell_index(e.a));
    }
    for (auto& v : adj) std::sort(v.begin(), v.end());
    return adj;
}

inline std::optional<std::vector<Cell>> bfs_path(const std::vector<Edge>& passages, Cell from, Cell to) {
    const auto adj = adjacency(passages);
    std::array<int, kCells> prev;
    prev.fill(-2);
    std::queue<int> q;
    q.push(cell_index(from));
    prev[static_cast<std::size_t>(cell_index(from))] = -1;
    while (!q.empty()) {
        const int v = q.front();
        q.pop();
        if (v == cell_index(to)) break;
        for (int n : adj[static_cast<std::size_t>(v)]) {
            if (prev[static_cast<std::size_t>(n)] != -2) continue;
            prev[static_cast<std::size_t>(n)] = v;
            q.push(n);
        }
    }
    if (prev[static_cast<std::size_t>(cell_index(to))] == -2) return std::nullopt;
    std::vector<Cell> path;
    for (int v = cell_index(to); v != -1; v = prev[static_cast<std::size_t>(v)]) path.push_back(cell_at(v));
    std::reverse(path.begin(), path.end());
    return path;
}

} // namespace detail

/// True if the passages form a spanning tree of the grid.
inline bool is_spanning_tree(const std::vector<Edge>& passages) {
    if (passages.size() != static_cast<std::size_t>(kCells - 1)) return false;
    DisjointSets sets(kCells);
    for (const auto& e : passages)
        if (!sets.unite(static_cast<std::size_t>(cell_index(e.a)), static_cast<std::size_t>(cell_index(e.b)))) return false;
    return true;
}

/// Breadth-first path from start to goal. Throws InvariantError when the
/// passage graph is not a spanning tree.
inline std::vector<Cell> solve_maze(const MazeSpec& spec) {
    if (!is_spanning_tree(spec.passages)) throw InvariantError("maze passages do not form a spanning tree");
    auto path = detail::bfs_path(spec.passages, spec.start, spec.goal);
    if (!path) throw InvariantError("maze goal unreachable from start");
    return *path;
}

inline MazeSpec gen_maze(Rng& rng) {
    const auto edges = lattice_edges();
    std::vector<std::uint64_t> weights(edges.size());
    for (auto& w : weights) w = rng.next_u64();
    const auto tree = kruskal(kCells, edges, weights);

    MazeSpec spec;
    for (std::size_t i = 0; i < edges.size(); ++i) {
        if (std::binary_search(tree.begin(), tree.end(), i)) spec.passages.push_back(edges[i]);
        else spec.walls.push_back(edges[i]);
    }
    for (;;) {
        const int s = static_cast<int>(rng.below(kCells));
        int g = static_cast<int>(rng.below(kCells - 1));
        if (g >= s) ++g;
        spec.start = cell_at(s);
        spec.goal = cell_at(g);
        spec.solution = solve_maze(spec);
        if (spec.solution.size() >= static_cast<std::size_t>(kMinPathCells)) break;
    }
    return spec;
}

inline MazeSpec gen_maze(std::uint64_t seed) {
    Rng rng(seed, "maze");
    return gen_maze(rng);
}

// ---------------------------------------------------------------------------
// Rendering

struct MazeLayout {
    static constexpr int width = 832;
    static constexpr int height = 480;
    static constexpr int cell = 140;
    static constexpr int origin_x = (width - kCols * cell) / 2;
    static constexpr int origin_y = (height - kRows * cell) / 2;
    static constexpr int wall = 6;
    static constexpr int marker_radius = 30;
    static constexpr int trail = 6;

    static constexpr int center_x(Cell c) { return origin_x + c.col * cell + cell / 2; }
    static constexpr int center_y(Cell c) { return origin_y + c.row * cell + cell / 2; }
};

inline constexpr raster::Rgb kWallColor{20, 20, 20};
inline constexpr raster::Rgb kMarkerColor{30, 170, 60};
inline constexpr raster::Rgb kTrailColor{120, 205, 140};
inline constexpr raster::Rgb kFlagColor{220, 30, 30};
inline constexpr raster::Rgb kPoleColor{90, 90, 90};

inline void draw_flag(raster::Image& img, Cell goal) {
    using L = MazeLayout;
    const int cx = L::center_x(goal), cy = L::center_y(goal);
    raster::fill_rect(img, cx + 38, cy - 56, 4, 44, kPoleColor);
    const raster::Point2 pennant[] = {{cx + 42.0, cy - 56.0}, {cx + 64.0, cy - 45.0}, {cx + 42.0, cy - 34.0}};
    raster::fill_polygon(img, pennant, kFlagColor);
}

/// 832x480 frame: walls in black, optional trail, green marker, red flag.
inline raster::Image render_maze(const MazeSpec& spec, Cell marker_at, bool with_trail = false) {
    using L = MazeLayout;
    raster::Image img(L::width, L::height, raster::colors::white);
    const int half = L::wall / 2;

    if (with_trail) {
        for (std::size_t i = 0; i + 1 < spec.solution.size(); ++i) {
            const Cell a = spec.solution[i], b = spec.solution[i + 1];
            raster::draw_line(img, L::center_x(a), L::center_y(a), L::center_x(b), L::center_y(b), kTrailColor, L::trail);
        }
    }

    const int x0 = L::origin_x, y0 = L::origin_y;
    const int w = spec.cols * L::cell, h = spec.rows * L::cell;
    raster::fill_rect(img, x0 - half, y0 - half, w + L::wall, L::wall, kWallColor);
    raster::fill_rect(img, x0 - half, y0 + h - half, w + L::wall, L::wall, kWallColor);
    raster::fill_rect(img, x0 - half, y0 - half, L::wall, h + L::wall, kWallColor);
    raster::fill_rect(img, x0 + w - half, y0 - half, L::wall, h + L::wall, kWallColor);
    for (const auto& e : spec.walls) {
        if (e.a.row == e.b.row) {
            const int x = x0 + std::max(e.a.col, e.b.col) * L::cell;
            raster::fill_rect(img, x - half, y0 + e.a.row * L::cell - half, L::wall, L::cell + L::wall, kWallColor);
        } else {
            const int y = y0 + std::max(e.a.row, e.b.row) * L::cell;
            raster::fill_rect(img, x0 + e.a.col * L::cell - half, y - half, L::cell + L::wall, L::wall, kWallColor);
        }
    }

    raster::fill_circle(img, L::center_x(marker_at), L::center_y(marker_at), L::marker_radius, kMarkerColor);
    draw_flag(img, spec.goal);
    return img;
}

inline Json cell_json(Cell c) { return Json::array({c.row, c.col}); }

inline Json maze_ground_truth(const MazeSpec& spec) {
    Json walls = Json::array(), passages = Json::array(), path = Json::array();
    for (const auto& e : spec.walls) walls.push_back({cell_json(e.a), cell_json(e.b)});
    for (const auto& e : spec.passages) passages.push_back({cell_json(e.a), cell_json(e.b)});
    for (const auto& c : spec.solution) path.push_back(cell_json(c));
    return {{"rows", spec.rows},         {"cols", spec.cols},          {"walls", walls},
            {"passages", passages},      {"start", cell_json(spec.start)}, {"goal", cell_json(spec.goal)},
            {"solution", path}};
}

inline const char* kMazePrompt =
    "This is a maze seen from above. The green dot marks the current position and the red flag marks the goal. "
    "Move the green dot through the open corridors, never crossing a black wall, until it reaches the red flag.";

inline TaskUnit make_maze_task(const MazeSpec& spec, std::uint64_t seed, std::uint64_t index = 0) {
    TaskUnit t;
    t.domain = Domain::maze;
    t.seed = seed;
    t.index = index;
    t.id = make_task_id(t.domain, seed, index);
    t.first_frame = render_maze(spec, spec.start, false);
    t.final_frame = render_maze(spec, spec.goal, true);
    t.prompt = kMazePrompt;
    t.ground_truth = maze_ground_truth(spec);
    return t;
}

inline TaskUnit generate_maze_task(std::uint64_t seed, std::uint64_t index) {
    Rng rng(seed, "maze", index);
    return make_maze_task(gen_maze(rng), seed, index);
}

} // namespace vmeval::maze
