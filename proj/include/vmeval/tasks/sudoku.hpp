#pragma once

// 3x3 Latin-square puzzles with a single blank cell.

#include <algorithm>
#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "../error.hpp"
#include "../raster/draw.hpp"
#include "../rng.hpp"
#include "../task.hpp"

namespace vmeval::sudoku {

using Grid = std::array<std::array<int, 3>, 3>;

struct CellPos {
    int row = 0;
    int col = 0;
    friend constexpr bool operator==(CellPos, CellPos) = default;
};

struct SudokuSpec {
    Grid solution{};
    CellPos blank;
    int answer = 0;
    friend bool operator==(const SudokuSpec&, const SudokuSpec&) = default;
};

inline bool is_latin(const Grid& g) {
    for (int i = 0; i < 3; ++i) {
        unsigned row = 0, col = 0;
        for (int j = 0; j < 3; ++j) {
            const int r = g[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
            const int c = g[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)];
            if (r < 1 || r > 3 || c < 1 || c > 3) return false;
            row |= 1u << r;
            col |= 1u << c;
        }
        if (row != 0b1110u || col != 0b1110u) return false;
    }
    return true;
}

/// Scans all 3^9 digit grids and keeps the Latin squares, sorted row-major.
inline std::vector<Grid> enumerate_latin3() {
    std::vector<Grid> out;
    for (int code = 0; code < 19683; ++code) {
        Grid g{};
        int v = code;
        for (int k = 8; k >= 0; --k) {
            g[static_cast<std::size_t>(k / 3)][static_cast<std::size_t>(k % 3)] = v % 3 + 1;
            v /= 3;
        }
        if (is_latin(g)) out.push_back(g);
    }
    std::sort(out.begin(), out.end());
    return out;
}

inline const std::vector<Grid>& latin3_catalog() {
    static const std::vector<Grid> catalog = enumerate_latin3();
    return catalog;
}

/// Digits that fit the blank given its row and column.
inline std::vector<int> candidates(const Grid& g, CellPos blank) {
    std::vector<int> out;
    for (int d = 1; d <= 3; ++d) {
        bool ok = true;
        for (int k = 0; k < 3; ++k) {
            if (k != blank.col && g[static_cast<std::size_t>(blank.row)][static_cast<std::size_t>(k)] == d) ok = false;
            if (k != blank.row && g[static_cast<std::size_t>(k)][static_cast<std::size_t>(blank.col)] == d) ok = false;
        }
        if (ok) out.push_back(d);
    }
    return out;
}

/// Picks one of the 108 (solution, blank) pairs by ordinal.
inline SudokuSpec sudoku_from_ordinal(std::size_t ordinal) {
    const auto& cat = latin3_catalog();
    if (ordinal >= cat.size() * 9) throw ArgumentError("sudoku ordinal out of range: " + std::to_string(ordinal));
    SudokuSpec s;
    s.solution = cat[ordinal / 9];
    s.blank = {static_cast<int>(ordinal % 9) / 3, static_cast<int>(ordinal % 9) % 3};
    s.answer = s.solution[static_cast<std::size_t>(s.blank.row)][static_cast<std::size_t>(s.blank.col)];
    return s;
}

inline SudokuSpec gen_sudoku(Rng& rng) { return sudoku_from_ordinal(rng.below(latin3_catalog().size() * 9)); }

inline SudokuSpec gen_sudoku(std::uint64_t seed) {
    Rng rng(seed, "sudoku");
    return gen_sudoku(rng);
}

struct SudokuLayout {
    static constexpr int cell = 120;
    static constexpr int margin = 6;
    static constexpr int size = 2 * margin + 3 * cell;
    static constexpr int line = 4;
    static constexpr int glyph = 32;
};

inline constexpr raster::Rgb kBlankFill{230, 230, 230};

inline raster::Image render_sudoku(const SudokuSpec& s, bool solved) {
    using L = SudokuLayout;
    raster::Image img(L::size, L::size, raster::colors::white);
    const int x0 = L::margin, y0 = L::margin;
    if (!solved)
        raster::fill_rect(img, x0 + s.blank.col * L::cell, y0 + s.blank.row * L::cell, L::cell, L::cell, kBlankFill);
    for (int i = 0; i <= 3; ++i) {
        raster::fill_rect(img, x0 + i * L::cell - L::line / 2, y0 - L::line / 2, L::line, 3 * L::cell + L::line,
                          raster::colors::black);
        raster::fill_rect(img, x0 - L::line / 2, y0 + i * L::cell - L::line / 2, 3 * L::cell + L::line, L::line,
                          raster::colors::black);
    }
    const raster::TextStyle style{.size = L::glyph, .color = raster::colors::black, .bold = true,
                                  .anchor = raster::Anchor::center};
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) {
            if (!solved && CellPos{r, c} == s.blank) continue;
            raster::draw_text(img, std::to_string(s.solution[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)]),
                              x0 + c * L::cell + L::cell / 2, y0 + r * L::cell + L::cell / 2, style);
        }
    return img;
}

inline const char* kSudokuPrompt =
    "This is a 3x3 Sudoku grid. Each row and each column must contain the digits 1, 2 and 3 exactly once. "
    "Fill in the missing number in the gray cell.";

inline TaskUnit make_sudoku_task(const SudokuSpec& s, std::uint64_t seed, std::uint64_t index = 0) {
    if (!is_latin(s.solution)) throw InvariantError("sudoku solution is not a Latin square");
    TaskUnit t;
    t.domain = Domain::sudoku;
    t.seed = seed;
    t.index = index;
    t.id = make_task_id(t.domain, seed, index);
    t.first_frame = render_sudoku(s, false);
    t.final_frame = render_sudoku(s, true);
    t.prompt = kSudokuPrompt;
    Json grid = Json::array();
    for (const auto& row : s.solution) grid.push_back(Json(row));
    t.ground_truth = {{"solution", grid}, {"blank", {s.blank.row, s.blank.col}}, {"answer", s.answer}};
    return t;
}

inline TaskUnit generate_sudoku_task(std::uint64_t seed, std::uint64_t index) {
    Rng rng(seed, "sudoku", index);
    return make_sudoku_task(gen_sudoku(rng), seed, index);
}

} // namespace vmeval::sudoku
