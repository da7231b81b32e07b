#pragma once

// Raven-style 3x3 matrices. Each row starts from random attributes and
// the active rules advance them left to right; the bottom-right tile is
// the one to complete.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "../error.hpp"
#include "../raster/draw.hpp"
#include "../rng.hpp"
#include "../task.hpp"

namespace vmeval::rpm {

enum class Shape { triangle, square, circle };
enum class Hue { red, blue, green };
enum class Rule { shape_prog, number_prog, rotation_prog, color_seq, combination };

inline constexpr std::array kShapes{Shape::triangle, Shape::square, Shape::circle};
inline constexpr std::array kHues{Hue::red, Hue::blue, Hue::green};
inline constexpr std::array kRotations{0, 90, 180, 270};
inline constexpr std::array kAllRules{Rule::shape_prog, Rule::number_prog, Rule::rotation_prog, Rule::color_seq,
                                      Rule::combination};

inline std::string_view to_string(Shape s) {
    switch (s) {
    case Shape::triangle: return "triangle";
    case Shape::square: return "square";
    case Shape::circle: return "circle";
    }
    return "?";
}

inline std::string_view to_string(Hue h) {
    switch (h) {
    case Hue::red: return "red";
    case Hue::blue: return "blue";
    case Hue::green: return "green";
    }
    return "?";
}

inline std::string_view to_string(Rule r) {
    switch (r) {
    case Rule::shape_prog: return "shape_prog";
    case Rule::number_prog: return "number_prog";
    case Rule::rotation_prog: return "rotation_prog";
    case Rule::color_seq: return "color_seq";
    case Rule::combination: return "combination";
    }
    return "?";
}

inline Rule parse_rule(std::string_view s) {
    for (Rule r : kAllRules)
        if (to_string(r) == s) return r;
    throw ArgumentError("unknown rpm rule: " + std::string(s));
}

struct CellAttrs {
    Shape shape = Shape::triangle;
    int count = 1;
    int rotation = 0;
    Hue color = Hue::red;

    friend constexpr bool operator==(const CellAttrs&, const CellAttrs&) = default;
};

inline bool attrs_valid(const CellAttrs& a) {
    return a.count >= 1 && a.count <= 3 && a.rotation >= 0 && a.rotation < 360 && a.rotation % 90 == 0;
}

/// The 108 points of the attribute domain in a fixed order.
inline std::vector<CellAttrs> attribute_domain() {
    std::vector<CellAttrs> out;
    for (Shape s : kShapes)
        for (int n = 1; n <= 3; ++n)
            for (int rot : kRotations)
                for (Hue h : kHues) out.push_back({s, n, rot, h});
    return out;
}

/// Advance attrs by `step` positions under a primitive rule. Every rule
/// cycles through its attribute domain.
inline CellAttrs apply_rule(CellAttrs a, Rule rule, int step) {
    if (step < 0 || step > 2) throw ArgumentError("rule step must be 0, 1 or 2");
    if (!attrs_valid(a)) throw ArgumentError("cell attributes out of domain");
    switch (rule) {
    case Rule::shape_prog: a.shape = static_cast<Shape>((static_cast<int>(a.shape) + step) % 3); return a;
    case Rule::number_prog: a.count = (a.count - 1 + step) % 3 + 1; return a;
    case Rule::rotation_prog: a.rotation = (a.rotation + 90 * step) % 360; return a;
    case Rule::color_seq: a.color = static_cast<Hue>((static_cast<int>(a.color) + step) % 3); return a;
    case Rule::combination: break;
    }
    throw ArgumentError("rule " + std::string(to_string(rule)) + " is not a primitive rule");
}

/// Combination pairs shape progression with the colour sequence.
inline std::vector<Rule> expand_rules(const std::vector<Rule>& selection) {
    if (selection.empty()) throw ArgumentError("rpm rule selection is empty");
    std::vector<Rule> out;
    for (Rule r : selection) {
        if (r == Rule::combination) {
            out.push_back(Rule::shape_prog);
            out.push_back(Rule::color_seq);
        } else {
            out.push_back(r);
        }
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    // Squares and circles look the same after a quarter turn, so a rotation
    // progression is only legible on a row of triangles.
    if (std::count(out.begin(), out.end(), Rule::rotation_prog) && std::count(out.begin(), out.end(), Rule::shape_prog))
        throw ArgumentError("rotation_prog cannot be combined with shape_prog");
    return out;
}

inline CellAttrs apply_rules(CellAttrs a, const std::vector<Rule>& active, int step) {
    for (Rule r : active) a = apply_rule(a, r, step);
    return a;
}

struct RpmSpec {
    std::vector<Rule> rules;  ///< as selected
    std::vector<Rule> active; ///< primitive rules after expansion
    std::array<std::array<CellAttrs, 3>, 3> grid{};
    CellAttrs answer;

    friend bool operator==(const RpmSpec&, const RpmSpec&) = default;
};

/// A candidate completes a row if every ruled attribute advances by one
/// step per column and every other attribute stays fixed.
inline bool completes_row(const std::vector<Rule>& active, const CellAttrs& c0, const CellAttrs& c1, const CellAttrs& c2) {
    for (const CellAttrs* next : {&c1, &c2})
        if (!attrs_valid(*next)) return false;
    return apply_rules(c0, active, 1) == c1 && apply_rules(c0, active, 2) == c2;
}

inline std::vector<CellAttrs> valid_completions(const RpmSpec& spec) {
    std::vector<CellAttrs> out;
    for (const auto& cand : attribute_domain())
        if (completes_row(spec.active, spec.grid[2][0], spec.grid[2][1], cand)) out.push_back(cand);
    return out;
}

inline CellAttrs random_attrs(Rng& rng) {
    CellAttrs a;
    a.shape = kShapes[rng.below(3)];
    a.count = static_cast<int>(rng.uniform_int(1, 3));
    a.rotation = kRotations[rng.below(4)];
    a.color = kHues[rng.below(3)];
    return a;
}

inline RpmSpec gen_rpm(const std::vector<Rule>& selection, Rng& rng) {
    RpmSpec spec;
    spec.rules = selection;
    spec.active = expand_rules(selection);
    const bool rotating = std::count(spec.active.begin(), spec.active.end(), Rule::rotation_prog) > 0;
    for (int attempt = 0; attempt < 100; ++attempt) {
        for (auto& row : spec.grid) {
            CellAttrs start = random_attrs(rng);
            if (rotating) start.shape = Shape::triangle;
            for (int step = 0; step < 3; ++step) row[static_cast<std::size_t>(step)] = apply_rules(start, spec.active, step);
        }
        spec.answer = spec.grid[2][2];
        const auto valid = valid_completions(spec);
        if (valid.size() == 1 && valid.front() == spec.answer) return spec;
    }
    throw GenerationError("could not generate an unambiguous rpm grid");
}

inline RpmSpec gen_rpm(const std::vector<Rule>& selection, std::uint64_t seed) {
    Rng rng(seed, "rpm");
    return gen_rpm(selection, rng);
}

// ---------------------------------------------------------------------------
// Rendering

struct RpmLayout {
    static constexpr int tile = 150;
    static constexpr int size = 3 * tile;
    static constexpr double radius = 26.0;
};

inline raster::Rgb hue_rgb(Hue h) {
    switch (h) {
    case Hue::red: return raster::colors::red;
    case Hue::blue: return raster::colors::blue;
    case Hue::green: return raster::colors::green;
    }
    return raster::colors::black;
}

inline constexpr raster::Rgb kGridLine{170, 170, 170};
inline constexpr raster::Rgb kEmptyOutline{60, 60, 60};
inline constexpr raster::Rgb kEmptyFill{225, 225, 225};

inline std::vector<raster::Point2> count_layout(int count) {
    switch (count) {
    case 1: return {{75, 75}};
    case 2: return {{45, 75}, {105, 75}};
    default: return {{75, 45}, {45, 105}, {105, 105}};
    }
}

/// Rotation is clockwise on screen; a triangle at 0 degrees points up.
inline void draw_shape(raster::Image& img, Shape shape, double cx, double cy, int rotation, raster::Rgb color) {
    const double r = RpmLayout::radius;
    const double base = rotation * std::numbers::pi / 180.0;
    switch (shape) {
    case Shape::circle:
        raster::fill_circle(img, static_cast<int>(cx), static_cast<int>(cy), static_cast<int>(r * 0.85), color);
        return;
    case Shape::triangle: {
        std::array<raster::Point2, 3> p;
        for (int k = 0; k < 3; ++k) {
            const double a = base - std::numbers::pi / 2 + k * 2 * std::numbers::pi / 3;
            p[static_cast<std::size_t>(k)] = {cx + r * std::cos(a), cy + r * std::sin(a)};
        }
        raster::fill_polygon(img, p, color);
        return;
    }
    case Shape::square: {
        std::array<raster::Point2, 4> p;
        for (int k = 0; k < 4; ++k) {
            const double a = base + std::numbers::pi / 4 + k * std::numbers::pi / 2;
            p[static_cast<std::size_t>(k)] = {cx + r * 0.8 * std::cos(a), cy + r * 0.8 * std::sin(a)};
        }
        raster::fill_polygon(img, p, color);
        return;
    }
    }
}

inline void draw_cell(raster::Image& img, const CellAttrs& a, int tile_x, int tile_y) {
    for (auto p : count_layout(a.count)) draw_shape(img, a.shape, tile_x + p.x, tile_y + p.y, a.rotation, hue_rgb(a.color));
}

inline raster::Image render_rpm(const RpmSpec& spec, bool with_answer) {
    using L = RpmLayout;
    raster::Image img(L::size, L::size, raster::colors::white);
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) {
            if (r == 2 && c == 2) continue;
            draw_cell(img, spec.grid[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)], c * L::tile, r * L::tile);
        }
    if (with_answer) draw_cell(img, spec.answer, 2 * L::tile, 2 * L::tile);
    else {
        raster::fill_rect(img, 2 * L::tile + 12, 2 * L::tile + 12, L::tile - 24, L::tile - 24, kEmptyFill);
        raster::stroke_rect(img, 2 * L::tile + 12, 2 * L::tile + 12, L::tile - 24, L::tile - 24, 3, kEmptyOutline);
    }
    for (int i = 1; i < 3; ++i) {
        raster::fill_rect(img, i * L::tile - 1, 0, 2, L::size, kGridLine);
        raster::fill_rect(img, 0, i * L::tile - 1, L::size, 2, kGridLine);
    }
    return img;
}

inline Json attrs_json(const CellAttrs& a) {
    return {{"shape", to_string(a.shape)}, {"count", a.count}, {"rotation", a.rotation}, {"color", to_string(a.color)}};
}

inline std::string rpm_prompt() {
    return "This is a 3x3 pattern matrix. Each row follows the same rule from left to right. "
           "Work out the rule and fill the empty bottom-right cell with the figure that completes the pattern.";
}

inline TaskUnit make_rpm_task(const RpmSpec& spec, std::uint64_t seed, std::uint64_t index = 0) {
    TaskUnit t;
    t.domain = Domain::rpm;
    t.seed = seed;
    t.index = index;
    t.id = make_task_id(t.domain, seed, index);
    t.first_frame = render_rpm(spec, false);
    t.final_frame = render_rpm(spec, true);
    t.prompt = rpm_prompt();
    Json rules = Json::array(), active = Json::array(), grid = Json::array();
    for (Rule r : spec.rules) rules.push_back(to_string(r));
    for (Rule r : spec.active) active.push_back(to_string(r));
    for (const auto& row : spec.grid) {
        Json jr = Json::array();
        for (const auto& c : row) jr.push_back(attrs_json(c));
        grid.push_back(jr);
    }
    t.ground_truth = {{"rules", rules}, {"active_rules", active}, {"grid", grid}, {"answer", attrs_json(spec.answer)}};
    return t;
}

/// Task index cycles through the five rule categories.
inline Rule rule_for_index(std::uint64_t index) { return kAllRules[index % kAllRules.size()]; }

inline TaskUnit generate_rpm_task(std::uint64_t seed, std::uint64_t index) {
    Rng rng(seed, "rpm", index);
    return make_rpm_task(gen_rpm({rule_for_index(index)}, rng), seed, index);
}

} // namespace vmeval::rpm
