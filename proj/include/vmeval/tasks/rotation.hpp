#pragma once

// Mental-rotation tasks: a small voxel structure seen from two camera
// azimuths half a turn apart.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "../error.hpp"
#include "../raster/projection.hpp"
#include "../rng.hpp"
#include "../task.hpp"

namespace vmeval::rotation {

using Voxel = std::array<int, 3>;

struct SnakeParams {
    int n_cubes = 8;
    int l_min = 2;
    int l_max = 5;
    double p_branch = 0.2;
    int max_degree = 3;
    int retry_budget = 1000;

    void validate() const {
        if (n_cubes < 8 || n_cubes > 9) throw ArgumentError("n_cubes must be 8 or 9");
        if (l_min < 2 || l_min > l_max || l_max > 5) throw ArgumentError("segment lengths must satisfy 2 <= l_min <= l_max <= 5");
        if (!(p_branch >= 0.0 && p_branch <= 1.0)) throw ArgumentError("p_branch must be in [0, 1]");
        if (max_degree < 2) throw ArgumentError("max_degree must be at least 2");
        if (retry_budget < 1) throw ArgumentError("retry budget must be positive");
    }
};

struct VoxelStructure {
    std::vector<Voxel> cubes; ///< sorted, unique

    bool contains(const Voxel& v) const { return std::binary_search(cubes.begin(), cubes.end(), v); }
    friend bool operator==(const VoxelStructure&, const VoxelStructure&) = default;
};

inline constexpr std::array<Voxel, 6> kDirections{{{1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}, {0, 0, 1}, {0, 0, -1}}};

inline Voxel offset(const Voxel& v, const Voxel& d) { return {v[0] + d[0], v[1] + d[1], v[2] + d[2]}; }

inline int degree(const std::set<Voxel>& cubes, const Voxel& v) {
    int n = 0;
    for (const auto& d : kDirections) n += cubes.count(offset(v, d)) ? 1 : 0;
    return n;
}

inline int max_degree(const VoxelStructure& s) {
    const std::set<Voxel> set(s.cubes.begin(), s.cubes.end());
    int m = 0;
    for (const auto& v : s.cubes) m = std::max(m, degree(set, v));
    return m;
}

inline bool is_connected(const VoxelStructure& s) {
    if (s.cubes.empty()) return false;
    const std::set<Voxel> all(s.cubes.begin(), s.cubes.end());
    std::set<Voxel> seen{s.cubes.front()};
    std::vector<Voxel> stack{s.cubes.front()};
    while (!stack.empty()) {
        const Voxel v = stack.back();
        stack.pop_back();
        for (const auto& d : kDirections) {
            const Voxel n = offset(v, d);
            if (all.count(n) && seen.insert(n).second) stack.push_back(n);
        }
    }
    return seen.size() == all.size();
}

/// Number of distinct coordinates used along each axis.
inline std::array<int, 3> extents(const VoxelStructure& s) {
    std::array<int, 3> out{};
    for (int a = 0; a < 3; ++a) {
        int lo = s.cubes.front()[static_cast<std::size_t>(a)], hi = lo;
        for (const auto& v : s.cubes) {
            lo = std::min(lo, v[static_cast<std::size_t>(a)]);
            hi = std::max(hi, v[static_cast<std::size_t>(a)]);
        }
        out[static_cast<std::size_t>(a)] = hi - lo + 1;
    }
    return out;
}

inline bool spans_three_axes(const VoxelStructure& s) {
    const auto e = extents(s);
    return e[0] >= 2 && e[1] >= 2 && e[2] >= 2;
}

/// Translate so the minimum corner sits at the origin, then sort.
inline std::vector<Voxel> canonical(std::vector<Voxel> cubes) {
    if (cubes.empty()) return cubes;
    Voxel lo = cubes.front();
    for (const auto& v : cubes)
        for (std::size_t a = 0; a < 3; ++a) lo[a] = std::min(lo[a], v[a]);
    for (auto& v : cubes)
        for (std::size_t a = 0; a < 3; ++a) v[a] -= lo[a];
    std::sort(cubes.begin(), cubes.end());
    return cubes;
}

/// True when a half turn about the vertical axis maps the structure onto
/// itself, so the two task viewpoints would look the same.
inline bool is_rotation_ambiguous(const VoxelStructure& s) {
    std::vector<Voxel> turned = s.cubes;
    for (auto& v : turned) v = {-v[0], -v[1], v[2]};
    return canonical(turned) == canonical(s.cubes);
}

struct StructureCheck {
    bool count_ok = false;
    bool connected = false;
    bool spans = false;
    bool degree_ok = false;
    bool asymmetric = false;
    bool ok() const { return count_ok && connected && spans && degree_ok && asymmetric; }
};

inline StructureCheck check_structure(const VoxelStructure& s, const SnakeParams& p) {
    StructureCheck c;
    c.count_ok = static_cast<int>(s.cubes.size()) == p.n_cubes;
    if (s.cubes.empty()) return c;
    c.connected = is_connected(s);
    c.spans = spans_three_axes(s);
    c.degree_ok = max_degree(s) <= p.max_degree;
    c.asymmetric = !is_rotation_ambiguous(s);
    return c;
}

namespace detail {

struct Grower {
    const SnakeParams& p;
    Rng& rng;
    std::set<Voxel> cubes;

    bool can_place(const Voxel& q) const {
        if (cubes.count(q)) return false;
        if (degree(cubes, q) > p.max_degree) return false;
        for (const auto& d : kDirections) {
            const Voxel n = offset(q, d);
            if (cubes.count(n) && degree(cubes, n) + 1 > p.max_degree) return false;
        }
        return true;
    }

    /// Lays up to `length` cubes from `from` along `dir`; returns the new tip
    /// or nothing when blocked.
    std::optional<Voxel> segment(Voxel from, const Voxel& dir, int length) {
        for (int i = 0; i < length && static_cast<int>(cubes.size()) < p.n_cubes; ++i) {
            const Voxel q = offset(from, dir);
            if (!can_place(q)) return std::nullopt;
            cubes.insert(q);
            from = q;
        }
        return from;
    }

    Voxel turn(const Voxel& dir, const Voxel* avoid = nullptr) {
        std::vector<Voxel> options;
        for (const auto& d : kDirections) {
            const int dp = d[0] * dir[0] + d[1] * dir[1] + d[2] * dir[2];
            if (dp == 0 && (!avoid || d != *avoid)) options.push_back(d);
        }
        return options[rng.below(options.size())];
    }

    int length() { return static_cast<int>(rng.uniform_int(p.l_min, p.l_max)); }
};

inline std::optional<VoxelStructure> grow_once(const SnakeParams& p, Rng& rng) {
    Grower g{p, rng, {}};
    Voxel tip{0, 0, 0};
    g.cubes.insert(tip);
    Voxel dir = kDirections[rng.below(6)];
    // The first segment counts its starting cube.
    auto next = g.segment(tip, dir, g.length() - 1);
    if (!next) return std::nullopt;
    tip = *next;
    while (static_cast<int>(g.cubes.size()) < p.n_cubes) {
        const Voxel main_dir = g.turn(dir);
        if (rng.bernoulli(p.p_branch)) {
            const Voxel branch_dir = g.turn(dir, &main_dir);
            if (!g.segment(tip, branch_dir, g.length())) return std::nullopt;
        }
        next = g.segment(tip, main_dir, g.length());
        if (!next) return std::nullopt;
        tip = *next;
        dir = main_dir;
    }
    return VoxelStructure{{g.cubes.begin(), g.cubes.end()}};
}

} // namespace detail

/// Grows segments of random length with orthogonal turns and optional
/// side branches, retrying with fresh sub-streams until every check passes.
inline VoxelStructure gen_voxel_snake(const SnakeParams& p, Rng& rng) {
    p.validate();
    for (int attempt = 0; attempt < p.retry_budget; ++attempt) {
        Rng sub = rng.split("attempt", static_cast<std::uint64_t>(attempt));
        auto s = detail::grow_once(p, sub);
        if (s && check_structure(*s, p).ok()) return *s;
    }
    throw GenerationError("voxel snake retry budget exhausted after " + std::to_string(p.retry_budget) + " attempts");
}

inline VoxelStructure gen_voxel_snake(const SnakeParams& p, std::uint64_t seed) {
    Rng rng(seed, "rotation");
    return gen_voxel_snake(p, rng);
}

// ---------------------------------------------------------------------------
// Rendering

inline constexpr int kFrameSize = 400;
inline constexpr raster::Rgb kFaceColor{0x70, 0x70, 0xb0};
inline constexpr raster::Rgb kEdgeColor{0x30, 0x30, 0x60};
inline constexpr double kDistanceFactor = 2.5;

struct Framing {
    raster::Vec3 center;
    double radius = 0;
};

/// Bounding box centre and bounding-sphere radius over cube corners.
inline Framing framing(const VoxelStructure& s) {
    std::array<int, 3> lo{s.cubes.front()}, hi{s.cubes.front()};
    for (const auto& v : s.cubes)
        for (std::size_t a = 0; a < 3; ++a) {
            lo[a] = std::min(lo[a], v[a]);
            hi[a] = std::max(hi[a], v[a]);
        }
    Framing f;
    f.center = {(lo[0] + hi[0] + 1) / 2.0, (lo[1] + hi[1] + 1) / 2.0, (lo[2] + hi[2] + 1) / 2.0};
    for (const auto& v : s.cubes)
        for (int c = 0; c < 8; ++c) {
            const raster::Vec3 corner{v[0] + (c & 1) * 1.0, v[1] + (c >> 1 & 1) * 1.0, v[2] + (c >> 2 & 1) * 1.0};
            f.radius = std::max(f.radius, raster::norm(corner - f.center));
        }
    return f;
}

/// Exposed, camera-facing cube faces, ready for the painter.
inline std::vector<raster::Face> visible_faces(const VoxelStructure& s, const raster::CameraPose& cam,
                                               const raster::Viewport& vp, raster::Vec3 center) {
    const raster::Vec3 eye = cam.position();
    std::vector<raster::Face> faces;
    for (const auto& v : s.cubes) {
        for (std::size_t k = 0; k < kDirections.size(); ++k) {
            const Voxel& d = kDirections[k];
            if (s.contains(offset(v, d))) continue;
            const raster::Vec3 n{double(d[0]), double(d[1]), double(d[2])};
            const raster::Vec3 mid = raster::Vec3{v[0] + 0.5, v[1] + 0.5, v[2] + 0.5} + 0.5 * n - center;
            if (raster::dot(n, eye - mid) <= 0) continue;
            // Two in-face axes, ordered so the quad winds consistently.
            const std::size_t axis = k / 2;
            raster::Vec3 u{}, w{};
            (axis == 0 ? u.y : u.x) = 0.5;
            (axis == 2 ? w.y : w.z) = 0.5;
            const std::array<raster::Vec3, 4> corners{mid - u - w, mid + u - w, mid + u + w, mid - u + w};
            raster::Face f;
            for (std::size_t i = 0; i < 4; ++i) f.quad[i] = raster::project_point(corners[i], cam, vp).screen;
            f.depth_key = raster::norm(mid - eye);
            f.fill = kFaceColor;
            f.edge = kEdgeColor;
            faces.push_back(f);
        }
    }
    return faces;
}

inline raster::Image render_structure(const VoxelStructure& s, double elevation_deg, double azimuth_deg) {
    const Framing fr = framing(s);
    const raster::CameraPose cam(elevation_deg, azimuth_deg, kDistanceFactor * fr.radius);
    const raster::Viewport vp{kFrameSize, kFrameSize};
    raster::Image img(kFrameSize, kFrameSize, raster::colors::white);
    const auto faces = visible_faces(s, cam, vp, fr.center);
    raster::render_faces(faces, img, 2);
    return img;
}

struct RotationView {
    double elevation = 30;
    double azimuth = 0;
    double final_azimuth() const { return raster::normalize_azimuth(azimuth + 180.0); }
};

inline double round_centi(double v) { return std::round(v * 100.0) / 100.0; }

inline RotationView sample_view(Rng& rng) {
    RotationView v;
    v.elevation = round_centi(rng.uniform_real(20.0, 40.0));
    v.azimuth = round_centi(rng.uniform_real(0.0, 360.0));
    if (v.azimuth >= 360.0) v.azimuth = 0.0;
    return v;
}

inline const char* kRotationPrompt =
    "A 3D structure made of cubes is shown. Smoothly rotate the camera 180 degrees horizontally around the "
    "structure, keeping the same height and tilt, and end on the view from the opposite side.";

inline TaskUnit make_rotation_task(const VoxelStructure& s, const RotationView& view, std::uint64_t seed,
                                   std::uint64_t index = 0) {
    TaskUnit t;
    t.domain = Domain::rotation;
    t.seed = seed;
    t.index = index;
    t.id = make_task_id(t.domain, seed, index);
    t.first_frame = render_structure(s, view.elevation, view.azimuth);
    t.final_frame = render_structure(s, view.elevation, view.final_azimuth());
    t.prompt = kRotationPrompt;
    Json cubes = Json::array();
    for (const auto& v : s.cubes) cubes.push_back(Json(v));
    t.ground_truth = {{"cubes", cubes},
                      {"elevation", view.elevation},
                      {"azimuth_initial", view.azimuth},
                      {"azimuth_final", view.final_azimuth()}};
    return t;
}

inline TaskUnit generate_rotation_task(std::uint64_t seed, std::uint64_t index) {
    Rng rng(seed, "rotation", index);
    SnakeParams p;
    p.n_cubes = static_cast<int>(rng.uniform_int(8, 9));
    const VoxelStructure s = gen_voxel_snake(p, rng);
    const RotationView view = sample_view(rng);
    return make_rotation_task(s, view, seed, index);
}

} // namespace vmeval::rotation
