#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <numeric>
#include <span>
#include <vector>

#include "draw.hpp"

namespace vmeval::raster {

struct Vec3 {
    double x = 0;
    double y = 0;
    double z = 0;

    friend constexpr Vec3 operator+(Vec3 a, Vec3 b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
    friend constexpr Vec3 operator-(Vec3 a, Vec3 b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
    friend constexpr Vec3 operator*(double s, Vec3 a) { return {s * a.x, s * a.y, s * a.z}; }
    friend constexpr bool operator==(Vec3, Vec3) = default;
};

inline constexpr double dot(Vec3 a, Vec3 b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
inline constexpr Vec3 cross(Vec3 a, Vec3 b) {
    return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
inline double norm(Vec3 a) { return std::sqrt(dot(a, a)); }
inline Vec3 normalized(Vec3 a) { return (1.0 / norm(a)) * a; }

inline double normalize_azimuth(double deg) {
    double a = std::fmod(deg, 360.0);
    if (a < 0) a += 360.0;
    if (a >= 360.0) a = 0.0;
    return a;
}

/// Orbit camera looking at the origin with +z up.
class CameraPose {
public:
    CameraPose(double elevation_deg, double azimuth_deg, double distance)
        : elevation_(elevation_deg), azimuth_(normalize_azimuth(azimuth_deg)), distance_(distance) {
        if (!(elevation_deg >= 0.0 && elevation_deg < 90.0))
            throw ArgumentError("camera elevation must be in [0, 90) degrees");
        if (!(distance > 0.0)) throw ArgumentError("camera distance must be positive");
    }

    double elevation_deg() const noexcept { return elevation_; }
    double azimuth_deg() const noexcept { return azimuth_; }
    double distance() const noexcept { return distance_; }

    Vec3 position() const {
        const double e = elevation_ * std::numbers::pi / 180.0;
        const double a = azimuth_ * std::numbers::pi / 180.0;
        return {distance_ * std::cos(e) * std::cos(a), distance_ * std::cos(e) * std::sin(a), distance_ * std::sin(e)};
    }

private:
    double elevation_;
    double azimuth_;
    double distance_;
};

/// Camera-space basis: right, up, forward (towards the origin).
struct ViewBasis {
    Vec3 eye;
    Vec3 right;
    Vec3 up;
    Vec3 forward;
};

inline ViewBasis view_basis(const CameraPose& cam) {
    ViewBasis v;
    v.eye = cam.position();
    v.forward = normalized(Vec3{} - v.eye);
    v.right = normalized(cross(v.forward, Vec3{0, 0, 1}));
    v.up = cross(v.right, v.forward);
    return v;
}

struct Viewport {
    int width = 0;
    int height = 0;
    double focal = 2.0; ///< image-plane distance in units of half the shorter side
};

struct Projected {
    Point2 screen;
    double depth = 0; ///< distance along the view axis
};

/// Look-at perspective projection with equal x/y scale. Throws
/// InvariantError when the point is not in front of the camera.
inline Projected project_point(Vec3 p, const CameraPose& cam, const Viewport& vp) {
    const ViewBasis v = view_basis(cam);
    const Vec3 rel = p - v.eye;
    const double depth = dot(rel, v.forward);
    if (!(depth > 1e-9)) throw InvariantError("point is behind the camera");
    const double scale = vp.focal * std::min(vp.width, vp.height) / 2.0;
    const double sx = dot(rel, v.right) / depth * scale;
    const double sy = dot(rel, v.up) / depth * scale;
    return {{vp.width / 2.0 + sx, vp.height / 2.0 - sy}, depth};
}

struct Face {
    std::array<Point2, 4> quad;
    double depth_key = 0;
    Rgb fill;
    Rgb edge;
};

/// Painter's algorithm: faces are painted far to near, ties keep input
/// order, and each face is outlined with its edge colour. Degenerate
/// quads are skipped.
inline void render_faces(std::span<const Face> faces, Image& canvas, int edge_thickness = 2) {
    std::vector<std::size_t> order(faces.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return faces[a].depth_key > faces[b].depth_key; });
    for (std::size_t i : order) {
        const Face& f = faces[i];
        double twice_area = 0;
        for (std::size_t k = 0; k < f.quad.size(); ++k) {
            const Point2 a = f.quad[k];
            const Point2 b = f.quad[(k + 1) % f.quad.size()];
            twice_area += a.x * b.y - b.x * a.y;
        }
        if (!std::isfinite(f.depth_key) || std::abs(twice_area) < 1e-9) continue;
        fill_polygon(canvas, f.quad, f.fill);
        if (edge_thickness > 0) stroke_polygon(canvas, f.quad, f.edge, edge_thickness);
    }
}

} // namespace vmeval::raster
