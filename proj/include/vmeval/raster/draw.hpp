#pragma once

// Aliasing-free 2D primitives. Coverage is decided by pixel centres, so
// the same call sequence always produces the same bytes.

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "font.hpp"
#include "image.hpp"

namespace vmeval::raster {

struct Point2 {
    double x = 0;
    double y = 0;
};

inline void fill_rect(Image& img, int x, int y, int w, int h, Rgb color) {
    const int x0 = std::max(x, 0);
    const int y0 = std::max(y, 0);
    const int x1 = std::min(x + w, img.width());
    const int y1 = std::min(y + h, img.height());
    for (int yy = y0; yy < y1; ++yy)
        for (int xx = x0; xx < x1; ++xx) img.set(xx, yy, color);
}

/// Rectangle outline of the given stroke width, drawn inside the rectangle.
inline void stroke_rect(Image& img, int x, int y, int w, int h, int thickness, Rgb color) {
    fill_rect(img, x, y, w, thickness, color);
    fill_rect(img, x, y + h - thickness, w, thickness, color);
    fill_rect(img, x, y, thickness, h, color);
    fill_rect(img, x + w - thickness, y, thickness, h, color);
}

/// Bresenham line with a square brush. Endpoints are put in a canonical
/// order first, so swapping them yields the identical pixel set.
inline void draw_line(Image& img, int x0, int y0, int x1, int y1, Rgb color, int thickness = 1) {
    if (std::pair(x1, y1) < std::pair(x0, y0)) {
        std::swap(x0, x1);
        std::swap(y0, y1);
    }
    const int lo = -(thickness - 1) / 2;
    const int hi = thickness / 2;
    auto plot = [&](int x, int y) {
        for (int dy = lo; dy <= hi; ++dy)
            for (int dx = lo; dx <= hi; ++dx) img.set(x + dx, y + dy, color);
    };
    const int dx = std::abs(x1 - x0);
    const int dy = -std::abs(y1 - y0);
    const int sx = x0 < x1 ? 1 : -1;
    const int sy = y0 < y1 ? 1 : -1;
    int err = dx + dy;
    for (;;) {
        plot(x0, y0);
        if (x0 == x1 && y0 == y1) break;
        const int e2 = 2 * err;
        if (e2 >= dy) {
            err += dy;
            x0 += sx;
        }
        if (e2 <= dx) {
            err += dx;
            y0 += sy;
        }
    }
}

/// Every pixel within integer radius r of (cx, cy); r = 0 sets one pixel.
inline void fill_circle(Image& img, int cx, int cy, int r, Rgb color) {
    if (r < 0) return;
    const long long r2 = static_cast<long long>(r) * r;
    for (int dy = -r; dy <= r; ++dy)
        for (int dx = -r; dx <= r; ++dx)
            if (static_cast<long long>(dx) * dx + static_cast<long long>(dy) * dy <= r2) img.set(cx + dx, cy + dy, color);
}

/// Annulus between radius r - thickness (exclusive) and r (inclusive).
inline void stroke_circle(Image& img, int cx, int cy, int r, int thickness, Rgb color) {
    const long long outer = static_cast<long long>(r) * r;
    const long long inner_r = r - thickness;
    const long long inner = inner_r < 0 ? -1 : inner_r * inner_r;
    for (int dy = -r; dy <= r; ++dy)
        for (int dx = -r; dx <= r; ++dx) {
            const long long d = static_cast<long long>(dx) * dx + static_cast<long long>(dy) * dy;
            if (d <= outer && d > inner) img.set(cx + dx, cy + dy, color);
        }
}

/// Even-odd scanline fill sampled at pixel centres. Fewer than three
/// vertices or zero area draws nothing.
inline void fill_polygon(Image& img, std::span<const Point2> poly, Rgb color) {
    if (poly.size() < 3) return;
    double ymin = poly[0].y, ymax = poly[0].y;
    for (const auto& p : poly) {
        ymin = std::min(ymin, p.y);
        ymax = std::max(ymax, p.y);
    }
    const int row0 = std::max(0, static_cast<int>(std::floor(ymin)));
    const int row1 = std::min(img.height() - 1, static_cast<int>(std::ceil(ymax)));
    std::vector<double> xs;
    for (int y = row0; y <= row1; ++y) {
        const double yc = y + 0.5;
        xs.clear();
        for (std::size_t i = 0; i < poly.size(); ++i) {
            const Point2 a = poly[i];
            const Point2 b = poly[(i + 1) % poly.size()];
            if ((a.y <= yc && yc < b.y) || (b.y <= yc && yc < a.y)) {
                xs.push_back(a.x + (yc - a.y) * (b.x - a.x) / (b.y - a.y));
            }
        }
        std::sort(xs.begin(), xs.end());
        for (std::size_t k = 0; k + 1 < xs.size(); k += 2) {
            const int xa = static_cast<int>(std::ceil(xs[k] - 0.5));
            const int xb = static_cast<int>(std::ceil(xs[k + 1] - 0.5));
            for (int x = std::max(xa, 0); x < std::min(xb, img.width()); ++x) img.set(x, y, color);
        }
    }
}

inline void stroke_polygon(Image& img, std::span<const Point2> poly, Rgb color, int thickness = 1) {
    for (std::size_t i = 0; i < poly.size(); ++i) {
        const Point2 a = poly[i];
        const Point2 b = poly[(i + 1) % poly.size()];
        draw_line(img, static_cast<int>(std::lround(a.x)), static_cast<int>(std::lround(a.y)),
                  static_cast<int>(std::lround(b.x)), static_cast<int>(std::lround(b.y)), color, thickness);
    }
}

enum class Anchor { top_left, center };

struct TextStyle {
    int size = 16; ///< glyph cap height in pixels
    Rgb color = colors::black;
    bool bold = false;
    Anchor anchor = Anchor::top_left;
};

struct TextMetrics {
    int glyph_width = 0;
    int spacing = 0;
    int bold_px = 0;
    int width = 0;
    int height = 0;
};

inline TextMetrics measure_text(std::string_view text, const TextStyle& style) {
    TextMetrics m;
    m.height = style.size;
    m.glyph_width = std::max(1, static_cast<int>(std::lround(style.size * kGlyphCols / double(kGlyphRows))));
    m.spacing = std::max(1, static_cast<int>(std::lround(style.size / double(kGlyphRows))));
    m.bold_px = style.bold ? std::max(1, style.size / 10) : 0;
    const int n = static_cast<int>(text.size());
    m.width = n == 0 ? 0 : n * (m.glyph_width + m.bold_px) + (n - 1) * m.spacing;
    return m;
}

/// Renders text from the embedded glyph table; throws ArgumentError naming
/// every character not in the table.
inline void draw_text(Image& img, std::string_view text, int x, int y, const TextStyle& style) {
    std::string missing;
    for (char c : text) {
        if (!find_glyph(c) && missing.find(c) == std::string::npos) missing.push_back(c);
    }
    if (!missing.empty()) throw ArgumentError("unsupported glyph(s): \"" + missing + "\"");
    if (style.size <= 0) throw ArgumentError("text size must be positive");

    const TextMetrics m = measure_text(text, style);
    if (style.anchor == Anchor::center) {
        x -= m.width / 2;
        y -= m.height / 2;
    }
    int pen = x;
    for (char c : text) {
        const GlyphBitmap g = *find_glyph(c);
        for (int py = 0; py < m.height; ++py) {
            const int row = py * kGlyphRows / m.height;
            for (int px = 0; px < m.glyph_width; ++px) {
                const int col = px * kGlyphCols / m.glyph_width;
                if (g[static_cast<std::size_t>(row)] & (0x10 >> col)) {
                    for (int b = 0; b <= m.bold_px; ++b) img.set(pen + px + b, y + py, style.color);
                }
            }
        }
        pen += m.glyph_width + m.bold_px + m.spacing;
    }
}

} // namespace vmeval::raster
