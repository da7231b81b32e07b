#pragma once

#include <algorithm>
#include <cstdint>
#include <string>

#include "../error.hpp"
#include "../raster/image.hpp"

namespace vmeval::pipeline {

struct Size {
    int width = 0;
    int height = 0;
    friend constexpr bool operator==(Size, Size) = default;
};

inline constexpr raster::Rgb kLetterboxPad{128, 128, 128};

/// Scaled content size: the larger uniform scale that fits inside target.
/// Integer arithmetic only, rounded to nearest, never larger than target.
inline Size letterbox_content(Size src, Size target) {
    if (src.width <= 0 || src.height <= 0 || target.width <= 0 || target.height <= 0)
        throw ArgumentError("letterbox dimensions must be positive");
    const std::int64_t w = src.width, h = src.height, tw = target.width, th = target.height;
    Size out;
    if (tw * h <= th * w) {
        out.width = target.width;
        out.height = static_cast<int>(std::clamp<std::int64_t>((2 * h * tw + w) / (2 * w), 1, th));
    } else {
        out.height = target.height;
        out.width = static_cast<int>(std::clamp<std::int64_t>((2 * w * th + h) / (2 * h), 1, tw));
    }
    return out;
}

/// Nearest-neighbour scale into the centre of a padded canvas. An odd
/// padding remainder goes to the right or bottom edge.
inline raster::Image letterbox(const raster::Image& img, Size target, raster::Rgb pad = kLetterboxPad) {
    const Size src{img.width(), img.height()};
    const Size content = letterbox_content(src, target);
    if (content == src && src == target) return img;
    raster::Image out(target.width, target.height, pad);
    const int ox = (target.width - content.width) / 2;
    const int oy = (target.height - content.height) / 2;
    for (int y = 0; y < content.height; ++y) {
        const int sy = static_cast<int>((2LL * y + 1) * src.height / (2LL * content.height));
        for (int x = 0; x < content.width; ++x) {
            const int sx = static_cast<int>((2LL * x + 1) * src.width / (2LL * content.width));
            out.set(ox + x, oy + y, img.at(sx, sy));
        }
    }
    return out;
}

} // namespace vmeval::pipeline
