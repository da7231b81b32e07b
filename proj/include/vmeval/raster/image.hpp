#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "../error.hpp"

namespace vmeval::raster {

struct Rgb {
    std::uint8_t r = 0;
    std::uint8_t g = 0;
    std::uint8_t b = 0;

    friend constexpr bool operator==(Rgb, Rgb) = default;
};

namespace colors {
inline constexpr Rgb white{255, 255, 255};
inline constexpr Rgb black{0, 0, 0};
inline constexpr Rgb neutral_gray{128, 128, 128};
inline constexpr Rgb light_gray{230, 230, 230};
inline constexpr Rgb red{220, 30, 30};
inline constexpr Rgb green{30, 170, 60};
inline constexpr Rgb blue{40, 80, 220};
} // namespace colors

/// Row-major RGB8 canvas. Every write is bounds-checked and silently
/// clipped, so drawing code never needs to reason about the edges.
class Image {
public:
    Image() = default;

    Image(int width, int height, Rgb fill = colors::white) : width_(width), height_(height) {
        if (width <= 0 || height <= 0) {
            throw ArgumentError("canvas dimensions must be positive, got " + std::to_string(width) + "x" +
                                std::to_string(height));
        }
        pixels_.resize(static_cast<std::size_t>(width) * static_cast<std::size_t>(height) * 3);
        for (std::size_t i = 0; i < pixels_.size(); i += 3) {
            pixels_[i] = fill.r;
            pixels_[i + 1] = fill.g;
            pixels_[i + 2] = fill.b;
        }
    }

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    bool empty() const noexcept { return pixels_.empty(); }

    bool contains(int x, int y) const noexcept { return x >= 0 && y >= 0 && x < width_ && y < height_; }

    Rgb at(int x, int y) const {
        if (!contains(x, y)) throw ArgumentError("pixel out of range");
        const auto i = offset(x, y);
        return {pixels_[i], pixels_[i + 1], pixels_[i + 2]};
    }

    void set(int x, int y, Rgb c) noexcept {
        if (!contains(x, y)) return;
        const auto i = offset(x, y);
        pixels_[i] = c.r;
        pixels_[i + 1] = c.g;
        pixels_[i + 2] = c.b;
    }

    std::span<const std::uint8_t> bytes() const noexcept { return pixels_; }
    std::span<std::uint8_t> bytes() noexcept { return pixels_; }

    friend bool operator==(const Image&, const Image&) = default;

private:
    std::size_t offset(int x, int y) const noexcept {
        return (static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x)) * 3;
    }

    int width_ = 0;
    int height_ = 0;
    std::vector<std::uint8_t> pixels_;
};

inline Image new_canvas(int width, int height, Rgb fill) { return Image(width, height, fill); }

/// Number of pixels whose channels differ by more than `tolerance` in any channel.
inline std::size_t count_differing(const Image& a, const Image& b, int tolerance = 0) {
    if (a.width() != b.width() || a.height() != b.height()) throw ArgumentError("image dimensions differ");
    auto pa = a.bytes();
    auto pb = b.bytes();
    std::size_t n = 0;
    for (std::size_t i = 0; i < pa.size(); i += 3) {
        for (std::size_t c = 0; c < 3; ++c) {
            int d = static_cast<int>(pa[i + c]) - static_cast<int>(pb[i + c]);
            if (d > tolerance || -d > tolerance) {
                ++n;
                break;
            }
        }
    }
    return n;
}

} // namespace vmeval::raster
