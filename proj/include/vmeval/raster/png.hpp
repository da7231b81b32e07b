#pragma once

// PNG codec for 8-bit RGB canvases. The encoder always writes filter type 0
// rows and a single IDAT compressed at a fixed zlib level, so the output
// bytes depend only on the pixels. The decoder additionally accepts
// grayscale, palette and alpha images (alpha is dropped) so frames produced
// by external tools can be read back.

#include <zlib.h>

#include <array>
#include <cstdint>
#include <cstdlib>
#include <span>
#include <string>
#include <vector>

#include "image.hpp"

namespace vmeval::raster {

inline constexpr std::array<std::uint8_t, 8> kPngSignature{0x89, 'P', 'N', 'G', 0x0d, 0x0a, 0x1a, 0x0a};

namespace detail {

inline void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>(v >> 24));
    out.push_back(static_cast<std::uint8_t>(v >> 16));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v));
}

inline std::uint32_t get_u32(std::span<const std::uint8_t> b, std::size_t at) {
    return (std::uint32_t{b[at]} << 24) | (std::uint32_t{b[at + 1]} << 16) | (std::uint32_t{b[at + 2]} << 8) |
           std::uint32_t{b[at + 3]};
}

inline void put_chunk(std::vector<std::uint8_t>& out, const char (&type)[5], std::span<const std::uint8_t> data) {
    put_u32(out, static_cast<std::uint32_t>(data.size()));
    const std::size_t crc_start = out.size();
    out.insert(out.end(), type, type + 4);
    out.insert(out.end(), data.begin(), data.end());
    const auto crc = crc32(0L, out.data() + crc_start, static_cast<uInt>(out.size() - crc_start));
    put_u32(out, static_cast<std::uint32_t>(crc));
}

inline std::uint8_t paeth(int a, int b, int c) {
    const int p = a + b - c;
    const int pa = std::abs(p - a);
    const int pb = std::abs(p - b);
    const int pc = std::abs(p - c);
    if (pa <= pb && pa <= pc) return static_cast<std::uint8_t>(a);
    if (pb <= pc) return static_cast<std::uint8_t>(b);
    return static_cast<std::uint8_t>(c);
}

} // namespace detail

inline std::vector<std::uint8_t> encode_png(const Image& img) {
    if (img.empty()) throw ArgumentError("cannot encode an empty canvas");
    const auto w = static_cast<std::size_t>(img.width());
    const auto h = static_cast<std::size_t>(img.height());
    const std::size_t stride = w * 3;

    std::vector<std::uint8_t> raw;
    raw.reserve(h * (stride + 1));
    auto px = img.bytes();
    for (std::size_t y = 0; y < h; ++y) {
        raw.push_back(0);
        raw.insert(raw.end(), px.begin() + static_cast<std::ptrdiff_t>(y * stride),
                   px.begin() + static_cast<std::ptrdiff_t>((y + 1) * stride));
    }

    uLongf zlen = compressBound(static_cast<uLong>(raw.size()));
    std::vector<std::uint8_t> z(zlen);
    if (compress2(z.data(), &zlen, raw.data(), static_cast<uLong>(raw.size()), 6) != Z_OK)
        throw IoError("zlib compression failed");
    z.resize(zlen);

    std::vector<std::uint8_t> out(kPngSignature.begin(), kPngSignature.end());
    std::vector<std::uint8_t> ihdr;
    detail::put_u32(ihdr, static_cast<std::uint32_t>(w));
    detail::put_u32(ihdr, static_cast<std::uint32_t>(h));
    ihdr.insert(ihdr.end(), {8, 2, 0, 0, 0});
    detail::put_chunk(out, "IHDR", ihdr);
    detail::put_chunk(out, "IDAT", z);
    detail::put_chunk(out, "IEND", {});
    return out;
}

inline Image decode_png(std::span<const std::uint8_t> bytes) {
    auto fail = [](const std::string& why) -> ParseError { return ParseError("malformed PNG: " + why); };
    if (bytes.size() < 8 || !std::equal(kPngSignature.begin(), kPngSignature.end(), bytes.begin()))
        throw fail("bad signature");

    std::uint32_t width = 0, height = 0;
    int color_type = -1;
    std::vector<std::uint8_t> idat;
    std::vector<Rgb> palette;
    bool seen_end = false;
    std::size_t at = 8;
    while (at < bytes.size()) {
        if (bytes.size() - at < 12) throw fail("truncated chunk header at byte " + std::to_string(at));
        const std::uint32_t len = detail::get_u32(bytes, at);
        if (len > bytes.size() - at - 12) throw fail("truncated chunk at byte " + std::to_string(at));
        const std::string type(reinterpret_cast<const char*>(bytes.data() + at + 4), 4);
        auto data = bytes.subspan(at + 8, len);
        const auto crc = crc32(0L, bytes.data() + at + 4, len + 4);
        if (static_cast<std::uint32_t>(crc) != detail::get_u32(bytes, at + 8 + len))
            throw fail("CRC mismatch in " + type + " chunk");
        if (type == "IHDR") {
            if (len != 13) throw fail("IHDR length");
            width = detail::get_u32(data, 0);
            height = detail::get_u32(data, 4);
            const int depth = data[8];
            color_type = data[9];
            if (depth != 8) throw fail("only 8-bit depth is supported");
            if (data[12] != 0) throw fail("interlaced images are not supported");
            if (color_type != 0 && color_type != 2 && color_type != 3 && color_type != 4 && color_type != 6)
                throw fail("unknown color type");
        } else if (type == "PLTE") {
            for (std::size_t i = 0; i + 2 < data.size(); i += 3) palette.push_back({data[i], data[i + 1], data[i + 2]});
        } else if (type == "IDAT") {
            idat.insert(idat.end(), data.begin(), data.end());
        } else if (type == "IEND") {
            seen_end = true;
            break;
        }
        at += 12 + len;
    }
    if (color_type < 0) throw fail("missing IHDR");
    if (!seen_end) throw fail("missing IEND");
    if (width == 0 || height == 0 || width > (1u << 15) || height > (1u << 15)) throw fail("bad dimensions");

    const std::size_t channels = color_type == 2 ? 3 : color_type == 6 ? 4 : color_type == 4 ? 2 : 1;
    const std::size_t stride = width * channels;
    std::vector<std::uint8_t> raw(height * (stride + 1));
    uLongf raw_len = static_cast<uLongf>(raw.size());
    if (uncompress(raw.data(), &raw_len, idat.data(), static_cast<uLong>(idat.size())) != Z_OK ||
        raw_len != raw.size())
        throw fail("corrupt image data");

    std::vector<std::uint8_t> prev(stride, 0), cur(stride);
    Image img(static_cast<int>(width), static_cast<int>(height));
    for (std::size_t y = 0; y < height; ++y) {
        const std::uint8_t filter = raw[y * (stride + 1)];
        const std::uint8_t* line = raw.data() + y * (stride + 1) + 1;
        for (std::size_t i = 0; i < stride; ++i) {
            const int a = i >= channels ? cur[i - channels] : 0;
            const int b = prev[i];
            const int c = i >= channels ? prev[i - channels] : 0;
            int v = line[i];
            switch (filter) {
            case 0: break;
            case 1: v += a; break;
            case 2: v += b; break;
            case 3: v += (a + b) / 2; break;
            case 4: v += detail::paeth(a, b, c); break;
            default: throw fail("unknown filter type " + std::to_string(filter));
            }
            cur[i] = static_cast<std::uint8_t>(v);
        }
        for (std::size_t x = 0; x < width; ++x) {
            const std::uint8_t* p = cur.data() + x * channels;
            Rgb c;
            if (color_type == 2 || color_type == 6) {
                c = {p[0], p[1], p[2]};
            } else if (color_type == 3) {
                if (p[0] >= palette.size()) throw fail("palette index out of range");
                c = palette[p[0]];
            } else {
                c = {p[0], p[0], p[0]};
            }
            img.set(static_cast<int>(x), static_cast<int>(y), c);
        }
        std::swap(prev, cur);
    }
    return img;
}

} // namespace vmeval::raster
