#pragma once

// Minimal RIFF/AVI container: one video stream whose frames are PNG
// images ('MPNG' fourcc, '00dc' chunks). The reader also accepts
// uncompressed 24-bit DIB frames so that simple third-party AVIs work.

#include <algorithm>
#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "../error.hpp"
#include "../raster/image.hpp"
#include "../raster/png.hpp"

namespace vmeval::pipeline {

namespace avi {

inline void put_u16(std::vector<std::uint8_t>& b, std::uint16_t v) {
    b.push_back(static_cast<std::uint8_t>(v));
    b.push_back(static_cast<std::uint8_t>(v >> 8));
}

inline void put_u32(std::vector<std::uint8_t>& b, std::uint32_t v) {
    for (int s = 0; s < 32; s += 8) b.push_back(static_cast<std::uint8_t>(v >> s));
}

inline void put_fourcc(std::vector<std::uint8_t>& b, std::string_view f) { b.insert(b.end(), f.begin(), f.begin() + 4); }

inline std::uint32_t get_u32(std::span<const std::uint8_t> b, std::size_t at) {
    if (at + 4 > b.size()) throw ParseError("video truncated at byte " + std::to_string(b.size()));
    return std::uint32_t{b[at]} | std::uint32_t{b[at + 1]} << 8 | std::uint32_t{b[at + 2]} << 16 |
           std::uint32_t{b[at + 3]} << 24;
}

inline std::string get_fourcc(std::span<const std::uint8_t> b, std::size_t at) {
    if (at + 4 > b.size()) throw ParseError("video truncated at byte " + std::to_string(b.size()));
    return std::string(reinterpret_cast<const char*>(b.data() + at), 4);
}

/// Appends a chunk and returns the offset of its fourcc.
inline std::size_t put_chunk(std::vector<std::uint8_t>& b, std::string_view id, std::span<const std::uint8_t> data) {
    const std::size_t at = b.size();
    put_fourcc(b, id);
    put_u32(b, static_cast<std::uint32_t>(data.size()));
    b.insert(b.end(), data.begin(), data.end());
    if (data.size() % 2) b.push_back(0);
    return at;
}

/// Starts a LIST and returns the offset of its size field.
inline std::size_t begin_list(std::vector<std::uint8_t>& b, std::string_view type) {
    put_fourcc(b, "LIST");
    const std::size_t size_at = b.size();
    put_u32(b, 0);
    put_fourcc(b, type);
    return size_at;
}

inline void end_list(std::vector<std::uint8_t>& b, std::size_t size_at) {
    const auto size = static_cast<std::uint32_t>(b.size() - size_at - 4);
    for (int k = 0; k < 4; ++k) b[size_at + static_cast<std::size_t>(k)] = static_cast<std::uint8_t>(size >> (8 * k));
}

} // namespace avi

inline std::vector<std::uint8_t> write_avi(const std::vector<raster::Image>& frames, int fps = 8) {
    if (frames.empty()) throw ArgumentError("a video needs at least one frame");
    if (fps <= 0) throw ArgumentError("fps must be positive");
    const int w = frames.front().width(), h = frames.front().height();
    std::vector<std::vector<std::uint8_t>> encoded;
    std::uint32_t largest = 0;
    for (const auto& f : frames) {
        if (f.width() != w || f.height() != h) throw ArgumentError("all video frames must share one size");
        encoded.push_back(raster::encode_png(f));
        largest = std::max(largest, static_cast<std::uint32_t>(encoded.back().size()));
    }
    const auto n = static_cast<std::uint32_t>(frames.size());

    std::vector<std::uint8_t> b;
    avi::put_fourcc(b, "RIFF");
    avi::put_u32(b, 0);
    avi::put_fourcc(b, "AVI ");

    const std::size_t hdrl = avi::begin_list(b, "hdrl");
    std::vector<std::uint8_t> avih;
    avi::put_u32(avih, static_cast<std::uint32_t>(1000000 / fps));
    avi::put_u32(avih, 0);
    avi::put_u32(avih, 0);
    avi::put_u32(avih, 0x10); // has index
    avi::put_u32(avih, n);
    avi::put_u32(avih, 0);
    avi::put_u32(avih, 1);
    avi::put_u32(avih, largest);
    avi::put_u32(avih, static_cast<std::uint32_t>(w));
    avi::put_u32(avih, static_cast<std::uint32_t>(h));
    for (int k = 0; k < 4; ++k) avi::put_u32(avih, 0);
    avi::put_chunk(b, "avih", avih);

    const std::size_t strl = avi::begin_list(b, "strl");
    std::vector<std::uint8_t> strh;
    avi::put_fourcc(strh, "vids");
    avi::put_fourcc(strh, "MPNG");
    avi::put_u32(strh, 0);
    avi::put_u16(strh, 0);
    avi::put_u16(strh, 0);
    avi::put_u32(strh, 0);
    avi::put_u32(strh, 1);
    avi::put_u32(strh, static_cast<std::uint32_t>(fps));
    avi::put_u32(strh, 0);
    avi::put_u32(strh, n);
    avi::put_u32(strh, largest);
    avi::put_u32(strh, 0xffffffffu);
    avi::put_u32(strh, 0);
    avi::put_u16(strh, 0);
    avi::put_u16(strh, 0);
    avi::put_u16(strh, static_cast<std::uint16_t>(w));
    avi::put_u16(strh, static_cast<std::uint16_t>(h));
    avi::put_chunk(b, "strh", strh);
    std::vector<std::uint8_t> strf;
    avi::put_u32(strf, 40);
    avi::put_u32(strf, static_cast<std::uint32_t>(w));
    avi::put_u32(strf, static_cast<std::uint32_t>(h));
    avi::put_u16(strf, 1);
    avi::put_u16(strf, 24);
    avi::put_fourcc(strf, "MPNG");
    avi::put_u32(strf, static_cast<std::uint32_t>(w * h * 3));
    for (int k = 0; k < 4; ++k) avi::put_u32(strf, 0);
    avi::put_chunk(b, "strf", strf);
    avi::end_list(b, strl);
    avi::end_list(b, hdrl);

    const std::size_t movi = avi::begin_list(b, "movi");
    const std::size_t movi_fourcc = movi + 4;
    std::vector<std::uint8_t> idx;
    for (const auto& png : encoded) {
        const std::size_t at = avi::put_chunk(b, "00dc", png);
        avi::put_fourcc(idx, "00dc");
        avi::put_u32(idx, 0x10); // keyframe
        avi::put_u32(idx, static_cast<std::uint32_t>(at - movi_fourcc));
        avi::put_u32(idx, static_cast<std::uint32_t>(png.size()));
    }
    avi::end_list(b, movi);
    avi::put_chunk(b, "idx1", idx);
    avi::end_list(b, 4); // the RIFF size field sits at offset 4
    return b;
}

namespace avi {

struct StreamFormat {
    int width = 0;
    int height = 0;
    std::string compression;
    int bit_count = 0;
};

inline raster::Image decode_dib(std::span<const std::uint8_t> data, const StreamFormat& fmt) {
    if (fmt.bit_count != 24 || fmt.width <= 0 || fmt.height == 0)
        throw ParseError("unsupported uncompressed video frame format");
    const int w = fmt.width, h = fmt.height < 0 ? -fmt.height : fmt.height;
    const std::size_t stride = (static_cast<std::size_t>(w) * 3 + 3) / 4 * 4;
    if (data.size() < stride * static_cast<std::size_t>(h)) throw ParseError("uncompressed video frame is truncated");
    raster::Image img(w, h);
    for (int y = 0; y < h; ++y) {
        const int src_row = fmt.height > 0 ? h - 1 - y : y;
        const std::uint8_t* row = data.data() + stride * static_cast<std::size_t>(src_row);
        for (int x = 0; x < w; ++x) img.set(x, y, {row[3 * x + 2], row[3 * x + 1], row[3 * x]});
    }
    return img;
}

inline void walk(std::span<const std::uint8_t> b, std::size_t begin, std::size_t end, StreamFormat& fmt,
                 std::vector<std::span<const std::uint8_t>>& frames, std::vector<bool>& compressed) {
    std::size_t at = begin;
    while (at + 8 <= end) {
        const std::string id = get_fourcc(b, at);
        const std::uint32_t size = get_u32(b, at + 4);
        const std::size_t data = at + 8;
        if (data + size > end) throw ParseError("video chunk '" + id + "' runs past the end of its container");
        if (id == "LIST" || id == "RIFF") {
            walk(b, data + 4, data + size, fmt, frames, compressed);
        } else if (id == "strf" && size >= 20) {
            fmt.width = static_cast<int>(get_u32(b, data + 4));
            fmt.height = static_cast<std::int32_t>(get_u32(b, data + 8));
            fmt.bit_count = b[data + 14] | b[data + 15] << 8;
            fmt.compression = get_u32(b, data + 16) == 0 ? std::string("\0\0\0\0", 4) : get_fourcc(b, data + 16);
        } else if (id.size() == 4 && (id.substr(2) == "dc" || id.substr(2) == "db")) {
            frames.push_back(b.subspan(data, size));
            compressed.push_back(id.substr(2) == "dc");
        }
        at = data + size + (size % 2);
    }
}

} // namespace avi

/// All frames of an AVI file, in stream order.
inline std::vector<raster::Image> read_avi(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 12 || avi::get_fourcc(bytes, 0) != "RIFF" || avi::get_fourcc(bytes, 8) != "AVI ")
        throw ParseError("not an AVI file");
    const std::uint32_t riff_size = avi::get_u32(bytes, 4);
    if (std::size_t{riff_size} + 8 > bytes.size())
        throw ParseError("video truncated: header declares " + std::to_string(riff_size + 8) + " bytes, file has " +
                         std::to_string(bytes.size()));
    avi::StreamFormat fmt;
    std::vector<std::span<const std::uint8_t>> chunks;
    std::vector<bool> compressed;
    avi::walk(bytes, 12, std::size_t{riff_size} + 8, fmt, chunks, compressed);
    std::vector<raster::Image> frames;
    for (std::size_t i = 0; i < chunks.size(); ++i) {
        const auto c = chunks[i];
        if (c.size() >= 8 && std::equal(raster::kPngSignature.begin(), raster::kPngSignature.end(), c.begin())) {
            frames.push_back(raster::decode_png(c));
        } else if (!compressed[i] || fmt.compression == std::string("\0\0\0\0", 4)) {
            frames.push_back(avi::decode_dib(c, fmt));
        } else {
            throw ParseError("unsupported video codec '" + fmt.compression + "'");
        }
    }
    return frames;
}

inline bool looks_like_avi(std::span<const std::uint8_t> bytes) {
    return bytes.size() >= 12 && std::memcmp(bytes.data(), "RIFF", 4) == 0 && std::memcmp(bytes.data() + 8, "AVI ", 4) == 0;
}

} // namespace vmeval::pipeline
