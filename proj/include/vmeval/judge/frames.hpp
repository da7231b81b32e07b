#pragma once

// First, middle and last frame of a generated video.
//
// AVI files written by the mock backend are parsed natively. Anything else
// goes to the command named by VMEVAL_FRAME_DECODER, run through the shell:
//
//   $VMEVAL_FRAME_DECODER <path> count    prints the frame count in decimal
//   $VMEVAL_FRAME_DECODER <path> <index>  writes frame <index> (0-based) as PNG
//
// A non-zero exit status or unusable output is an extraction error.

#include <cstdio>
#include <cstdlib>
#include <string>
#include <vector>

#include "../error.hpp"
#include "../io.hpp"
#include "../pipeline/video.hpp"
#include "../raster/png.hpp"

namespace vmeval::judge {

inline constexpr const char* kFrameDecoderEnv = "VMEVAL_FRAME_DECODER";

class ExtractionError : public ParseError {
public:
    using ParseError::ParseError;
};

struct KeyFrames {
    raster::Image first;
    raster::Image mid;
    raster::Image last;
};

/// Frame 0, frame (n-1)/2 and frame n-1.
inline KeyFrames key_frames(const std::vector<raster::Image>& frames) {
    if (frames.empty()) throw ExtractionError("video has no frames");
    return {frames.front(), frames[(frames.size() - 1) / 2], frames.back()};
}

namespace detail {

inline std::string shell_quote(const std::string& s) {
    std::string out = "'";
    for (char c : s) {
        if (c == '\'') out += "'\\''";
        else out += c;
    }
    return out + "'";
}

inline std::string run_capture(const std::string& cmd) {
    FILE* p = ::popen(cmd.c_str(), "r");
    if (!p) throw ExtractionError("cannot start frame decoder: " + cmd);
    std::string out;
    char buf[65536];
    for (std::size_t n; (n = std::fread(buf, 1, sizeof buf, p)) > 0;) out.append(buf, n);
    const int status = ::pclose(p);
    if (status != 0) throw ExtractionError("frame decoder failed (status " + std::to_string(status) + "): " + cmd);
    return out;
}

} // namespace detail

/// Key frames through the external decoder command.
inline KeyFrames extract_with_decoder(const std::string& decoder, const fs::path& video) {
    const std::string base = decoder + " " + detail::shell_quote(video.string());
    const std::string count_text = detail::run_capture(base + " count");
    long long n = 0;
    try {
        std::size_t used = 0;
        n = std::stoll(count_text, &used);
        if (count_text.find_first_not_of(" \t\r\n", used) != std::string::npos) n = -1;
    } catch (const std::exception&) {
        n = -1;
    }
    if (n < 0) throw ExtractionError("frame decoder printed no frame count for " + video.string());
    if (n == 0) throw ExtractionError("video has no frames: " + video.string());
    auto frame = [&](long long i) {
        const std::string png = detail::run_capture(base + " " + std::to_string(i));
        try {
            return raster::decode_png(std::span(reinterpret_cast<const std::uint8_t*>(png.data()), png.size()));
        } catch (const std::exception& e) {
            throw ExtractionError("frame decoder output for frame " + std::to_string(i) + " is not a PNG: " + e.what());
        }
    };
    return {frame(0), frame((n - 1) / 2), frame(n - 1)};
}

inline KeyFrames extract_frames(const fs::path& video) {
    std::vector<std::uint8_t> bytes;
    try {
        bytes = io::read_bytes(video);
    } catch (const IoError& e) {
        throw ExtractionError(e.what());
    }
    if (pipeline::looks_like_avi(bytes)) {
        try {
            return key_frames(pipeline::read_avi(bytes));
        } catch (const ExtractionError&) {
            throw;
        } catch (const std::exception& e) {
            throw ExtractionError(video.string() + ": " + e.what());
        }
    }
    const char* decoder = std::getenv(kFrameDecoderEnv);
    if (!decoder || !*decoder)
        throw ExtractionError(video.string() + ": not a native AVI and " + kFrameDecoderEnv + " is not set");
    return extract_with_decoder(decoder, video);
}

} // namespace vmeval::judge
