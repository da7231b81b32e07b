#pragma once

// Deterministic judge: compares the last video frame with the task's
// expected final frame. A pixel differs when any channel is off by more
// than kOracleDelta; the video passes when at most kOracleTau of pixels
// differ.

#include <algorithm>
#include <cstdio>
#include <string>

#include "../pipeline/letterbox.hpp"
#include "../task.hpp"
#include "judgment.hpp"

namespace vmeval::judge {

inline constexpr int kOracleDelta = 8;
inline constexpr double kOracleTau = 0.01;
inline constexpr const char* kOracleRater = "oracle";

/// Differing pixels as a fraction of the task image area. Videos come back
/// at the model's resolution, so the expected frame is letterboxed the same
/// way the first frame was on the way in; padding pixels still count as
/// differences but not toward the area.
inline double oracle_diff_fraction(const raster::Image& expected, const raster::Image& last, int delta = kOracleDelta) {
    const pipeline::Size size{last.width(), last.height()};
    const pipeline::Size src{expected.width(), expected.height()};
    const raster::Image ref = src == size ? expected : pipeline::letterbox(expected, size);
    const pipeline::Size area = pipeline::letterbox_content(src, size);
    const double n = static_cast<double>(area.width) * area.height;
    return std::min(1.0, static_cast<double>(raster::count_differing(ref, last, delta)) / n);
}

inline Judgment judge_oracle(const TaskUnit& task, const std::string& model, const raster::Image& last_frame) {
    const double frac = oracle_diff_fraction(task.final_frame, last_frame);
    const bool pass = frac <= kOracleTau;
    char buf[160];
    std::snprintf(buf, sizeof buf, "%.4f%% of pixels differ from the expected final frame (tolerance %d, limit %.1f%%)",
                  100.0 * frac, kOracleDelta, 100.0 * kOracleTau);
    return make_judgment(task.id, model, kOracleRater, pass ? 5 : 1, buf);
}

} // namespace vmeval::judge
