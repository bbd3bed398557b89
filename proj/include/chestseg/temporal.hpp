#pragma once

// Accumulation of per-segment masks into a confidence map and the final
// recording-level segmentation.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "chestseg/grid.hpp"

namespace chestseg {

inline constexpr double kDefaultConfidence = 0.5;

/// Per-pixel count of masks in which the pixel is true.
inline Histogram accumulate(std::span<const SegmentMask> masks) {
    if (masks.empty()) throw Error("accumulate: no segment masks");
    Histogram hist(masks.front().width(), masks.front().height());
    for (std::size_t k = 0; k < masks.size(); ++k) {
        if (!masks[k].same_shape(hist)) {
            throw Error("accumulate: mask " + std::to_string(k) + " has mismatched dimensions");
        }
        for (std::size_t i = 0; i < hist.size(); ++i) hist[i] += masks[k][i] ? 1U : 0U;
    }
    return hist;
}

/// Merges two partial histograms; the merge is associative and commutative.
inline Histogram merge(const Histogram& a, const Histogram& b) {
    require_same_shape(a, b, "merge");
    Histogram out = a;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += b[i];
    return out;
}

inline ConfidenceMap to_confidence(const Histogram& hist, std::size_t total_segments) {
    std::uint32_t max_count = 0;
    for (auto c : hist.pixels()) max_count = std::max(max_count, c);
    if (total_segments == 0 || max_count > total_segments) {
        throw Error("to_confidence: total_segments (" + std::to_string(total_segments) +
                    ") must be positive and at least the largest count (" + std::to_string(max_count) + ")");
    }
    ConfidenceMap conf(hist.width(), hist.height());
    const double n = static_cast<double>(total_segments);
    for (std::size_t i = 0; i < hist.size(); ++i) conf[i] = static_cast<double>(hist[i]) / n;
    return conf;
}

inline SegmentationMask threshold_confidence(const ConfidenceMap& conf, double c) {
    if (!(c > 0.0 && c <= 1.0)) throw Error("threshold_confidence: threshold must lie in (0, 1]");
    SegmentationMask out(conf.width(), conf.height());
    for (std::size_t i = 0; i < conf.size(); ++i) out[i] = conf[i] >= c ? 1 : 0;
    return out;
}

/// Mean absolute difference between consecutive frames over the pixels not
/// excluded by `exclude` (typically the margin band) where both frames hold
/// a reading. Entry t compares frame t with frame t-1; entry 0 is 0.
inline std::vector<double> frame_motion_scores(std::span<const NormalizedFrame> frames, const Mask& exclude) {
    std::vector<double> scores(frames.size(), 0.0);
    for (std::size_t t = 1; t < frames.size(); ++t) {
        require_same_shape(frames[t], exclude, "frame_motion_scores");
        double sum = 0.0;
        std::size_t n = 0;
        for (std::size_t i = 0; i < exclude.size(); ++i) {
            if (exclude[i]) continue;
            const double a = frames[t][i];
            const double b = frames[t - 1][i];
            if (a == 0.0 || b == 0.0) continue;
            sum += std::abs(a - b);
            ++n;
        }
        scores[t] = n > 0 ? sum / static_cast<double>(n) : 0.0;
    }
    return scores;
}

/// A threshold <= 0 disables motion detection.
inline bool has_motion(std::span<const double> scores, double threshold) {
    if (threshold <= 0.0) return false;
    for (double s : scores) {
        if (s > threshold) return true;
    }
    return false;
}

}  // namespace chestseg
