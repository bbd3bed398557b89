#pragma once

// Breathing-signal extraction from a region mask and spectral ROI quality.

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "chestseg/depth_io.hpp"
#include "chestseg/grid.hpp"
#include "chestseg/noise.hpp"
#include "chestseg/parallel.hpp"
#include "chestseg/spectral.hpp"

namespace chestseg {

struct PreprocessParams {
    double max_distance_mm = kDefaultMaxDistanceMm;
    int median_radius = kDefaultMedianRadius;

    bool operator==(const PreprocessParams&) const = default;
};

/// normalize_frame followed by inpaint_pepper.
inline NormalizedFrame preprocess_frame(const DepthFrame& frame, const PreprocessParams& p,
                                        std::size_t workers = 1) {
    return inpaint_pepper_depth(frame, p.max_distance_mm, p.median_radius, workers);
}

struct BreathingSignal {
    std::vector<double> samples;
    double fps = 0.0;
};

struct Band {
    double low_hz = 0.2;
    double high_hz = 0.33;
};

struct RoiReport {
    double dominant_freq_hz = 0.0;
    double in_band_peak_amplitude = 0.0;
    /// In-band peak magnitude over the median out-of-band (non-DC) magnitude.
    double spectral_snr = 0.0;
    std::size_t mask_area = 0;
};

namespace detail {

inline std::vector<std::size_t> mask_indices(const Mask& mask) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < mask.size(); ++i) {
        if (mask[i]) idx.push_back(i);
    }
    if (idx.empty()) throw Error("breathing signal: mask is empty");
    return idx;
}

}  // namespace detail

/// Per-frame mean over mask pixels of already preprocessed frames.
inline BreathingSignal extract_breathing_signal(std::span<const NormalizedFrame> frames, const Mask& mask,
                                                double fps) {
    const auto idx = detail::mask_indices(mask);
    BreathingSignal s;
    s.fps = fps;
    s.samples.reserve(frames.size());
    for (const auto& f : frames) {
        require_same_shape(f, mask, "extract_breathing_signal");
        double sum = 0.0;
        for (auto i : idx) sum += f[i];
        s.samples.push_back(sum / static_cast<double>(idx.size()));
    }
    return s;
}

/// Per-frame mean of the normalized, pepper-inpainted depth over the mask.
/// Only mask pixels are inpainted.
inline BreathingSignal extract_breathing_signal(const DepthSequence& seq, const Mask& mask,
                                                const PreprocessParams& p = {},
                                                std::size_t workers = default_worker_count()) {
    if (seq.length() == 0) throw Error("extract_breathing_signal: empty sequence");
    require_same_shape(seq.frames.front(), mask, "extract_breathing_signal");
    const auto idx = detail::mask_indices(mask);
    BreathingSignal s;
    s.fps = seq.fps;
    s.samples.assign(seq.length(), 0.0);
    parallel_for(seq.length(), workers, [&](std::size_t begin, std::size_t end) {
        std::vector<double> scratch;
        for (std::size_t t = begin; t < end; ++t) {
            require_same_shape(seq.frames[t], mask, "extract_breathing_signal");
            const auto norm = normalize_frame(seq.frames[t], p.max_distance_mm);
            double sum = 0.0;
            for (auto i : idx) {
                sum += inpaint_pixel(norm, i % mask.width(), i / mask.width(), p.median_radius, scratch);
            }
            s.samples[t] = sum / static_cast<double>(idx.size());
        }
    });
    return s;
}

inline RoiReport analyze_signal(const BreathingSignal& signal, const Band& band, std::size_t mask_area,
                                Window window = Window::Rect) {
    const auto spec = pixel_spectrum(signal.samples, signal.fps, window);
    const auto bins = band_bins(signal.samples.size(), signal.fps, band.low_hz, band.high_hz);
    RoiReport r;
    r.mask_area = mask_area;
    std::size_t best = bins.first;
    for (std::size_t k = bins.first; k <= bins.last; ++k) {
        if (spec.magnitudes[k] > spec.magnitudes[best]) best = k;
    }
    r.dominant_freq_hz = spec.frequencies[best];
    r.in_band_peak_amplitude = spec.magnitudes[best];
    std::vector<double> outside;
    for (std::size_t k = 1; k < spec.magnitudes.size(); ++k) {
        if (!bins.contains(k)) outside.push_back(spec.magnitudes[k]);
    }
    if (outside.empty()) {
        r.spectral_snr = std::numeric_limits<double>::infinity();
        return r;
    }
    const double floor = detail::median_in_place(outside);
    r.spectral_snr = floor > 0.0 ? r.in_band_peak_amplitude / floor
                                 : (r.in_band_peak_amplitude > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
    return r;
}

inline RoiReport analyze_roi(const DepthSequence& seq, const Mask& mask, const Band& band,
                             const PreprocessParams& p = {}, std::size_t workers = default_worker_count()) {
    return analyze_signal(extract_breathing_signal(seq, mask, p, workers), band, count_true(mask));
}

struct Rect {
    long x = 0;
    long y = 0;
    long w = 0;
    long h = 0;
};

inline Mask manual_rectangle_mask(std::size_t width, std::size_t height, const Rect& r) {
    if (r.w < 1 || r.h < 1) throw Error("manual_rectangle_mask: width and height must be >= 1");
    if (r.x < 0 || r.y < 0 || static_cast<std::size_t>(r.x + r.w) > width ||
        static_cast<std::size_t>(r.y + r.h) > height) {
        throw Error("manual_rectangle_mask: rectangle (" + std::to_string(r.x) + ", " + std::to_string(r.y) +
                    ", " + std::to_string(r.w) + ", " + std::to_string(r.h) + ") exceeds the " +
                    std::to_string(width) + "x" + std::to_string(height) + " frame");
    }
    Mask m(width, height);
    for (long y = r.y; y < r.y + r.h; ++y) {
        for (long x = r.x; x < r.x + r.w; ++x) m(static_cast<std::size_t>(x), static_cast<std::size_t>(y)) = 1;
    }
    return m;
}

/// Rectangle centered on the region's centroid with the aspect ratio of its
/// bounding box and `area_factor` times its pixel count, clipped to the frame.
inline Rect scaled_rectangle(const Mask& region, double area_factor) {
    const auto idx = detail::mask_indices(region);
    std::size_t xmin = region.width(), xmax = 0, ymin = region.height(), ymax = 0;
    double sx = 0.0, sy = 0.0;
    for (auto i : idx) {
        const auto x = i % region.width();
        const auto y = i / region.width();
        xmin = std::min(xmin, x);
        xmax = std::max(xmax, x);
        ymin = std::min(ymin, y);
        ymax = std::max(ymax, y);
        sx += static_cast<double>(x);
        sy += static_cast<double>(y);
    }
    const double cx = sx / static_cast<double>(idx.size());
    const double cy = sy / static_cast<double>(idx.size());
    const double aspect = static_cast<double>(xmax - xmin + 1) / static_cast<double>(ymax - ymin + 1);
    const double area = area_factor * static_cast<double>(idx.size());
    const double w = std::sqrt(area * aspect);
    const double h = area / w;
    const auto W = static_cast<long>(region.width());
    const auto H = static_cast<long>(region.height());
    long x0 = std::lround(cx - w / 2.0);
    long y0 = std::lround(cy - h / 2.0);
    long x1 = x0 + std::max(1L, std::lround(w));
    long y1 = y0 + std::max(1L, std::lround(h));
    x0 = std::clamp(x0, 0L, W - 1);
    y0 = std::clamp(y0, 0L, H - 1);
    x1 = std::clamp(x1, x0 + 1, W);
    y1 = std::clamp(y1, y0 + 1, H);
    return {x0, y0, x1 - x0, y1 - y0};
}

}  // namespace chestseg
