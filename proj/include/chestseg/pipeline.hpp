#pragma once

// End-to-end chest segmentation of a depth recording.
//
// Preconditions on the input (not checked): the recording shows one
// sleeping patient, who is mostly still apart from breathing and
// occasional posture changes, and nothing else in the scene moves.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "chestseg/depth_io.hpp"
#include "chestseg/grid.hpp"
#include "chestseg/kv.hpp"
#include "chestseg/morph.hpp"
#include "chestseg/noise.hpp"
#include "chestseg/parallel.hpp"
#include "chestseg/signal.hpp"
#include "chestseg/spectral.hpp"
#include "chestseg/temporal.hpp"

namespace chestseg {

struct PipelineConfig {
    PreprocessParams preprocess;
    IgnoreParams ignore;
    double segment_seconds = 30.0;
    /// <= 0 means non-overlapping (stride = segment length).
    double stride_seconds = 0.0;
    double band_low_hz = 0.2;
    double band_high_hz = 0.33;
    double amp_threshold_frac = 0.3;
    Window window = Window::Rect;
    /// Minimum ratio of a pixel's in-band peak to its own out-of-band median
    /// magnitude for it to be a candidate; <= 0 disables the gate.
    double min_peak_snr = 3.0;
    MorphParams morph;
    double confidence = kDefaultConfidence;
    /// Mean absolute normalized frame difference above which a segment is
    /// treated as containing a posture change; <= 0 disables.
    double motion_thresh = 0.005;

    bool operator==(const PipelineConfig&) const = default;

    Band band() const { return {band_low_hz, band_high_hz}; }

    SegmentConfig segment_config(double fps) const {
        SegmentConfig s;
        s.segment_len = static_cast<std::size_t>(std::max(0LL, std::llround(segment_seconds * fps)));
        s.segment_stride = stride_seconds > 0.0
                               ? static_cast<std::size_t>(std::max(0LL, std::llround(stride_seconds * fps)))
                               : s.segment_len;
        s.band_low_hz = band_low_hz;
        s.band_high_hz = band_high_hz;
        s.amp_threshold_frac = amp_threshold_frac;
        s.window = window;
        return s;
    }

    /// Checks everything that does not depend on the recording's fps.
    void validate() const {
        if (!(preprocess.max_distance_mm > 0.0)) throw Error("config: max_distance_mm must be > 0");
        if (preprocess.median_radius < 1) throw Error("config: median_radius must be >= 1");
        if (!(ignore.canny.low >= 0.0 && ignore.canny.low <= ignore.canny.high)) {
            throw Error("config: require 0 <= canny_low <= canny_high");
        }
        if (ignore.canny.sigma < 0.0) throw Error("config: canny_sigma must be >= 0");
        if (ignore.dilate_radius < 0) throw Error("config: dilate_radius must be >= 0");
        if (!(segment_seconds > 0.0)) throw Error("config: segment_seconds must be > 0");
        if (stride_seconds > segment_seconds) throw Error("config: stride_seconds must not exceed segment_seconds");
        if (!(band_low_hz > 0.0 && band_low_hz < band_high_hz)) throw Error("config: require 0 < band_low < band_high");
        if (!(amp_threshold_frac > 0.0 && amp_threshold_frac < 1.0)) throw Error("config: amp_frac must lie in (0, 1)");
        if (morph.open_radius < 0 || morph.close_radius < 0) throw Error("config: morphology radii must be >= 0");
        if (morph.min_area_frac < 0.0 || morph.min_area_frac > 1.0) throw Error("config: min_area_frac must lie in [0, 1]");
        if (!(confidence > 0.0 && confidence <= 1.0)) throw Error("config: conf must lie in (0, 1]");
        if (!std::isfinite(min_peak_snr)) throw Error("config: min_peak_snr must be finite");
        if (!std::isfinite(motion_thresh)) throw Error("config: motion_thresh must be finite");
    }

    KeyValueDoc to_key_values() const {
        KeyValueDoc d;
        d.set("max_distance_mm", preprocess.max_distance_mm);
        d.set("median_radius", static_cast<std::int64_t>(preprocess.median_radius));
        d.set("margin", static_cast<std::int64_t>(ignore.margin));
        d.set("canny_sigma", ignore.canny.sigma);
        d.set("canny_low", ignore.canny.low);
        d.set("canny_high", ignore.canny.high);
        d.set("dilate_radius", static_cast<std::int64_t>(ignore.dilate_radius));
        d.set("segment_seconds", segment_seconds);
        d.set("stride_seconds", stride_seconds);
        d.set("band_low_hz", band_low_hz);
        d.set("band_high_hz", band_high_hz);
        d.set("amp_frac", amp_threshold_frac);
        d.set("window", std::string(to_string(window)));
        d.set("min_peak_snr", min_peak_snr);
        d.set("open_radius", static_cast<std::int64_t>(morph.open_radius));
        d.set("close_radius", static_cast<std::int64_t>(morph.close_radius));
        d.set("min_area_frac", morph.min_area_frac);
        d.set("conf", confidence);
        d.set("motion_thresh", motion_thresh);
        return d;
    }

    /// Missing keys keep their defaults; unknown keys are rejected.
    static PipelineConfig from_key_values(const KeyValueDoc& d) {
        static const char* known[] = {"max_distance_mm", "median_radius", "margin", "canny_sigma",
                                      "canny_low", "canny_high", "dilate_radius", "segment_seconds",
                                      "stride_seconds", "band_low_hz", "band_high_hz", "amp_frac",
                                      "window", "min_peak_snr", "open_radius", "close_radius", "min_area_frac",
                                      "conf", "motion_thresh"};
        for (const auto& [k, v] : d.entries) {
            if (std::none_of(std::begin(known), std::end(known), [&](const char* n) { return k == n; })) {
                throw Error(d.source + ": unknown config key '" + k + "'");
            }
        }
        PipelineConfig c;
        c.preprocess.max_distance_mm = d.get_double("max_distance_mm", c.preprocess.max_distance_mm);
        c.preprocess.median_radius = static_cast<int>(d.get_int("median_radius", c.preprocess.median_radius));
        c.ignore.margin = static_cast<int>(d.get_int("margin", c.ignore.margin));
        c.ignore.canny.sigma = d.get_double("canny_sigma", c.ignore.canny.sigma);
        c.ignore.canny.low = d.get_double("canny_low", c.ignore.canny.low);
        c.ignore.canny.high = d.get_double("canny_high", c.ignore.canny.high);
        c.ignore.dilate_radius = static_cast<int>(d.get_int("dilate_radius", c.ignore.dilate_radius));
        c.segment_seconds = d.get_double("segment_seconds", c.segment_seconds);
        c.stride_seconds = d.get_double("stride_seconds", c.stride_seconds);
        c.band_low_hz = d.get_double("band_low_hz", c.band_low_hz);
        c.band_high_hz = d.get_double("band_high_hz", c.band_high_hz);
        c.amp_threshold_frac = d.get_double("amp_frac", c.amp_threshold_frac);
        if (auto w = d.get("window")) c.window = parse_window(*w);
        c.min_peak_snr = d.get_double("min_peak_snr", c.min_peak_snr);
        c.morph.open_radius = static_cast<int>(d.get_int("open_radius", c.morph.open_radius));
        c.morph.close_radius = static_cast<int>(d.get_int("close_radius", c.morph.close_radius));
        c.morph.min_area_frac = d.get_double("min_area_frac", c.morph.min_area_frac);
        c.confidence = d.get_double("conf", c.confidence);
        c.motion_thresh = d.get_double("motion_thresh", c.motion_thresh);
        try {
            c.validate();
        } catch (const Error& e) {
            throw Error(d.source + ": " + e.what());
        }
        return c;
    }
};

/// Intermediate results of one time segment. The image fields other than
/// `ignore` and `refined` are only filled when debug images are requested.
struct SegmentArtifacts {
    std::size_t start = 0;
    std::size_t length = 0;
    double max_motion = 0.0;
    bool motion_excluded = false;
    IgnoreMask ignore;
    SegmentMask refined;
    NormalizedFrame reference;
    AmplitudeImage amplitude_full;
    AmplitudeImage amplitude;
    SegmentMask thresholded;
};

struct SegmentationResult {
    Histogram histogram;
    ConfidenceMap confidence;
    SegmentationMask mask;
    /// Union of the ignore masks of the segments that were accumulated.
    IgnoreMask ignore;
    std::size_t total_segments = 0;
    std::size_t valid_segments = 0;
    std::vector<SegmentArtifacts> segments;
};

struct SegmentOptions {
    std::size_t workers = default_worker_count();
    bool keep_debug_images = false;
};

/// Per-pixel temporal median of a segment.
inline NormalizedFrame temporal_median(std::span<const NormalizedFrame> frames, std::size_t workers = 1) {
    if (frames.empty()) throw Error("temporal_median: no frames");
    NormalizedFrame out(frames.front().width(), frames.front().height());
    parallel_for(out.height(), workers, [&](std::size_t y0, std::size_t y1) {
        std::vector<double> values(frames.size());
        for (std::size_t y = y0; y < y1; ++y) {
            for (std::size_t x = 0; x < out.width(); ++x) {
                for (std::size_t t = 0; t < frames.size(); ++t) values[t] = frames[t](x, y);
                out(x, y) = detail::median_in_place(values);
            }
        }
    });
    return out;
}

/// normalize -> inpaint -> ignore mask -> per-segment band-limited amplitude
/// -> threshold (relative amplitude and per-pixel peak significance) -> refine
/// -> accumulate -> confidence -> final mask.
/// Deterministic for fixed inputs regardless of the worker count.
inline SegmentationResult segment_sequence(const DepthSequence& seq, const PipelineConfig& cfg,
                                           const SegmentOptions& opt = {}) {
    seq.validate();
    cfg.validate();
    const auto scfg = cfg.segment_config(seq.fps);
    const auto windows = iter_segments(seq.length(), scfg);
    scfg.validate(seq.fps);
    const std::size_t workers = std::max<std::size_t>(1, opt.workers);
    const auto w = seq.width();
    const auto h = seq.height();
    const int margin = cfg.ignore.resolved_margin(w);
    const auto margin_band = margin_mask(w, h, margin);

    SegmentationResult result;
    result.total_segments = windows.size();
    result.ignore = IgnoreMask(w, h);
    std::vector<SegmentMask> accepted;

    // Preprocessed frames of the current window; overlapping windows reuse them.
    std::map<std::size_t, NormalizedFrame> cache;
    for (std::size_t k = 0; k < windows.size(); ++k) {
        const auto win = windows[k];
        try {
            cache.erase(cache.begin(), cache.lower_bound(win.start));
            std::vector<std::size_t> missing;
            for (std::size_t t = win.start; t < win.start + win.length; ++t) {
                if (!cache.contains(t)) missing.push_back(t);
            }
            std::vector<NormalizedFrame> fresh(missing.size());
            parallel_for(missing.size(), workers, [&](std::size_t b, std::size_t e) {
                for (std::size_t i = b; i < e; ++i) fresh[i] = preprocess_frame(seq.frames[missing[i]], cfg.preprocess);
            });
            for (std::size_t i = 0; i < missing.size(); ++i) cache.emplace(missing[i], std::move(fresh[i]));
            std::vector<NormalizedFrame> frames;
            frames.reserve(win.length);
            for (std::size_t t = win.start; t < win.start + win.length; ++t) frames.push_back(cache.at(t));

            SegmentArtifacts art;
            art.start = win.start;
            art.length = win.length;
            auto reference = temporal_median(frames, workers);
            art.ignore = mask_or(margin_band, dilate(canny_edges(reference, cfg.ignore.canny), cfg.ignore.dilate_radius));
            const auto scores = frame_motion_scores(frames, margin_band);
            art.max_motion = scores.empty() ? 0.0 : *std::max_element(scores.begin(), scores.end());
            art.motion_excluded = has_motion(scores, cfg.motion_thresh);
            auto spectra = segment_spectra(frames, art.ignore, scfg, seq.fps, workers);
            auto thresholded = mask_and(threshold_amplitude(spectra.in_band, scfg, &art.ignore),
                                        peak_significance_mask(spectra.in_band, spectra.noise_floor, cfg.min_peak_snr));
            art.refined = refine_segment_mask(thresholded, cfg.morph, &art.ignore);
            if (opt.keep_debug_images) {
                art.reference = std::move(reference);
                art.amplitude_full = std::move(spectra.full);
                art.amplitude = std::move(spectra.in_band);
                art.thresholded = std::move(thresholded);
            }
            if (!art.motion_excluded) {
                accepted.push_back(art.refined);
                result.ignore = mask_or(result.ignore, art.ignore);
            }
            result.segments.push_back(std::move(art));
        } catch (const Error& e) {
            throw Error("segment " + std::to_string(k) + " (frames " + std::to_string(win.start) + ".." +
                        std::to_string(win.start + win.length - 1) + "): " + e.what());
        }
    }

    result.valid_segments = accepted.size();
    if (accepted.empty()) {
        result.histogram = Histogram(w, h);
        result.confidence = ConfidenceMap(w, h);
        result.mask = SegmentationMask(w, h);
        return result;
    }
    result.histogram = accumulate(accepted);
    result.confidence = to_confidence(result.histogram, accepted.size());
    result.mask = mask_subtract(threshold_confidence(result.confidence, cfg.confidence), result.ignore);
    return result;
}

}  // namespace chestseg
