#pragma once

// Per-pixel temporal spectra over time segments and the in-band
// maximal-amplitude image.

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <mutex>
#include <numbers>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "chestseg/grid.hpp"
#include "chestseg/parallel.hpp"

namespace chestseg {

enum class Window { Rect, Hann };

inline const char* to_string(Window w) { return w == Window::Hann ? "hann" : "rect"; }

inline Window parse_window(const std::string& s) {
    if (s == "rect") return Window::Rect;
    if (s == "hann") return Window::Hann;
    throw Error("unknown window '" + s + "' (expected rect or hann)");
}

namespace detail {

// The FFTW planner is not re-entrant; execution on distinct buffers is.
inline std::mutex& fftw_planner_mutex() {
    static std::mutex m;
    return m;
}

}  // namespace detail

/// One-shot real-to-complex transform of fixed length. Each instance owns
/// its buffers and plan, so one instance per worker thread.
class RealFft {
public:
    explicit RealFft(std::size_t n) : n_(n) {
        if (n < 2) throw Error("RealFft: length must be >= 2");
        in_ = static_cast<double*>(fftw_malloc(sizeof(double) * n_));
        out_ = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * bins()));
        if (in_ == nullptr || out_ == nullptr) {
            release();
            throw Error("RealFft: allocation failed");
        }
        std::lock_guard lock(detail::fftw_planner_mutex());
        plan_ = fftw_plan_dft_r2c_1d(static_cast<int>(n_), in_, out_, FFTW_ESTIMATE);
        if (plan_ == nullptr) {
            release();
            throw Error("RealFft: planning failed");
        }
    }

    RealFft(const RealFft&) = delete;
    RealFft& operator=(const RealFft&) = delete;

    ~RealFft() { release(); }

    std::size_t size() const noexcept { return n_; }
    std::size_t bins() const noexcept { return n_ / 2 + 1; }

    std::span<double> input() noexcept { return {in_, n_}; }

    /// Transforms input(); bins k = 0..n/2 of the unnormalized forward DFT.
    std::span<const std::complex<double>> forward() {
        fftw_execute(plan_);
        return {reinterpret_cast<const std::complex<double>*>(out_), bins()};
    }

private:
    void release() noexcept {
        if (plan_ != nullptr) {
            std::lock_guard lock(detail::fftw_planner_mutex());
            fftw_destroy_plan(plan_);
            plan_ = nullptr;
        }
        if (in_ != nullptr) fftw_free(in_);
        if (out_ != nullptr) fftw_free(out_);
        in_ = nullptr;
        out_ = nullptr;
    }

    std::size_t n_;
    double* in_ = nullptr;
    fftw_complex* out_ = nullptr;
    fftw_plan plan_ = nullptr;
};

struct Spectrum {
    std::vector<double> frequencies;
    std::vector<double> magnitudes;
};

namespace detail {

/// Subtracts the mean and applies the window, in place.
inline void prepare_signal(std::span<double> x, Window window) {
    double mean = 0.0;
    for (double v : x) mean += v;
    mean /= static_cast<double>(x.size());
    const double denom = static_cast<double>(x.size() - 1);
    for (std::size_t t = 0; t < x.size(); ++t) {
        x[t] -= mean;
        if (window == Window::Hann) {
            x[t] *= 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * static_cast<double>(t) / denom));
        }
    }
}

}  // namespace detail

/// One-sided magnitude spectrum |X_k|, k = 0..L/2, at k * fps / L Hz, of the
/// mean-removed signal.
inline Spectrum pixel_spectrum(std::span<const double> signal, double fps, Window window = Window::Rect) {
    if (signal.size() < 2) throw Error("pixel_spectrum: signal needs at least 2 samples");
    if (!(fps > 0.0)) throw Error("pixel_spectrum: fps must be > 0");
    RealFft fft(signal.size());
    auto in = fft.input();
    std::copy(signal.begin(), signal.end(), in.begin());
    detail::prepare_signal(in, window);
    const auto bins = fft.forward();
    Spectrum s;
    s.frequencies.resize(bins.size());
    s.magnitudes.resize(bins.size());
    const double L = static_cast<double>(signal.size());
    for (std::size_t k = 0; k < bins.size(); ++k) {
        s.frequencies[k] = static_cast<double>(k) * fps / L;
        s.magnitudes[k] = std::abs(bins[k]);
    }
    return s;
}

/// Inclusive range of DFT bins whose frequency lies in the band.
struct BinRange {
    std::size_t first = 1;
    std::size_t last = 0;

    bool empty() const noexcept { return last < first; }
    bool contains(std::size_t k) const noexcept { return k >= first && k <= last; }
};

/// Bins k >= 1 with low <= k * fps / L <= high. The DC bin is never included.
inline BinRange band_bins(std::size_t length, double fps, double low_hz, double high_hz) {
    if (length < 2) throw Error("band_bins: length must be >= 2");
    const double L = static_cast<double>(length);
    constexpr double eps = 1e-9;
    const double lo = std::ceil(low_hz * L / fps - eps);
    const double hi = std::floor(high_hz * L / fps + eps);
    BinRange r;
    r.first = static_cast<std::size_t>(std::max(1.0, lo));
    r.last = hi < 0.0 ? 0 : std::min(static_cast<std::size_t>(hi), length / 2);
    if (r.empty()) {
        throw Error("breathing band [" + std::to_string(low_hz) + ", " + std::to_string(high_hz) +
                    "] Hz contains no DFT bin for length " + std::to_string(length) + " at " +
                    std::to_string(fps) + " fps");
    }
    return r;
}

struct SegmentConfig {
    std::size_t segment_len = 300;
    std::size_t segment_stride = 300;
    double band_low_hz = 0.2;
    double band_high_hz = 0.33;
    double amp_threshold_frac = 0.3;
    Window window = Window::Rect;

    void validate(double fps) const {
        if (segment_len < 2) throw Error("segment length must be >= 2 frames");
        if (segment_stride < 1 || segment_stride > segment_len) {
            throw Error("segment stride must satisfy 1 <= stride <= length");
        }
        if (!(band_low_hz > 0.0 && band_low_hz < band_high_hz && band_high_hz < fps / 2.0)) {
            throw Error("breathing band must satisfy 0 < low < high < fps/2");
        }
        if (!(amp_threshold_frac > 0.0 && amp_threshold_frac < 1.0)) {
            throw Error("amplitude threshold fraction must lie in (0, 1)");
        }
        (void)band_bins(segment_len, fps, band_low_hz, band_high_hz);
    }

    bool operator==(const SegmentConfig&) const = default;
};

struct SegmentWindow {
    std::size_t start = 0;
    std::size_t length = 0;

    bool operator==(const SegmentWindow&) const = default;
};

/// Windows at 0, stride, 2*stride, ...; a trailing partial window is dropped.
inline std::vector<SegmentWindow> iter_segments(std::size_t frame_count, const SegmentConfig& cfg) {
    if (cfg.segment_len == 0 || cfg.segment_stride == 0) throw Error("iter_segments: zero length or stride");
    if (frame_count < cfg.segment_len) {
        throw Error("sequence shorter than one segment (" + std::to_string(frame_count) + " < " +
                    std::to_string(cfg.segment_len) + " frames)");
    }
    std::vector<SegmentWindow> out;
    for (std::size_t start = 0; start + cfg.segment_len <= frame_count; start += cfg.segment_stride) {
        out.push_back({start, cfg.segment_len});
    }
    return out;
}

template <typename T>
std::vector<std::pair<std::size_t, std::span<const T>>> iter_segments(std::span<const T> frames,
                                                                      const SegmentConfig& cfg) {
    std::vector<std::pair<std::size_t, std::span<const T>>> out;
    for (const auto& w : iter_segments(frames.size(), cfg)) {
        out.emplace_back(w.start, frames.subspan(w.start, w.length));
    }
    return out;
}

/// Per-pixel spectral summaries of one segment. Ignored pixels are 0 in
/// every image.
struct SegmentSpectra {
    /// Maximum magnitude over the band bins.
    AmplitudeImage in_band;
    /// Maximum magnitude over every non-DC bin.
    AmplitudeImage full;
    /// Median magnitude over the non-DC bins outside the band.
    AmplitudeImage noise_floor;
};

inline SegmentSpectra segment_spectra(std::span<const NormalizedFrame> segment, const IgnoreMask& ignore,
                                      BinRange bins, Window window, std::size_t workers = 1) {
    if (segment.size() < 2) throw Error("amplitude image: segment needs at least 2 frames");
    const auto& first = segment.front();
    require_same_shape(first, ignore, "amplitude image: ignore mask");
    for (std::size_t t = 1; t < segment.size(); ++t) require_same_shape(first, segment[t], "amplitude image: frame");
    const std::size_t w = first.width();
    const std::size_t L = segment.size();
    SegmentSpectra out{AmplitudeImage(w, first.height()), AmplitudeImage(w, first.height()),
                       AmplitudeImage(w, first.height())};
    parallel_for(first.height(), workers, [&](std::size_t y0, std::size_t y1) {
        RealFft fft(L);
        std::vector<double> block(w * L);
        std::vector<double> outside;
        for (std::size_t y = y0; y < y1; ++y) {
            for (std::size_t t = 0; t < L; ++t) {
                const auto row = segment[t].row(y);
                std::copy(row.begin(), row.end(), block.begin() + static_cast<std::ptrdiff_t>(t * w));
            }
            for (std::size_t x = 0; x < w; ++x) {
                if (ignore(x, y)) continue;
                auto in = fft.input();
                for (std::size_t t = 0; t < L; ++t) in[t] = block[t * w + x];
                detail::prepare_signal(in, window);
                const auto spec = fft.forward();
                double band_max = 0.0;
                double full_max = 0.0;
                outside.clear();
                for (std::size_t k = 1; k < spec.size(); ++k) {
                    const double m = std::abs(spec[k]);
                    full_max = std::max(full_max, m);
                    if (bins.contains(k)) {
                        band_max = std::max(band_max, m);
                    } else {
                        outside.push_back(m);
                    }
                }
                out.in_band(x, y) = band_max;
                out.full(x, y) = full_max;
                if (!outside.empty()) {
                    const auto mid = outside.begin() + static_cast<std::ptrdiff_t>(outside.size() / 2);
                    std::nth_element(outside.begin(), mid, outside.end());
                    double floor = *mid;
                    if (outside.size() % 2 == 0) floor = 0.5 * (floor + *std::max_element(outside.begin(), mid));
                    out.noise_floor(x, y) = floor;
                }
            }
        }
    });
    return out;
}

inline SegmentSpectra segment_spectra(std::span<const NormalizedFrame> segment, const IgnoreMask& ignore,
                                      const SegmentConfig& cfg, double fps, std::size_t workers = 1) {
    if (segment.size() != cfg.segment_len) {
        throw Error("segment has " + std::to_string(segment.size()) + " frames, configured length is " +
                    std::to_string(cfg.segment_len));
    }
    const auto bins = band_bins(segment.size(), fps, cfg.band_low_hz, cfg.band_high_hz);
    return segment_spectra(segment, ignore, bins, cfg.window, workers);
}

/// In-band maximal amplitude image of one segment.
inline AmplitudeImage band_limited_amplitude(std::span<const NormalizedFrame> segment, const IgnoreMask& ignore,
                                             const SegmentConfig& cfg, double fps, std::size_t workers = 1) {
    return segment_spectra(segment, ignore, cfg, fps, workers).in_band;
}

/// Maximal amplitude over every non-DC bin; kept for rendering only.
inline AmplitudeImage unrestricted_amplitude(std::span<const NormalizedFrame> segment, const IgnoreMask& ignore,
                                             Window window = Window::Rect, std::size_t workers = 1) {
    return segment_spectra(segment, ignore, BinRange{1, segment.size() / 2}, window, workers).full;
}

/// Pixels whose in-band peak is at least `min_ratio` times their own
/// out-of-band median magnitude. A ratio <= 0 accepts every pixel.
inline Mask peak_significance_mask(const AmplitudeImage& in_band, const AmplitudeImage& noise_floor,
                                   double min_ratio) {
    require_same_shape(in_band, noise_floor, "peak_significance_mask");
    Mask out(in_band.width(), in_band.height(), 1);
    if (min_ratio <= 0.0) return out;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = in_band[i] >= min_ratio * noise_floor[i] ? 1 : 0;
    return out;
}

/// Amplitudes at or below this are rounding residue of the mean removal on a
/// constant signal, not motion.
inline constexpr double kAmplitudeFloor = 1e-9;

/// Pixels with amplitude >= frac * (maximum over non-ignored pixels). All
/// false when that maximum does not exceed kAmplitudeFloor.
inline SegmentMask threshold_amplitude(const AmplitudeImage& amp, double frac, const IgnoreMask* ignore = nullptr) {
    if (!(frac > 0.0 && frac < 1.0)) throw Error("threshold_amplitude: fraction must lie in (0, 1)");
    if (ignore != nullptr) require_same_shape(amp, *ignore, "threshold_amplitude");
    double max_amp = 0.0;
    for (std::size_t i = 0; i < amp.size(); ++i) {
        if (ignore != nullptr && (*ignore)[i]) continue;
        max_amp = std::max(max_amp, amp[i]);
    }
    SegmentMask out(amp.width(), amp.height());
    if (max_amp <= kAmplitudeFloor) return out;
    const double thr = frac * max_amp;
    for (std::size_t i = 0; i < amp.size(); ++i) {
        if (ignore != nullptr && (*ignore)[i]) continue;
        out[i] = amp[i] >= thr ? 1 : 0;
    }
    return out;
}

inline SegmentMask threshold_amplitude(const AmplitudeImage& amp, const SegmentConfig& cfg,
                                       const IgnoreMask* ignore = nullptr) {
    return threshold_amplitude(amp, cfg.amp_threshold_frac, ignore);
}

}  // namespace chestseg
