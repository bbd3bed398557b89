#pragma once

// Depth-noise handling: pepper inpainting, frame-margin exclusion and
// exclusion of pixels around depth edges.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <numbers>
#include <utility>
#include <vector>

#include "chestseg/grid.hpp"
#include "chestseg/parallel.hpp"

namespace chestseg {

inline constexpr int kDefaultMedianRadius = 10;
inline constexpr int kReferenceMarginPx = 50;
inline constexpr std::size_t kReferenceWidthPx = 640;

/// Margin scaled from 50 px at 640 px frame width.
inline int default_margin(std::size_t width) {
    return static_cast<int>(std::lround(static_cast<double>(kReferenceMarginPx) *
                                        static_cast<double>(width) / kReferenceWidthPx));
}

namespace detail {

/// Median of `values` (reordered in place). Even counts average the two
/// middle elements.
inline double median_in_place(std::vector<double>& values) {
    const std::size_t n = values.size();
    const auto mid = values.begin() + static_cast<std::ptrdiff_t>(n / 2);
    std::nth_element(values.begin(), mid, values.end());
    const double upper = *mid;
    if (n % 2 == 1) return upper;
    const double lower = *std::max_element(values.begin(), mid);
    return 0.5 * (lower + upper);
}

}  // namespace detail

/// Inpainted value of a single pixel: the pixel itself when non-zero, else
/// the median of the non-zero values in its window (0 if there are none).
inline double inpaint_pixel(const NormalizedFrame& frame, std::size_t x, std::size_t y, int radius,
                            std::vector<double>& scratch) {
    const double v = frame(x, y);
    if (v != 0.0) return v;
    scratch.clear();
    const auto r = static_cast<std::size_t>(radius);
    const std::size_t ylo = y > r ? y - r : 0;
    const std::size_t yhi = std::min(frame.height() - 1, y + r);
    const std::size_t xlo = x > r ? x - r : 0;
    const std::size_t xhi = std::min(frame.width() - 1, x + r);
    for (std::size_t yy = ylo; yy <= yhi; ++yy) {
        const auto row = frame.row(yy);
        for (std::size_t xx = xlo; xx <= xhi; ++xx) {
            if (row[xx] != 0.0) scratch.push_back(row[xx]);
        }
    }
    return scratch.empty() ? 0.0 : detail::median_in_place(scratch);
}

/// Replaces each zero pixel with the median of the non-zero pixels in its
/// (2r+1)x(2r+1) window of the input frame. Non-zero pixels are copied
/// unchanged; a window without any non-zero value leaves the pixel at 0.
inline NormalizedFrame inpaint_pepper(const NormalizedFrame& frame, int radius,
                                      std::size_t workers = 1) {
    if (radius < 1) throw Error("inpaint_pepper: radius must be >= 1");
    NormalizedFrame out = frame;
    parallel_for(frame.height(), workers, [&](std::size_t y0, std::size_t y1) {
        std::vector<double> scratch;
        scratch.reserve(static_cast<std::size_t>((2 * radius + 1) * (2 * radius + 1)));
        for (std::size_t y = y0; y < y1; ++y) {
            for (std::size_t x = 0; x < frame.width(); ++x) {
                if (frame(x, y) == 0.0) out(x, y) = inpaint_pixel(frame, x, y, radius, scratch);
            }
        }
    });
    return out;
}

/// normalize_frame followed by inpaint_pepper on a raw frame, computed with a
/// sliding two-level histogram over integer millimeters. The result is
/// bit-identical to the two-step route: medians select the same raw samples
/// and the normalized values are formed with the same expression.
inline NormalizedFrame inpaint_pepper_depth(const DepthFrame& frame, double max_distance_mm, int radius,
                                            std::size_t workers = 1) {
    if (!(max_distance_mm > 0.0)) throw Error("inpaint_pepper_depth: max_distance_mm must be > 0");
    if (radius < 1) throw Error("inpaint_pepper_depth: radius must be >= 1");
    const std::size_t w = frame.width();
    const std::size_t h = frame.height();
    const auto r = static_cast<std::size_t>(radius);
    auto valid = [&](std::uint16_t v) { return v != 0 && static_cast<double>(v) <= max_distance_mm; };
    auto norm = [&](std::uint16_t v) { return static_cast<double>(v) / max_distance_mm; };

    NormalizedFrame out(w, h);
    for (std::size_t i = 0; i < frame.size(); ++i) out[i] = valid(frame[i]) ? norm(frame[i]) : 0.0;

    parallel_for(h, workers, [&](std::size_t y0, std::size_t y1) {
        std::vector<std::uint32_t> fine(65536, 0);
        std::vector<std::uint32_t> coarse(256, 0);
        std::size_t count = 0;
        auto update_column = [&](std::size_t x, std::size_t ylo, std::size_t yhi, int delta) {
            for (std::size_t yy = ylo; yy <= yhi; ++yy) {
                const auto v = frame(x, yy);
                if (!valid(v)) continue;
                fine[v] += static_cast<std::uint32_t>(delta);
                coarse[v >> 8] += static_cast<std::uint32_t>(delta);
                count += static_cast<std::size_t>(delta);
            }
        };
        // k-th smallest (0-based) value currently in the window.
        auto kth = [&](std::size_t k) -> std::uint16_t {
            std::size_t c = 0;
            std::size_t cum = 0;
            while (cum + coarse[c] <= k) cum += coarse[c++];
            std::size_t v = c << 8;
            while (cum + fine[v] <= k) cum += fine[v++];
            return static_cast<std::uint16_t>(v);
        };
        for (std::size_t y = y0; y < y1; ++y) {
            std::size_t first_zero = w;
            for (std::size_t x = 0; x < w; ++x) {
                if (!valid(frame(x, y))) {
                    first_zero = x;
                    break;
                }
            }
            if (first_zero == w) continue;
            const std::size_t ylo = y > r ? y - r : 0;
            const std::size_t yhi = std::min(h - 1, y + r);
            // Window columns [lo, hi] for the current x.
            std::size_t lo = first_zero > r ? first_zero - r : 0;
            std::size_t hi = std::min(w - 1, first_zero + r);
            for (std::size_t xx = lo; xx <= hi; ++xx) update_column(xx, ylo, yhi, +1);
            for (std::size_t x = first_zero; x < w; ++x) {
                const std::size_t want_lo = x > r ? x - r : 0;
                const std::size_t want_hi = std::min(w - 1, x + r);
                while (lo < want_lo) update_column(lo++, ylo, yhi, -1);
                while (hi < want_hi) update_column(++hi, ylo, yhi, +1);
                if (valid(frame(x, y)) || count == 0) continue;
                if (count % 2 == 1) {
                    out(x, y) = norm(kth(count / 2));
                } else {
                    out(x, y) = 0.5 * (norm(kth(count / 2 - 1)) + norm(kth(count / 2)));
                }
            }
            for (std::size_t xx = lo; xx <= hi; ++xx) update_column(xx, ylo, yhi, -1);
        }
    });
    return out;
}

inline IgnoreMask margin_mask(std::size_t width, std::size_t height, int margin) {
    if (margin < 0) throw Error("margin_mask: margin must be >= 0");
    const auto m = static_cast<std::size_t>(margin);
    if (2 * m >= std::min(width, height)) {
        throw Error("margin_mask: margin " + std::to_string(margin) + " too large for " +
                    std::to_string(width) + "x" + std::to_string(height) + " frame");
    }
    IgnoreMask out(width, height);
    for (std::size_t y = 0; y < height; ++y) {
        for (std::size_t x = 0; x < width; ++x) {
            out(x, y) = (y < m || y >= height - m || x < m || x >= width - m) ? 1 : 0;
        }
    }
    return out;
}

/// Square-element (Chebyshev) dilation; separable row/column max.
inline Mask dilate(const Mask& mask, int radius) {
    if (radius < 0) throw Error("dilate: radius must be >= 0");
    if (radius == 0) return mask;
    const auto w = static_cast<long>(mask.width());
    const auto h = static_cast<long>(mask.height());
    Mask rows(mask.width(), mask.height());
    for (long y = 0; y < h; ++y) {
        for (long x = 0; x < w; ++x) {
            std::uint8_t v = 0;
            for (long xx = std::max(0L, x - radius); xx <= std::min(w - 1, x + radius) && !v; ++xx) {
                v = mask(static_cast<std::size_t>(xx), static_cast<std::size_t>(y)) ? 1 : 0;
            }
            rows(static_cast<std::size_t>(x), static_cast<std::size_t>(y)) = v;
        }
    }
    Mask out(mask.width(), mask.height());
    for (long y = 0; y < h; ++y) {
        for (long x = 0; x < w; ++x) {
            std::uint8_t v = 0;
            for (long yy = std::max(0L, y - radius); yy <= std::min(h - 1, y + radius) && !v; ++yy) {
                v = rows(static_cast<std::size_t>(x), static_cast<std::size_t>(yy));
            }
            out(static_cast<std::size_t>(x), static_cast<std::size_t>(y)) = v;
        }
    }
    return out;
}

struct CannyParams {
    double sigma = 1.4;
    /// Hysteresis thresholds as fractions of the maximal gradient magnitude.
    double low = 0.1;
    double high = 0.25;

    bool operator==(const CannyParams&) const = default;
};

namespace detail {

inline RealImage gaussian_blur(const RealImage& img, double sigma) {
    if (sigma <= 0.0) return img;
    const int r = static_cast<int>(std::ceil(3.0 * sigma));
    std::vector<double> k(static_cast<std::size_t>(2 * r + 1));
    double sum = 0.0;
    for (int i = -r; i <= r; ++i) {
        k[static_cast<std::size_t>(i + r)] = std::exp(-(i * i) / (2.0 * sigma * sigma));
        sum += k[static_cast<std::size_t>(i + r)];
    }
    for (auto& v : k) v /= sum;
    const auto w = static_cast<long>(img.width());
    const auto h = static_cast<long>(img.height());
    auto at = [](long v, long n) { return static_cast<std::size_t>(std::clamp(v, 0L, n - 1)); };
    RealImage tmp(img.width(), img.height());
    for (long y = 0; y < h; ++y) {
        for (long x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int i = -r; i <= r; ++i) acc += k[static_cast<std::size_t>(i + r)] * img(at(x + i, w), static_cast<std::size_t>(y));
            tmp(static_cast<std::size_t>(x), static_cast<std::size_t>(y)) = acc;
        }
    }
    RealImage out(img.width(), img.height());
    for (long y = 0; y < h; ++y) {
        for (long x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int i = -r; i <= r; ++i) acc += k[static_cast<std::size_t>(i + r)] * tmp(static_cast<std::size_t>(x), at(y + i, h));
            out(static_cast<std::size_t>(x), static_cast<std::size_t>(y)) = acc;
        }
    }
    return out;
}

}  // namespace detail

/// Canny edge detector: Gaussian smoothing, Sobel gradient, non-maximum
/// suppression along the quantized gradient direction, double threshold and
/// 8-connected hysteresis. Borders replicate the edge pixel.
inline Mask canny_edges(const NormalizedFrame& frame, const CannyParams& p = {}) {
    if (!(p.low >= 0.0 && p.low <= p.high)) throw Error("canny_edges: require 0 <= low <= high");
    const auto w = static_cast<long>(frame.width());
    const auto h = static_cast<long>(frame.height());
    Mask edges(frame.width(), frame.height());
    if (w == 0 || h == 0) return edges;

    const auto smooth = detail::gaussian_blur(frame, p.sigma);
    auto px = [&](long x, long y) {
        return smooth(static_cast<std::size_t>(std::clamp(x, 0L, w - 1)),
                      static_cast<std::size_t>(std::clamp(y, 0L, h - 1)));
    };
    RealImage mag(frame.width(), frame.height());
    Grid<std::uint8_t> dir(frame.width(), frame.height());
    double max_mag = 0.0;
    for (long y = 0; y < h; ++y) {
        for (long x = 0; x < w; ++x) {
            const double gx = (px(x + 1, y - 1) + 2.0 * px(x + 1, y) + px(x + 1, y + 1)) -
                              (px(x - 1, y - 1) + 2.0 * px(x - 1, y) + px(x - 1, y + 1));
            const double gy = (px(x - 1, y + 1) + 2.0 * px(x, y + 1) + px(x + 1, y + 1)) -
                              (px(x - 1, y - 1) + 2.0 * px(x, y - 1) + px(x + 1, y - 1));
            const double m = std::hypot(gx, gy);
            const auto ux = static_cast<std::size_t>(x);
            const auto uy = static_cast<std::size_t>(y);
            mag(ux, uy) = m;
            max_mag = std::max(max_mag, m);
            // 0: horizontal gradient, 1: 45 deg, 2: vertical, 3: 135 deg.
            double angle = std::atan2(gy, gx) * 180.0 / std::numbers::pi;
            if (angle < 0.0) angle += 180.0;
            std::uint8_t d = 0;
            if (angle >= 22.5 && angle < 67.5) d = 1;
            else if (angle >= 67.5 && angle < 112.5) d = 2;
            else if (angle >= 112.5 && angle < 157.5) d = 3;
            dir(ux, uy) = d;
        }
    }
    // Flat input up to rounding noise of the blur.
    if (max_mag <= 1e-12) return edges;

    // Neighbor offsets along the gradient for each direction class.
    constexpr long off[4][2] = {{1, 0}, {1, 1}, {0, 1}, {-1, 1}};
    auto mag_at = [&](long x, long y) {
        if (x < 0 || y < 0 || x >= w || y >= h) return 0.0;
        return mag(static_cast<std::size_t>(x), static_cast<std::size_t>(y));
    };
    const double lo = p.low * max_mag;
    const double hi = p.high * max_mag;
    // 0 none, 1 weak, 2 strong.
    Grid<std::uint8_t> cls(frame.width(), frame.height());
    std::deque<std::pair<long, long>> queue;
    for (long y = 0; y < h; ++y) {
        for (long x = 0; x < w; ++x) {
            const auto ux = static_cast<std::size_t>(x);
            const auto uy = static_cast<std::size_t>(y);
            const double m = mag(ux, uy);
            if (m <= 0.0 || m < lo) continue;
            const auto& o = off[dir(ux, uy)];
            // On a tie the later pixel along the gradient wins; plateaus stay one pixel wide.
            if (!(m > mag_at(x + o[0], y + o[1]) && m >= mag_at(x - o[0], y - o[1]))) continue;
            if (m >= hi) {
                cls(ux, uy) = 2;
                queue.emplace_back(x, y);
            } else {
                cls(ux, uy) = 1;
            }
        }
    }
    while (!queue.empty()) {
        const auto [x, y] = queue.front();
        queue.pop_front();
        edges(static_cast<std::size_t>(x), static_cast<std::size_t>(y)) = 1;
        for (long dy = -1; dy <= 1; ++dy) {
            for (long dx = -1; dx <= 1; ++dx) {
                const long nx = x + dx;
                const long ny = y + dy;
                if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
                auto& c = cls(static_cast<std::size_t>(nx), static_cast<std::size_t>(ny));
                if (c == 1) {
                    c = 2;
                    queue.emplace_back(nx, ny);
                }
            }
        }
    }
    return edges;
}

struct IgnoreParams {
    /// Negative selects default_margin(width).
    int margin = -1;
    CannyParams canny;
    int dilate_radius = 2;

    int resolved_margin(std::size_t width) const { return margin < 0 ? default_margin(width) : margin; }

    bool operator==(const IgnoreParams&) const = default;
};

/// Union of the margin band and the dilated Canny edges of `reference`.
inline IgnoreMask build_ignore_mask(const NormalizedFrame& reference, const IgnoreParams& p = {}) {
    const auto margin = margin_mask(reference.width(), reference.height(),
                                    p.resolved_margin(reference.width()));
    return mask_or(margin, dilate(canny_edges(reference, p.canny), p.dilate_radius));
}

}  // namespace chestseg
