#pragma once

// Binary mask refinement. Components are 8-connected; background
// reachability for hole filling is 4-connected.

#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

#include "chestseg/grid.hpp"
#include "chestseg/noise.hpp"

namespace chestseg {

/// True where the whole (2r+1)x(2r+1) square is true. Pixels outside the
/// frame count as false, so erosion shrinks masks at the border and the
/// erode/dilate duality only holds on the interior.
inline Mask erode(const Mask& mask, int radius) {
    if (radius < 0) throw Error("erode: radius must be >= 0");
    if (radius == 0) return mask;
    const auto w = static_cast<long>(mask.width());
    const auto h = static_cast<long>(mask.height());
    Mask rows(mask.width(), mask.height());
    for (long y = 0; y < h; ++y) {
        for (long x = 0; x < w; ++x) {
            std::uint8_t v = (x - radius >= 0 && x + radius < w) ? 1 : 0;
            for (long xx = x - radius; xx <= x + radius && v; ++xx) {
                v = mask(static_cast<std::size_t>(xx), static_cast<std::size_t>(y)) ? 1 : 0;
            }
            rows(static_cast<std::size_t>(x), static_cast<std::size_t>(y)) = v;
        }
    }
    Mask out(mask.width(), mask.height());
    for (long y = 0; y < h; ++y) {
        for (long x = 0; x < w; ++x) {
            std::uint8_t v = (y - radius >= 0 && y + radius < h) ? 1 : 0;
            for (long yy = y - radius; yy <= y + radius && v; ++yy) {
                v = rows(static_cast<std::size_t>(x), static_cast<std::size_t>(yy));
            }
            out(static_cast<std::size_t>(x), static_cast<std::size_t>(y)) = v;
        }
    }
    return out;
}

inline Mask open(const Mask& mask, int radius) { return dilate(erode(mask, radius), radius); }

/// Closing is evaluated on a frame padded by `radius` false pixels and then
/// cropped, so pixels near the border are not lost to the erosion border
/// policy and closing stays extensive.
inline Mask close(const Mask& mask, int radius) {
    if (radius < 0) throw Error("close: radius must be >= 0");
    if (radius == 0) return mask;
    const auto r = static_cast<std::size_t>(radius);
    Mask padded(mask.width() + 2 * r, mask.height() + 2 * r);
    for (std::size_t y = 0; y < mask.height(); ++y) {
        for (std::size_t x = 0; x < mask.width(); ++x) padded(x + r, y + r) = mask(x, y);
    }
    const auto closed = erode(dilate(padded, radius), radius);
    Mask out(mask.width(), mask.height());
    for (std::size_t y = 0; y < mask.height(); ++y) {
        for (std::size_t x = 0; x < mask.width(); ++x) out(x, y) = closed(x + r, y + r);
    }
    return out;
}

/// Sets every false pixel that has no 4-connected false path to the border.
inline Mask fill_holes(const Mask& mask) {
    const auto w = mask.width();
    const auto h = mask.height();
    Mask outside(w, h);
    std::vector<std::pair<std::size_t, std::size_t>> stack;
    auto seed = [&](std::size_t x, std::size_t y) {
        if (!mask(x, y) && !outside(x, y)) {
            outside(x, y) = 1;
            stack.emplace_back(x, y);
        }
    };
    for (std::size_t x = 0; x < w; ++x) {
        seed(x, 0);
        seed(x, h - 1);
    }
    for (std::size_t y = 0; y < h; ++y) {
        seed(0, y);
        seed(w - 1, y);
    }
    while (!stack.empty()) {
        const auto [x, y] = stack.back();
        stack.pop_back();
        if (x > 0) seed(x - 1, y);
        if (x + 1 < w) seed(x + 1, y);
        if (y > 0) seed(x, y - 1);
        if (y + 1 < h) seed(x, y + 1);
    }
    return mask_not(outside);
}

/// 8-connected component labels (0 = background, 1.. in raster order of
/// each component's first pixel) and component sizes indexed by label.
struct ComponentLabels {
    Grid<std::uint32_t> labels;
    std::vector<std::size_t> areas;  // areas[0] unused
};

inline ComponentLabels label_components(const Mask& mask) {
    const auto w = mask.width();
    const auto h = mask.height();
    ComponentLabels out{Grid<std::uint32_t>(w, h), {0}};
    std::vector<std::pair<std::size_t, std::size_t>> stack;
    for (std::size_t y0 = 0; y0 < h; ++y0) {
        for (std::size_t x0 = 0; x0 < w; ++x0) {
            if (!mask(x0, y0) || out.labels(x0, y0) != 0) continue;
            const auto label = static_cast<std::uint32_t>(out.areas.size());
            std::size_t area = 0;
            out.labels(x0, y0) = label;
            stack.emplace_back(x0, y0);
            while (!stack.empty()) {
                const auto [x, y] = stack.back();
                stack.pop_back();
                ++area;
                for (int dy = -1; dy <= 1; ++dy) {
                    for (int dx = -1; dx <= 1; ++dx) {
                        if ((dx == 0 && dy == 0) || (x == 0 && dx < 0) || (y == 0 && dy < 0)) continue;
                        const std::size_t nx = x + static_cast<std::size_t>(dx);
                        const std::size_t ny = y + static_cast<std::size_t>(dy);
                        if (nx >= w || ny >= h) continue;
                        if (mask(nx, ny) && out.labels(nx, ny) == 0) {
                            out.labels(nx, ny) = label;
                            stack.emplace_back(nx, ny);
                        }
                    }
                }
            }
            out.areas.push_back(area);
        }
    }
    return out;
}

inline Mask remove_small_components(const Mask& mask, std::size_t min_area) {
    if (min_area == 0) return mask;
    const auto comps = label_components(mask);
    Mask out(mask.width(), mask.height());
    for (std::size_t i = 0; i < mask.size(); ++i) {
        const auto l = comps.labels[i];
        out[i] = (l != 0 && comps.areas[l] >= min_area) ? 1 : 0;
    }
    return out;
}

struct MorphParams {
    int open_radius = 1;
    int close_radius = 2;
    /// Minimum component area as a fraction of the frame's pixel count.
    double min_area_frac = 0.0005;

    std::size_t min_area(std::size_t pixels) const {
        return static_cast<std::size_t>(std::llround(min_area_frac * static_cast<double>(pixels)));
    }

    bool operator==(const MorphParams&) const = default;
};

/// open -> close -> fill_holes -> remove_small_components. When `ignore` is
/// given its pixels are cleared from the result, since closing and hole
/// filling can grow into them.
inline Mask refine_segment_mask(const Mask& mask, const MorphParams& p, const IgnoreMask* ignore = nullptr) {
    if (p.min_area_frac < 0.0) throw Error("refine_segment_mask: min_area_frac must be >= 0");
    Mask m = close(open(mask, p.open_radius), p.close_radius);
    m = remove_small_components(fill_holes(m), p.min_area(mask.size()));
    if (ignore != nullptr) m = mask_subtract(m, *ignore);
    return m;
}

}  // namespace chestseg
