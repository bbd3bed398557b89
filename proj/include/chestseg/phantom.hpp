#pragma once

// Synthetic sleeping-patient depth sequences with known ground truth.
//
// Scene model: a flat bed plane, an elliptical body slab closer to the
// camera, and an elliptical chest region inside the body whose depth is
// modulated by breathing. Noise is applied in sensor order: radial Gaussian,
// edge flicker, integer-millimeter quantization, then pepper dropout.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <numbers>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "chestseg/depth_io.hpp"
#include "chestseg/grid.hpp"
#include "chestseg/kv.hpp"
#include "chestseg/parallel.hpp"

namespace chestseg {

struct Ellipse {
    double cx = 0.0;
    double cy = 0.0;
    double rx = 1.0;
    double ry = 1.0;

    /// Pixel centers at integer coordinates.
    bool contains(double x, double y) const noexcept {
        const double u = (x - cx) / rx;
        const double v = (y - cy) / ry;
        return u * u + v * v <= 1.0;
    }

    bool operator==(const Ellipse&) const = default;
};

/// Translates the body (and chest) by (dx, dy) pixels relative to the
/// current placement, from `time_s` onward.
struct PostureEvent {
    double time_s = 0.0;
    int dx = 0;
    int dy = 0;

    bool operator==(const PostureEvent&) const = default;
};

struct PhantomSpec {
    std::size_t width = 320;
    std::size_t height = 240;
    double fps = 10.0;
    double duration_s = 120.0;

    double bed_depth_mm = 2600.0;
    Ellipse body{160.0, 125.0, 100.0, 55.0};
    double body_depth_mm = 2200.0;

    Ellipse chest{150.0, 120.0, 35.0, 28.0};
    double breathing_amplitude_mm = 5.0;
    double breathing_freq_hz = 0.25;
    /// Amplitude of an optional 2f component relative to the fundamental.
    double second_harmonic_ratio = 0.0;

    double pepper_prob = 0.05;
    /// Gaussian stddev in mm per unit normalized radius (1 at the corners).
    double radial_noise_gain_mm = 10.0;
    double edge_flicker_mm = 30.0;

    std::vector<PostureEvent> posture_events;

    std::size_t frame_count() const {
        return static_cast<std::size_t>(std::llround(duration_s * fps));
    }

    /// The acceptance-default scene with every noise source switched off.
    PhantomSpec without_noise() const {
        PhantomSpec s = *this;
        s.pepper_prob = 0.0;
        s.radial_noise_gain_mm = 0.0;
        s.edge_flicker_mm = 0.0;
        return s;
    }

    bool operator==(const PhantomSpec&) const = default;

    void validate() const;
    KeyValueDoc to_key_values() const;
    static PhantomSpec from_key_values(const KeyValueDoc& doc);
};

struct GroundTruthEpoch {
    std::size_t start_frame = 0;
    int dx = 0;
    int dy = 0;
    Mask chest_mask;
};

struct GroundTruth {
    /// Chest pixels of the initial placement.
    Mask chest_mask;
    double breathing_freq_hz = 0.0;
    /// One entry per placement; a single entry without posture events.
    std::vector<GroundTruthEpoch> epochs;
};

struct Phantom {
    DepthSequence sequence;
    GroundTruth truth;
};

namespace detail {

inline Mask rasterize(const Ellipse& e, std::size_t w, std::size_t h, int dx = 0, int dy = 0) {
    Mask m(w, h);
    for (std::size_t y = 0; y < h; ++y) {
        for (std::size_t x = 0; x < w; ++x) {
            m(x, y) = e.contains(static_cast<double>(x) - dx, static_cast<double>(y) - dy) ? 1 : 0;
        }
    }
    return m;
}

/// Pixels whose 3x3 neighborhood straddles the region boundary.
inline Mask boundary_band(const Mask& region) {
    const auto w = region.width();
    const auto h = region.height();
    Mask out(w, h);
    for (std::size_t y = 0; y < h; ++y) {
        for (std::size_t x = 0; x < w; ++x) {
            const auto self = region(x, y);
            bool differs = false;
            for (std::size_t yy = y > 0 ? y - 1 : 0; yy <= std::min(h - 1, y + 1) && !differs; ++yy) {
                for (std::size_t xx = x > 0 ? x - 1 : 0; xx <= std::min(w - 1, x + 1); ++xx) {
                    if (region(xx, yy) != self) {
                        differs = true;
                        break;
                    }
                }
            }
            out(x, y) = differs ? 1 : 0;
        }
    }
    return out;
}

/// Placement offset of every frame after applying the cumulative events.
inline std::vector<std::pair<int, int>> frame_offsets(std::size_t frames, double fps,
                                                      std::span<const PostureEvent> events) {
    std::vector<std::pair<std::size_t, PostureEvent>> ordered;
    for (const auto& e : events) {
        if (e.time_s < 0.0) throw Error("posture event at negative time");
        ordered.emplace_back(static_cast<std::size_t>(std::llround(e.time_s * fps)), e);
    }
    std::stable_sort(ordered.begin(), ordered.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    std::vector<std::pair<int, int>> offsets(frames, {0, 0});
    int dx = 0;
    int dy = 0;
    std::size_t next = 0;
    for (std::size_t t = 0; t < frames; ++t) {
        while (next < ordered.size() && ordered[next].first <= t) {
            dx += ordered[next].second.dx;
            dy += ordered[next].second.dy;
            ++next;
        }
        offsets[t] = {dx, dy};
    }
    return offsets;
}

inline double breathing_displacement(const PhantomSpec& s, std::size_t frame) {
    const double phase = 2.0 * std::numbers::pi * s.breathing_freq_hz * static_cast<double>(frame) / s.fps;
    return s.breathing_amplitude_mm *
           (std::sin(phase) + s.second_harmonic_ratio * std::sin(2.0 * phase));
}

}  // namespace detail

inline void PhantomSpec::validate() const {
    if (width < 3 || height < 3) throw Error("phantom: frame must be at least 3x3");
    if (!(fps > 0.0)) throw Error("phantom: fps must be > 0");
    if (!(duration_s > 0.0) || frame_count() == 0) throw Error("phantom: duration yields no frames");
    if (!(breathing_freq_hz > 0.0 && breathing_freq_hz < fps / 2.0)) {
        throw Error("phantom: breathing_freq_hz must lie in (0, fps/2)");
    }
    if (!(pepper_prob >= 0.0 && pepper_prob <= 1.0)) throw Error("phantom: pepper_prob must be in [0,1]");
    if (breathing_amplitude_mm < 0.0 || radial_noise_gain_mm < 0.0 || edge_flicker_mm < 0.0) {
        throw Error("phantom: amplitudes and noise magnitudes must be >= 0");
    }
    if (body.rx <= 0.0 || body.ry <= 0.0 || chest.rx <= 0.0 || chest.ry <= 0.0) {
        throw Error("phantom: ellipse axes must be > 0");
    }
    if (bed_depth_mm < 0.0 || bed_depth_mm > 65535.0 || body_depth_mm < 0.0 || body_depth_mm > 65535.0) {
        throw Error("phantom: depths must be within 0..65535 mm");
    }
    if (!(body_depth_mm < bed_depth_mm)) throw Error("phantom: body must be closer than the bed");
    const auto body_mask = detail::rasterize(body, width, height);
    const auto chest_mask = detail::rasterize(chest, width, height);
    if (count_true(chest_mask) == 0) throw Error("phantom: chest region covers no pixel");
    if (!is_subset(chest_mask, body_mask)) throw Error("phantom: chest region must lie inside the body");
    // Every placement must keep the body's bounding box inside the frame.
    const auto offsets = detail::frame_offsets(frame_count(), fps, posture_events);
    for (const auto& [dx, dy] : offsets) {
        if (body.cx - body.rx + dx < 0.0 || body.cx + body.rx + dx > static_cast<double>(width - 1) ||
            body.cy - body.ry + dy < 0.0 || body.cy + body.ry + dy > static_cast<double>(height - 1)) {
            throw Error("phantom: posture translation (" + std::to_string(dx) + ", " +
                        std::to_string(dy) + ") moves the body out of the frame");
        }
    }
}

inline KeyValueDoc PhantomSpec::to_key_values() const {
    KeyValueDoc doc;
    doc.set("width", static_cast<std::int64_t>(width));
    doc.set("height", static_cast<std::int64_t>(height));
    doc.set("fps", fps);
    doc.set("duration_s", duration_s);
    doc.set("bed_depth_mm", bed_depth_mm);
    doc.set("body_depth_mm", body_depth_mm);
    doc.set("body_cx", body.cx);
    doc.set("body_cy", body.cy);
    doc.set("body_rx", body.rx);
    doc.set("body_ry", body.ry);
    doc.set("chest_cx", chest.cx);
    doc.set("chest_cy", chest.cy);
    doc.set("chest_rx", chest.rx);
    doc.set("chest_ry", chest.ry);
    doc.set("breathing_amplitude_mm", breathing_amplitude_mm);
    doc.set("breathing_freq_hz", breathing_freq_hz);
    doc.set("second_harmonic_ratio", second_harmonic_ratio);
    doc.set("pepper_prob", pepper_prob);
    doc.set("radial_noise_gain_mm", radial_noise_gain_mm);
    doc.set("edge_flicker_mm", edge_flicker_mm);
    for (const auto& e : posture_events) {
        doc.add("posture_event", format_double(e.time_s) + " " + std::to_string(e.dx) + " " +
                                     std::to_string(e.dy));
    }
    return doc;
}

/// Missing keys keep their defaults.
inline PhantomSpec PhantomSpec::from_key_values(const KeyValueDoc& doc) {
    PhantomSpec s;
    s.width = static_cast<std::size_t>(doc.get_int("width", static_cast<std::int64_t>(s.width)));
    s.height = static_cast<std::size_t>(doc.get_int("height", static_cast<std::int64_t>(s.height)));
    s.fps = doc.get_double("fps", s.fps);
    s.duration_s = doc.get_double("duration_s", s.duration_s);
    s.bed_depth_mm = doc.get_double("bed_depth_mm", s.bed_depth_mm);
    s.body_depth_mm = doc.get_double("body_depth_mm", s.body_depth_mm);
    s.body.cx = doc.get_double("body_cx", s.body.cx);
    s.body.cy = doc.get_double("body_cy", s.body.cy);
    s.body.rx = doc.get_double("body_rx", s.body.rx);
    s.body.ry = doc.get_double("body_ry", s.body.ry);
    s.chest.cx = doc.get_double("chest_cx", s.chest.cx);
    s.chest.cy = doc.get_double("chest_cy", s.chest.cy);
    s.chest.rx = doc.get_double("chest_rx", s.chest.rx);
    s.chest.ry = doc.get_double("chest_ry", s.chest.ry);
    s.breathing_amplitude_mm = doc.get_double("breathing_amplitude_mm", s.breathing_amplitude_mm);
    s.breathing_freq_hz = doc.get_double("breathing_freq_hz", s.breathing_freq_hz);
    s.second_harmonic_ratio = doc.get_double("second_harmonic_ratio", s.second_harmonic_ratio);
    s.pepper_prob = doc.get_double("pepper_prob", s.pepper_prob);
    s.radial_noise_gain_mm = doc.get_double("radial_noise_gain_mm", s.radial_noise_gain_mm);
    s.edge_flicker_mm = doc.get_double("edge_flicker_mm", s.edge_flicker_mm);
    for (const auto& value : doc.get_all("posture_event")) {
        std::istringstream in(value);
        PostureEvent e;
        if (!(in >> e.time_s >> e.dx >> e.dy)) {
            throw Error(doc.source + ": posture_event expects 'time_s dx dy', got '" + value + "'");
        }
        s.posture_events.push_back(e);
    }
    return s;
}

/// Noise-free depth of frame `t` in millimeters, before quantization.
inline RealImage render_clean_frame(const PhantomSpec& spec, std::size_t t, int dx = 0, int dy = 0) {
    RealImage out(spec.width, spec.height);
    const double breath = detail::breathing_displacement(spec, t);
    for (std::size_t y = 0; y < spec.height; ++y) {
        for (std::size_t x = 0; x < spec.width; ++x) {
            const double px = static_cast<double>(x) - dx;
            const double py = static_cast<double>(y) - dy;
            double d = spec.bed_depth_mm;
            if (spec.body.contains(px, py)) {
                d = spec.body_depth_mm;
                if (spec.chest.contains(px, py)) d -= breath;
            }
            out(x, y) = d;
        }
    }
    return out;
}

/// Deterministic in (spec, seed): every frame draws from its own generator
/// seeded by (seed, frame index), so frames can be rendered in any order.
inline Phantom generate_phantom(const PhantomSpec& spec, std::uint64_t seed,
                                std::size_t workers = default_worker_count()) {
    spec.validate();
    const std::size_t n = spec.frame_count();
    const auto w = spec.width;
    const auto h = spec.height;
    const auto offsets = detail::frame_offsets(n, spec.fps, spec.posture_events);

    Phantom out;
    out.sequence.fps = spec.fps;
    out.sequence.frames.resize(n);
    out.truth.breathing_freq_hz = spec.breathing_freq_hz;

    // Distinct placements: ground-truth epochs plus their edge bands.
    std::vector<Mask> edge_bands;
    std::vector<std::size_t> epoch_of_frame(n, 0);
    for (std::size_t t = 0; t < n; ++t) {
        const auto [dx, dy] = offsets[t];
        if (out.truth.epochs.empty() || out.truth.epochs.back().dx != dx || out.truth.epochs.back().dy != dy) {
            out.truth.epochs.push_back({t, dx, dy, detail::rasterize(spec.chest, w, h, dx, dy)});
            edge_bands.push_back(detail::boundary_band(detail::rasterize(spec.body, w, h, dx, dy)));
        }
        epoch_of_frame[t] = out.truth.epochs.size() - 1;
    }
    out.truth.chest_mask = out.truth.epochs.front().chest_mask;

    const double cx = (static_cast<double>(w) - 1.0) / 2.0;
    const double cy = (static_cast<double>(h) - 1.0) / 2.0;
    const double half_diag = std::hypot(cx, cy);

    parallel_for(n, workers, [&](std::size_t begin, std::size_t end) {
        for (std::size_t t = begin; t < end; ++t) {
            const auto [dx, dy] = offsets[t];
            const auto clean = render_clean_frame(spec, t, dx, dy);
            const Mask& edges = edge_bands[epoch_of_frame[t]];
            std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                              static_cast<std::uint32_t>(t), static_cast<std::uint32_t>(t >> 32)};
            std::mt19937_64 rng(seq);
            std::normal_distribution<double> gauss(0.0, 1.0);
            std::uniform_real_distribution<double> flicker(-spec.edge_flicker_mm, spec.edge_flicker_mm);
            std::bernoulli_distribution pepper(spec.pepper_prob);

            DepthFrame frame(w, h);
            for (std::size_t y = 0; y < h; ++y) {
                for (std::size_t x = 0; x < w; ++x) {
                    double d = clean(x, y);
                    if (spec.radial_noise_gain_mm > 0.0) {
                        const double r = std::hypot(static_cast<double>(x) - cx, static_cast<double>(y) - cy) / half_diag;
                        d += spec.radial_noise_gain_mm * r * gauss(rng);
                    }
                    if (spec.edge_flicker_mm > 0.0 && edges(x, y)) d += flicker(rng);
                    d = std::clamp(std::round(d), 0.0, 65535.0);
                    if (spec.pepper_prob > 0.0 && pepper(rng)) d = 0.0;
                    frame(x, y) = static_cast<std::uint16_t>(d);
                }
            }
            out.sequence.frames[t] = std::move(frame);
        }
    });
    return out;
}

/// Shifts frame content by the cumulative event translations from each
/// event's frame onward; uncovered pixels take `fill_mm`.
inline DepthSequence apply_posture_events(const DepthSequence& sequence,
                                          std::span<const PostureEvent> events,
                                          std::uint16_t fill_mm) {
    const auto offsets = detail::frame_offsets(sequence.length(), sequence.fps, events);
    const auto w = static_cast<long>(sequence.width());
    const auto h = static_cast<long>(sequence.height());
    DepthSequence out;
    out.fps = sequence.fps;
    out.frames.reserve(sequence.length());
    for (std::size_t t = 0; t < sequence.length(); ++t) {
        const auto [dx, dy] = offsets[t];
        if (std::labs(dx) >= w || std::labs(dy) >= h) {
            throw Error("posture translation (" + std::to_string(dx) + ", " + std::to_string(dy) +
                        ") at frame " + std::to_string(t) + " leaves the frame");
        }
        if (dx == 0 && dy == 0) {
            out.frames.push_back(sequence.frames[t]);
            continue;
        }
        const auto& src = sequence.frames[t];
        DepthFrame dst(src.width(), src.height(), fill_mm);
        for (long y = 0; y < h; ++y) {
            const long sy = y - dy;
            if (sy < 0 || sy >= h) continue;
            for (long x = 0; x < w; ++x) {
                const long sx = x - dx;
                if (sx < 0 || sx >= w) continue;
                dst(static_cast<std::size_t>(x), static_cast<std::size_t>(y)) =
                    src(static_cast<std::size_t>(sx), static_cast<std::size_t>(sy));
            }
        }
        out.frames.push_back(std::move(dst));
    }
    return out;
}

}  // namespace chestseg
