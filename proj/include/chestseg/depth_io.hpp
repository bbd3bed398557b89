#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <optional>
#include <string>
#include <vector>

#include "chestseg/grid.hpp"
#include "chestseg/kv.hpp"

namespace chestseg {

inline constexpr double kDefaultMaxDistanceMm = 3000.0;

/// Ordered depth frames of uniform size plus the sampling rate.
struct DepthSequence {
    std::vector<DepthFrame> frames;
    double fps = 0.0;

    std::size_t length() const noexcept { return frames.size(); }
    std::size_t width() const noexcept { return frames.empty() ? 0 : frames.front().width(); }
    std::size_t height() const noexcept { return frames.empty() ? 0 : frames.front().height(); }

    void validate() const {
        if (!(fps > 0.0)) throw Error("sequence fps must be > 0");
        for (std::size_t i = 1; i < frames.size(); ++i) {
            if (!frames[i].same_shape(frames[0])) {
                throw Error("frame " + std::to_string(i) + " is " +
                            std::to_string(frames[i].width()) + "x" +
                            std::to_string(frames[i].height()) + ", expected " +
                            std::to_string(frames[0].width()) + "x" +
                            std::to_string(frames[0].height()));
            }
        }
    }
};

// ---------------------------------------------------------------------------
// PGM (binary P5)

struct PgmImage {
    std::size_t width = 0;
    std::size_t height = 0;
    std::uint32_t maxval = 0;
    std::vector<std::uint16_t> samples;
};

namespace detail {

inline std::string next_pgm_token(std::istream& in, const std::string& name) {
    std::string token;
    int c = in.get();
    for (;;) {
        while (c != EOF && std::isspace(c)) c = in.get();
        if (c == '#') {
            while (c != EOF && c != '\n') c = in.get();
            continue;
        }
        break;
    }
    while (c != EOF && !std::isspace(c) && c != '#') {
        token.push_back(static_cast<char>(c));
        c = in.get();
    }
    if (token.empty()) throw Error(name + ": truncated PGM header");
    // The single whitespace after maxval is consumed here; '#' is put back.
    if (c == '#') in.unget();
    return token;
}

}  // namespace detail

inline PgmImage read_pgm(const std::filesystem::path& path) {
    const std::string name = path.string();
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(name + ": cannot open");
    if (detail::next_pgm_token(in, name) != "P5") throw Error(name + ": not a binary PGM (P5)");
    PgmImage img;
    img.width = static_cast<std::size_t>(parse_int(detail::next_pgm_token(in, name), name));
    img.height = static_cast<std::size_t>(parse_int(detail::next_pgm_token(in, name), name));
    const auto maxval = parse_int(detail::next_pgm_token(in, name), name);
    if (img.width == 0 || img.height == 0) throw Error(name + ": zero-sized image");
    if (maxval < 1 || maxval > 65535) throw Error(name + ": invalid maxval");
    img.maxval = static_cast<std::uint32_t>(maxval);
    const std::size_t bytes_per_sample = img.maxval > 255 ? 2 : 1;
    const std::size_t n = img.width * img.height;
    std::vector<unsigned char> raw(n * bytes_per_sample);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (static_cast<std::size_t>(in.gcount()) != raw.size()) {
        throw Error(name + ": truncated pixel data");
    }
    img.samples.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        img.samples[i] = bytes_per_sample == 2
                             ? static_cast<std::uint16_t>((raw[2 * i] << 8) | raw[2 * i + 1])
                             : raw[i];
    }
    return img;
}

inline void write_pgm(const std::filesystem::path& path, std::size_t width, std::size_t height,
                      std::uint32_t maxval, const std::vector<std::uint16_t>& samples) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(path.string() + ": cannot write");
    out << "P5\n" << width << ' ' << height << '\n' << maxval << '\n';
    std::vector<unsigned char> raw;
    if (maxval > 255) {
        raw.reserve(samples.size() * 2);
        for (auto s : samples) {
            raw.push_back(static_cast<unsigned char>(s >> 8));
            raw.push_back(static_cast<unsigned char>(s & 0xff));
        }
    } else {
        raw.assign(samples.begin(), samples.end());
    }
    out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (!out) throw Error(path.string() + ": write failed");
}

inline DepthFrame read_depth_frame(const std::filesystem::path& path) {
    auto img = read_pgm(path);
    return DepthFrame(img.width, img.height, std::move(img.samples));
}

/// 16-bit P5, maxval 65535, big-endian samples.
inline void write_depth_frame(const std::filesystem::path& path, const DepthFrame& frame) {
    write_pgm(path, frame.width(), frame.height(), 65535, frame.data());
}

/// Binary masks are stored as 8-bit 0/255.
inline void save_mask(const Mask& mask, const std::filesystem::path& path) {
    std::vector<std::uint16_t> samples(mask.size());
    for (std::size_t i = 0; i < mask.size(); ++i) samples[i] = mask[i] ? 255 : 0;
    write_pgm(path, mask.width(), mask.height(), 255, samples);
}

/// Any non-zero sample is true.
inline Mask load_mask(const std::filesystem::path& path) {
    const auto img = read_pgm(path);
    Mask m(img.width, img.height);
    for (std::size_t i = 0; i < m.size(); ++i) m[i] = img.samples[i] != 0 ? 1 : 0;
    return m;
}

/// Linear 8-bit quantization: min maps to 0, max to 255, level =
/// floor(255 * (v - min) / (max - min) + 0.5), so 0.5 of the range lands on
/// 128. A constant image is written all-zero.
inline std::vector<std::uint16_t> quantize_gray(const RealImage& img) {
    std::vector<std::uint16_t> out(img.size(), 0);
    if (img.empty()) return out;
    double lo = img[0];
    double hi = img[0];
    for (double v : img.pixels()) {
        if (!std::isfinite(v)) throw Error("save_gray_image: non-finite pixel value");
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    if (hi <= lo) return out;
    for (std::size_t i = 0; i < img.size(); ++i) {
        out[i] = static_cast<std::uint16_t>(std::floor(255.0 * (img[i] - lo) / (hi - lo) + 0.5));
    }
    return out;
}

inline void save_gray_image(const RealImage& img, const std::filesystem::path& path) {
    write_pgm(path, img.width(), img.height(), 255, quantize_gray(img));
}

inline void save_gray_image(const Mask& mask, const std::filesystem::path& path) {
    save_mask(mask, path);
}

// ---------------------------------------------------------------------------
// Normalization

/// Maps raw millimeters to [0, 1] by dividing by max_distance_mm. Readings
/// beyond the threshold become 0, the same as a dropout.
inline NormalizedFrame normalize_frame(const DepthFrame& frame, double max_distance_mm) {
    if (!(max_distance_mm > 0.0)) throw Error("normalize_frame: max_distance_mm must be > 0");
    NormalizedFrame out(frame.width(), frame.height());
    for (std::size_t i = 0; i < frame.size(); ++i) {
        const double raw = frame[i];
        out[i] = raw > max_distance_mm ? 0.0 : raw / max_distance_mm;
    }
    return out;
}

/// Overload for re-normalizing already real-valued frames.
inline NormalizedFrame normalize_frame(const NormalizedFrame& frame, double max_distance) {
    if (!(max_distance > 0.0)) throw Error("normalize_frame: max_distance_mm must be > 0");
    NormalizedFrame out(frame.width(), frame.height());
    for (std::size_t i = 0; i < frame.size(); ++i) {
        const double raw = frame[i];
        out[i] = raw > max_distance ? 0.0 : raw / max_distance;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Manifest

/// Manifest grammar (see kv.hpp):
///
///   fps = 10
///   width = 320
///   height = 240
///   gt_mask = ground_truth_mask.pgm      (optional)
///   gt_freq_hz = 0.25                    (optional)
///   ---
///   frames/frame_00000.pgm
///   ...
///
/// Relative frame and mask paths are resolved against the manifest's
/// directory.
struct SequenceManifest {
    std::vector<std::filesystem::path> frames;
    double fps = 0.0;
    std::size_t width = 0;
    std::size_t height = 0;
    std::optional<std::filesystem::path> gt_mask;
    std::optional<double> gt_freq_hz;
};

inline SequenceManifest parse_manifest(const std::filesystem::path& manifest_path) {
    const auto doc = read_key_value_file(manifest_path);
    const auto base = manifest_path.parent_path();
    SequenceManifest m;
    m.fps = doc.require_double("fps");
    const auto w = doc.require_int("width");
    const auto h = doc.require_int("height");
    if (!(m.fps > 0.0)) throw Error(doc.source + ": fps must be > 0");
    if (w <= 0 || h <= 0) throw Error(doc.source + ": width and height must be positive");
    m.width = static_cast<std::size_t>(w);
    m.height = static_cast<std::size_t>(h);
    if (auto gt = doc.get("gt_mask")) m.gt_mask = base / *gt;
    if (doc.has("gt_freq_hz")) m.gt_freq_hz = doc.require_double("gt_freq_hz");
    for (const auto& line : doc.body) m.frames.push_back(base / line);
    if (m.frames.empty()) throw Error(doc.source + ": manifest lists no frames");
    return m;
}

/// Frame paths are written relative to the manifest directory when possible.
inline void write_manifest(const std::filesystem::path& manifest_path, const SequenceManifest& m) {
    KeyValueDoc doc;
    doc.set("fps", m.fps);
    doc.set("width", static_cast<std::int64_t>(m.width));
    doc.set("height", static_cast<std::int64_t>(m.height));
    const auto base = manifest_path.parent_path();
    auto rel = [&](const std::filesystem::path& p) {
        return p.is_relative() ? p.generic_string() : p.lexically_relative(base).generic_string();
    };
    if (m.gt_mask) doc.set("gt_mask", rel(*m.gt_mask));
    if (m.gt_freq_hz) doc.set("gt_freq_hz", *m.gt_freq_hz);
    for (const auto& f : m.frames) doc.body.push_back(rel(f));
    write_key_value_file(manifest_path, doc);
}

inline DepthSequence load_sequence(const SequenceManifest& m) {
    DepthSequence seq;
    seq.fps = m.fps;
    seq.frames.reserve(m.frames.size());
    for (std::size_t i = 0; i < m.frames.size(); ++i) {
        const auto& path = m.frames[i];
        if (!std::filesystem::exists(path)) {
            throw Error("frame " + std::to_string(i) + ": missing file '" + path.string() + "'");
        }
        DepthFrame f;
        try {
            f = read_depth_frame(path);
        } catch (const Error& e) {
            throw Error("frame " + std::to_string(i) + ": " + e.what());
        }
        if (f.width() != m.width || f.height() != m.height) {
            throw Error("frame " + std::to_string(i) + " ('" + path.string() +
                        "'): dimension mismatch, " + std::to_string(f.width()) + "x" +
                        std::to_string(f.height()) + " vs manifest " + std::to_string(m.width) +
                        "x" + std::to_string(m.height));
        }
        seq.frames.push_back(std::move(f));
    }
    return seq;
}

inline DepthSequence load_sequence(const std::filesystem::path& manifest_path) {
    return load_sequence(parse_manifest(manifest_path));
}

}  // namespace chestseg
