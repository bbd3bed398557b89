#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace chestseg {

/// Thrown for every recoverable failure in the library: bad configuration,
/// violated preconditions, I/O errors. The message names the offending
/// file, frame or segment where one exists.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Row-major 2-D grid. All image-like types in the library are Grids.
template <typename T>
class Grid {
public:
    using value_type = T;

    Grid() = default;

    Grid(std::size_t width, std::size_t height, T fill = T{})
        : width_(width), height_(height), data_(width * height, fill) {}

    Grid(std::size_t width, std::size_t height, std::vector<T> data)
        : width_(width), height_(height), data_(std::move(data)) {
        if (data_.size() != width_ * height_) {
            throw Error("grid data length " + std::to_string(data_.size()) +
                        " does not match " + std::to_string(width_) + "x" +
                        std::to_string(height_));
        }
    }

    std::size_t width() const noexcept { return width_; }
    std::size_t height() const noexcept { return height_; }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    T& operator()(std::size_t x, std::size_t y) noexcept { return data_[y * width_ + x]; }
    const T& operator()(std::size_t x, std::size_t y) const noexcept {
        return data_[y * width_ + x];
    }

    T& operator[](std::size_t i) noexcept { return data_[i]; }
    const T& operator[](std::size_t i) const noexcept { return data_[i]; }

    std::span<T> row(std::size_t y) noexcept { return {data_.data() + y * width_, width_}; }
    std::span<const T> row(std::size_t y) const noexcept {
        return {data_.data() + y * width_, width_};
    }

    std::span<T> pixels() noexcept { return data_; }
    std::span<const T> pixels() const noexcept { return data_; }
    const std::vector<T>& data() const noexcept { return data_; }

    bool same_shape(const auto& other) const noexcept {
        return width_ == other.width() && height_ == other.height();
    }

    bool operator==(const Grid&) const = default;

private:
    std::size_t width_ = 0;
    std::size_t height_ = 0;
    std::vector<T> data_;
};

/// Raw sensor frame: millimeters, 0 = no reading.
using DepthFrame = Grid<std::uint16_t>;
/// Depth divided by the distance threshold; values in [0, 1], 0 = invalid.
using NormalizedFrame = Grid<double>;
/// Any real-valued per-pixel image (amplitudes, confidences).
using RealImage = Grid<double>;
/// Binary image stored as 0/1 bytes.
using Mask = Grid<std::uint8_t>;
/// Pixels excluded from segmentation (true = ignore).
using IgnoreMask = Mask;
/// Per-segment candidate chest pixels.
using SegmentMask = Mask;
/// Final whole-recording chest segmentation.
using SegmentationMask = Mask;
using AmplitudeImage = RealImage;
using ConfidenceMap = RealImage;
using Histogram = Grid<std::uint32_t>;

inline std::size_t count_true(const Mask& m) {
    return static_cast<std::size_t>(std::count_if(m.pixels().begin(), m.pixels().end(),
                                                  [](std::uint8_t v) { return v != 0; }));
}

inline void require_same_shape(const auto& a, const auto& b, const char* what) {
    if (!a.same_shape(b)) {
        throw Error(std::string(what) + ": dimension mismatch (" + std::to_string(a.width()) +
                    "x" + std::to_string(a.height()) + " vs " + std::to_string(b.width()) + "x" +
                    std::to_string(b.height()) + ")");
    }
}

inline Mask mask_and(const Mask& a, const Mask& b) {
    require_same_shape(a, b, "mask_and");
    Mask out(a.width(), a.height());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = (a[i] && b[i]) ? 1 : 0;
    return out;
}

inline Mask mask_or(const Mask& a, const Mask& b) {
    require_same_shape(a, b, "mask_or");
    Mask out(a.width(), a.height());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = (a[i] || b[i]) ? 1 : 0;
    return out;
}

inline Mask mask_not(const Mask& a) {
    Mask out(a.width(), a.height());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] ? 0 : 1;
    return out;
}

/// a minus b.
inline Mask mask_subtract(const Mask& a, const Mask& b) {
    require_same_shape(a, b, "mask_subtract");
    Mask out(a.width(), a.height());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = (a[i] && !b[i]) ? 1 : 0;
    return out;
}

inline bool is_subset(const Mask& a, const Mask& b) {
    require_same_shape(a, b, "is_subset");
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i] && !b[i]) return false;
    }
    return true;
}

}  // namespace chestseg
