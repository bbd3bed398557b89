#pragma once

// Shared helpers for the test binaries: scratch directories, brute-force
// oracles and small phantoms that keep the suites fast.

#include <algorithm>
#include <cmath>
#include <complex>
#include <filesystem>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "chestseg/grid.hpp"
#include "chestseg/phantom.hpp"
#include "chestseg/pipeline.hpp"

namespace chestseg::testing {

/// Removed on destruction.
class ScratchDir {
public:
    explicit ScratchDir(const std::string& tag) {
        std::random_device rd;
        path_ = std::filesystem::temp_directory_path() /
                ("chestseg_" + tag + "_" + std::to_string(rd()) + "_" + std::to_string(rd()));
        std::filesystem::create_directories(path_);
    }
    ~ScratchDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    ScratchDir(const ScratchDir&) = delete;
    ScratchDir& operator=(const ScratchDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

/// O(L^2) one-sided DFT magnitudes of the mean-removed, optionally
/// Hann-windowed signal, written straight from the definition.
inline std::vector<double> direct_dft_magnitudes(std::vector<double> x, bool hann) {
    const std::size_t L = x.size();
    double mean = 0.0;
    for (double v : x) mean += v;
    mean /= static_cast<double>(L);
    for (std::size_t t = 0; t < L; ++t) {
        x[t] -= mean;
        if (hann) x[t] *= 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * static_cast<double>(t) / static_cast<double>(L - 1)));
    }
    std::vector<double> mags(L / 2 + 1);
    for (std::size_t k = 0; k < mags.size(); ++k) {
        std::complex<double> acc = 0.0;
        for (std::size_t t = 0; t < L; ++t) {
            const double phase = -2.0 * std::numbers::pi * static_cast<double>(k * t % L) / static_cast<double>(L);
            acc += x[t] * std::complex<double>(std::cos(phase), std::sin(phase));
        }
        mags[k] = std::abs(acc);
    }
    return mags;
}

/// Median of the non-zero values in the clipped window around each zero
/// pixel, found by sorting. Zero pixels with no valid neighbor stay 0.
inline NormalizedFrame sorted_window_inpaint(const NormalizedFrame& f, int radius) {
    NormalizedFrame out = f;
    const long w = static_cast<long>(f.width());
    const long h = static_cast<long>(f.height());
    for (long y = 0; y < h; ++y) {
        for (long x = 0; x < w; ++x) {
            if (f(static_cast<std::size_t>(x), static_cast<std::size_t>(y)) != 0.0) continue;
            std::vector<double> v;
            for (long yy = std::max(0L, y - radius); yy <= std::min(h - 1, y + radius); ++yy) {
                for (long xx = std::max(0L, x - radius); xx <= std::min(w - 1, x + radius); ++xx) {
                    const double s = f(static_cast<std::size_t>(xx), static_cast<std::size_t>(yy));
                    if (s != 0.0) v.push_back(s);
                }
            }
            double m = 0.0;
            if (!v.empty()) {
                std::sort(v.begin(), v.end());
                m = v.size() % 2 ? v[v.size() / 2] : 0.5 * (v[v.size() / 2 - 1] + v[v.size() / 2]);
            }
            out(static_cast<std::size_t>(x), static_cast<std::size_t>(y)) = m;
        }
    }
    return out;
}

inline Mask random_mask(std::size_t w, std::size_t h, double p, std::mt19937_64& rng) {
    std::bernoulli_distribution coin(p);
    Mask m(w, h);
    for (auto& v : m.pixels()) v = coin(rng) ? 1 : 0;
    return m;
}

/// A quarter-size scene: 160x120 at 10 fps for 60 s, two 30 s segments.
inline PhantomSpec small_spec() {
    PhantomSpec s;
    s.width = 160;
    s.height = 120;
    s.duration_s = 60.0;
    s.body = {80.0, 62.0, 50.0, 28.0};
    s.chest = {75.0, 60.0, 18.0, 14.0};
    return s;
}

struct Scores {
    double iou = 0.0;
    double precision = 0.0;
    double recall = 0.0;
};

inline Scores score(const Mask& predicted, const Mask& truth) {
    const double inter = static_cast<double>(count_true(mask_and(predicted, truth)));
    const double uni = static_cast<double>(count_true(mask_or(predicted, truth)));
    const double p = static_cast<double>(count_true(predicted));
    const double t = static_cast<double>(count_true(truth));
    return {uni > 0 ? inter / uni : 1.0, p > 0 ? inter / p : 0.0, t > 0 ? inter / t : 0.0};
}

/// The reference run behind data/calibration.txt: the default scene with
/// every noise source off, default pipeline settings.
inline constexpr std::uint64_t kCalibrationSeed = 1;

inline PhantomSpec calibration_spec() { return PhantomSpec{}.without_noise(); }

inline double calibration_iou(std::size_t workers = 1) {
    const auto ph = generate_phantom(calibration_spec(), kCalibrationSeed, workers);
    const auto res = segment_sequence(ph.sequence, PipelineConfig{}, {workers, false});
    return score(res.mask, ph.truth.chest_mask).iou;
}

}  // namespace chestseg::testing
