#include <gtest/gtest.h>

#include <functional>
#include <numbers>
#include <random>

#include "chestseg/spectral.hpp"
#include "support.hpp"

using namespace chestseg;
namespace ct = chestseg::testing;

namespace {

std::vector<double> random_signal(std::size_t n, std::mt19937_64& rng) {
    std::normal_distribution<double> g(0.5, 0.2);
    std::vector<double> x(n);
    for (auto& v : x) v = g(rng);
    return x;
}

/// Segment of L frames where pixel (x, y) carries a sinusoid of the given
/// amplitude and frequency on top of a per-pixel offset.
std::vector<NormalizedFrame> sine_segment(std::size_t w, std::size_t h, std::size_t L, double fps,
                                          const std::function<double(std::size_t, std::size_t)>& amp, double f) {
    std::vector<NormalizedFrame> frames;
    for (std::size_t t = 0; t < L; ++t) {
        NormalizedFrame fr(w, h);
        for (std::size_t y = 0; y < h; ++y) {
            for (std::size_t x = 0; x < w; ++x) {
                fr(x, y) = 0.5 + 0.001 * static_cast<double>(x + y) +
                           amp(x, y) * std::sin(2.0 * std::numbers::pi * f * static_cast<double>(t) / fps);
            }
        }
        frames.push_back(std::move(fr));
    }
    return frames;
}

}  // namespace

TEST(Spectrum, MatchesDirectDft) {
    std::mt19937_64 rng(21);
    for (std::size_t L : {2u, 3u, 16u, 50u, 128u, 301u}) {
        for (Window w : {Window::Rect, Window::Hann}) {
            const auto x = random_signal(L, rng);
            const auto fast = pixel_spectrum(x, 10.0, w);
            const auto slow = ct::direct_dft_magnitudes(x, w == Window::Hann);
            ASSERT_EQ(fast.magnitudes.size(), slow.size());
            double scale = 0.0;
            for (double v : slow) scale = std::max(scale, v);
            for (std::size_t k = 0; k < slow.size(); ++k) {
                ASSERT_NEAR(fast.magnitudes[k], slow[k], 1e-9 * std::max(1.0, scale)) << "L=" << L << " k=" << k;
                ASSERT_DOUBLE_EQ(fast.frequencies[k], static_cast<double>(k) * 10.0 / static_cast<double>(L));
            }
        }
    }
}

TEST(Spectrum, ParsevalOnMeanRemovedSignal) {
    std::mt19937_64 rng(22);
    for (std::size_t L : {64u, 65u}) {
        auto x = random_signal(L, rng);
        const auto s = pixel_spectrum(x, 1.0);
        double mean = 0.0;
        for (double v : x) mean += v;
        mean /= static_cast<double>(L);
        double time_energy = 0.0;
        for (double v : x) time_energy += (v - mean) * (v - mean);
        // One-sided: interior bins stand for two conjugate bins.
        double freq_energy = 0.0;
        for (std::size_t k = 0; k < s.magnitudes.size(); ++k) {
            const bool self_conjugate = k == 0 || (L % 2 == 0 && k == L / 2);
            freq_energy += (self_conjugate ? 1.0 : 2.0) * s.magnitudes[k] * s.magnitudes[k];
        }
        EXPECT_NEAR(freq_energy / static_cast<double>(L), time_energy, 1e-9 * time_energy);
    }
}

TEST(Spectrum, DcBinVanishesAndOffsetIsIgnored) {
    std::mt19937_64 rng(23);
    const auto x = random_signal(100, rng);
    auto shifted = x;
    for (auto& v : shifted) v += 17.0;
    const auto a = pixel_spectrum(x, 10.0);
    const auto b = pixel_spectrum(shifted, 10.0);
    EXPECT_NEAR(a.magnitudes[0], 0.0, 1e-9);
    for (std::size_t k = 0; k < a.magnitudes.size(); ++k) EXPECT_NEAR(a.magnitudes[k], b.magnitudes[k], 1e-9);
}

TEST(Spectrum, PureToneOnBinHasHalfLengthTimesAmplitude) {
    const std::size_t L = 300;
    std::vector<double> x(L);
    for (std::size_t t = 0; t < L; ++t) x[t] = 2.0 * std::sin(2.0 * std::numbers::pi * 9.0 * static_cast<double>(t) / L);
    const auto s = pixel_spectrum(x, 10.0);
    EXPECT_NEAR(s.magnitudes[9], 300.0, 1e-9);
    EXPECT_NEAR(s.magnitudes[8], 0.0, 1e-9);
    EXPECT_NEAR(s.magnitudes[10], 0.0, 1e-9);
}

TEST(Spectrum, TooShortOrBadFpsIsAnError) {
    const std::vector<double> one{1.0};
    const std::vector<double> two{1.0, 2.0};
    EXPECT_THROW(pixel_spectrum(one, 10.0), Error);
    EXPECT_THROW(pixel_spectrum(two, 0.0), Error);
}

TEST(BandBins, DefaultBandAtTenFps) {
    // 300 frames at 10 fps: bin width 1/30 Hz, band 0.2..0.33 covers bins 6..9.
    const auto r = band_bins(300, 10.0, 0.2, 0.33);
    EXPECT_EQ(r.first, 6u);
    EXPECT_EQ(r.last, 9u);
    const auto edge = band_bins(100, 10.0, 0.2, 0.3);  // bins exactly on both edges
    EXPECT_EQ(edge.first, 2u);
    EXPECT_EQ(edge.last, 3u);
}

TEST(BandBins, NeverIncludesDcAndRejectsEmptyBands) {
    EXPECT_EQ(band_bins(10, 10.0, 0.0, 2.0).first, 1u);
    try {
        band_bins(10, 10.0, 0.2, 0.33);
        FAIL() << "expected an error";
    } catch (const Error& e) {
        EXPECT_NE(std::string(e.what()).find("contains no DFT bin"), std::string::npos);
    }
}

TEST(Segments, NonOverlappingAndOverlappingWindows) {
    SegmentConfig cfg;
    cfg.segment_len = 300;
    cfg.segment_stride = 300;
    const auto a = iter_segments(1200, cfg);
    ASSERT_EQ(a.size(), 4u);
    EXPECT_EQ(a[3].start, 900u);
    EXPECT_EQ(iter_segments(1299, cfg).size(), 4u);
    cfg.segment_stride = 100;
    const auto b = iter_segments(600, cfg);
    ASSERT_EQ(b.size(), 4u);
    EXPECT_EQ(b[1].start, 100u);
    try {
        iter_segments(1, cfg);
        FAIL() << "expected an error";
    } catch (const Error& e) {
        EXPECT_NE(std::string(e.what()).find("sequence shorter than one segment"), std::string::npos);
    }
}

TEST(SegmentSpectra, EachPixelMatchesItsOwnSpectrum) {
    const std::size_t L = 64;
    const double fps = 10.0;
    auto frames = sine_segment(6, 5, L, fps, [](std::size_t x, std::size_t y) { return 0.01 * double(x * y); }, 0.25);
    std::mt19937_64 rng(24);
    std::normal_distribution<double> g(0.0, 0.002);
    for (auto& f : frames) {
        for (auto& v : f.pixels()) v += g(rng);
    }
    IgnoreMask ignore(6, 5);
    ignore(0, 0) = 1;
    const auto bins = band_bins(L, fps, 0.2, 0.33);
    const auto sp = segment_spectra(frames, ignore, bins, Window::Hann, 2);
    for (std::size_t y = 0; y < 5; ++y) {
        for (std::size_t x = 0; x < 6; ++x) {
            if (ignore(x, y)) {
                EXPECT_EQ(sp.in_band(x, y), 0.0);
                EXPECT_EQ(sp.full(x, y), 0.0);
                continue;
            }
            std::vector<double> series;
            for (const auto& f : frames) series.push_back(f(x, y));
            const auto s = pixel_spectrum(series, fps, Window::Hann);
            double band = 0.0, full = 0.0;
            std::vector<double> outside;
            for (std::size_t k = 1; k < s.magnitudes.size(); ++k) {
                full = std::max(full, s.magnitudes[k]);
                if (bins.contains(k)) band = std::max(band, s.magnitudes[k]);
                else outside.push_back(s.magnitudes[k]);
            }
            std::sort(outside.begin(), outside.end());
            const double med = outside.size() % 2 ? outside[outside.size() / 2]
                                                  : 0.5 * (outside[outside.size() / 2 - 1] + outside[outside.size() / 2]);
            EXPECT_NEAR(sp.in_band(x, y), band, 1e-12);
            EXPECT_NEAR(sp.full(x, y), full, 1e-12);
            EXPECT_NEAR(sp.noise_floor(x, y), med, 1e-12);
        }
    }
}

TEST(SegmentSpectra, WorkerCountDoesNotChangeResults) {
    auto frames = sine_segment(17, 13, 50, 10.0, [](std::size_t x, std::size_t) { return 0.001 * double(x); }, 0.3);
    const IgnoreMask ignore(17, 13);
    const auto bins = band_bins(50, 10.0, 0.2, 0.33);
    const auto a = segment_spectra(frames, ignore, bins, Window::Rect, 1);
    const auto b = segment_spectra(frames, ignore, bins, Window::Rect, 5);
    EXPECT_EQ(a.in_band, b.in_band);
    EXPECT_EQ(a.full, b.full);
    EXPECT_EQ(a.noise_floor, b.noise_floor);
}

TEST(SegmentSpectra, OutOfBandToneIsNotInBandAmplitude) {
    // 1 Hz is far outside 0.2..0.33 Hz: the band-limited image stays tiny
    // while the unrestricted one sees the tone.
    auto frames = sine_segment(4, 4, 100, 10.0, [](std::size_t, std::size_t) { return 0.1; }, 1.0);
    const IgnoreMask ignore(4, 4);
    SegmentConfig cfg;
    cfg.segment_len = 100;
    const auto band = band_limited_amplitude(frames, ignore, cfg, 10.0);
    const auto full = unrestricted_amplitude(frames, ignore);
    EXPECT_LT(band(1, 1), 1e-9);
    EXPECT_NEAR(full(1, 1), 0.1 * 50.0, 1e-9);
}

TEST(Threshold, RelativeToMaximumOverNonIgnoredPixels) {
    AmplitudeImage amp(4, 1, std::vector<double>{1.0, 2.9, 3.0, 10.0});
    const auto m = threshold_amplitude(amp, 0.3);
    EXPECT_EQ(m, Mask(4, 1, std::vector<std::uint8_t>{0, 0, 1, 1}));
    IgnoreMask ig(4, 1);
    ig(3, 0) = 1;
    EXPECT_EQ(threshold_amplitude(amp, 0.5, &ig), Mask(4, 1, std::vector<std::uint8_t>{0, 1, 1, 0}));
    EXPECT_EQ(count_true(threshold_amplitude(AmplitudeImage(3, 3, 0.0), 0.3)), 0u);
    EXPECT_THROW(threshold_amplitude(amp, 0.0), Error);
    EXPECT_THROW(threshold_amplitude(amp, 1.0), Error);
}

TEST(Threshold, AntitoneInFraction) {
    std::mt19937_64 rng(25);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    AmplitudeImage amp(20, 20);
    for (auto& v : amp.pixels()) v = u(rng);
    Mask prev = threshold_amplitude(amp, 0.05);
    for (int k = 1; k < 10; ++k) {
        const auto cur = threshold_amplitude(amp, k / 10.0);
        EXPECT_TRUE(is_subset(cur, prev)) << k;
        prev = cur;
    }
}

TEST(Threshold, SegmentMaskIsInvariantToDepthOffset) {
    const std::size_t L = 300;
    auto frames = sine_segment(20, 16, L, 10.0,
                               [](std::size_t x, std::size_t y) { return (x > 6 && x < 14 && y > 4 && y < 11) ? 0.002 : 0.0; },
                               0.25);
    std::mt19937_64 rng(26);
    std::normal_distribution<double> g(0.0, 0.0003);
    for (auto& f : frames) {
        for (auto& v : f.pixels()) v += g(rng);
    }
    auto shifted = frames;
    for (auto& f : shifted) {
        for (auto& v : f.pixels()) v += 0.125;
    }
    SegmentConfig cfg;
    const IgnoreMask ignore(20, 16);
    const auto a = threshold_amplitude(band_limited_amplitude(frames, ignore, cfg, 10.0), cfg);
    const auto b = threshold_amplitude(band_limited_amplitude(shifted, ignore, cfg, 10.0), cfg);
    EXPECT_EQ(a, b);
    EXPECT_GT(count_true(a), 0u);
}

TEST(PeakSignificance, RatioGate) {
    AmplitudeImage band(3, 1, std::vector<double>{3.0, 2.9, 0.0});
    AmplitudeImage floor(3, 1, std::vector<double>{1.0, 1.0, 0.0});
    EXPECT_EQ(peak_significance_mask(band, floor, 3.0), Mask(3, 1, std::vector<std::uint8_t>{1, 0, 1}));
    EXPECT_EQ(count_true(peak_significance_mask(band, floor, 0.0)), 3u);
}

TEST(Window, ParseAndPrint) {
    EXPECT_EQ(parse_window("hann"), Window::Hann);
    EXPECT_EQ(std::string(to_string(parse_window("rect"))), "rect");
    EXPECT_THROW(parse_window("hamming"), Error);
}
