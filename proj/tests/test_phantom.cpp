#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "chestseg/phantom.hpp"
#include "support.hpp"

using namespace chestseg;
using chestseg::testing::small_spec;

TEST(Phantom, CleanFrameMatchesClosedForm) {
    auto spec = small_spec().without_noise();
    spec.second_harmonic_ratio = 0.2;
    for (std::size_t t : {0u, 3u, 17u, 250u}) {
        const auto img = render_clean_frame(spec, t);
        const double phase = 2.0 * std::numbers::pi * spec.breathing_freq_hz * static_cast<double>(t) / spec.fps;
        const double breath = spec.breathing_amplitude_mm * (std::sin(phase) + 0.2 * std::sin(2.0 * phase));
        for (std::size_t y = 0; y < spec.height; ++y) {
            for (std::size_t x = 0; x < spec.width; ++x) {
                const double fx = static_cast<double>(x), fy = static_cast<double>(y);
                double want = spec.bed_depth_mm;
                if (spec.body.contains(fx, fy)) want = spec.body_depth_mm - (spec.chest.contains(fx, fy) ? breath : 0.0);
                ASSERT_NEAR(img(x, y), want, 1e-9);
            }
        }
    }
}

TEST(Phantom, QuarterPeriodChestDepth) {
    // f = 0.25 Hz at 10 fps: frame 10 is a quarter period, sin = 1.
    const auto spec = small_spec().without_noise();
    const auto ph = generate_phantom(spec, 0, 1);
    const auto cx = static_cast<std::size_t>(spec.chest.cx);
    const auto cy = static_cast<std::size_t>(spec.chest.cy);
    EXPECT_EQ(ph.sequence.frames[10](cx, cy), 2200 - 5);
    EXPECT_EQ(ph.sequence.frames[0](cx, cy), 2200);
    EXPECT_EQ(ph.sequence.frames[0](0, 0), 2600);
}

TEST(Phantom, NoiseFreeChestSeriesIsRoundedSinusoid) {
    const auto spec = small_spec().without_noise();
    const auto ph = generate_phantom(spec, 5, 1);
    const auto cx = static_cast<std::size_t>(spec.chest.cx);
    const auto cy = static_cast<std::size_t>(spec.chest.cy);
    for (std::size_t t = 0; t < ph.sequence.length(); ++t) {
        const double want = std::round(spec.body_depth_mm - detail::breathing_displacement(spec, t));
        ASSERT_EQ(ph.sequence.frames[t](cx, cy), want) << "frame " << t;
    }
}

TEST(Phantom, GroundTruthIsChestRasterInsideBody) {
    const auto spec = small_spec();
    const auto ph = generate_phantom(spec, 1, 1);
    const auto body = detail::rasterize(spec.body, spec.width, spec.height);
    EXPECT_EQ(ph.truth.chest_mask, detail::rasterize(spec.chest, spec.width, spec.height));
    EXPECT_TRUE(is_subset(ph.truth.chest_mask, body));
    EXPECT_EQ(ph.truth.breathing_freq_hz, spec.breathing_freq_hz);
    EXPECT_EQ(ph.sequence.length(), 600u);
}

TEST(Phantom, DeterministicInSeedAndWorkerCount) {
    auto spec = small_spec();
    spec.duration_s = 5.0;
    const auto a = generate_phantom(spec, 42, 1);
    const auto b = generate_phantom(spec, 42, 3);
    const auto c = generate_phantom(spec, 43, 1);
    EXPECT_EQ(a.sequence.frames, b.sequence.frames);
    EXPECT_NE(a.sequence.frames, c.sequence.frames);
}

TEST(Phantom, PepperRateMatchesProbability) {
    auto spec = small_spec();
    spec.duration_s = 2.0;
    spec.pepper_prob = 0.05;
    const auto ph = generate_phantom(spec, 9, 1);
    std::size_t zeros = 0, total = 0;
    for (const auto& f : ph.sequence.frames) {
        for (auto v : f.pixels()) zeros += v == 0;
        total += f.size();
    }
    const double rate = static_cast<double>(zeros) / static_cast<double>(total);
    // 384000 Bernoulli draws: the standard error is about 3.5e-4.
    EXPECT_NEAR(rate, 0.05, 0.003);
}

TEST(Phantom, RadialNoiseGrowsTowardsCorners) {
    auto spec = small_spec();
    spec.duration_s = 20.0;
    spec.pepper_prob = 0.0;
    spec.edge_flicker_mm = 0.0;
    spec.breathing_amplitude_mm = 0.0;
    const auto ph = generate_phantom(spec, 4, 1);
    auto stddev = [&](std::size_t x, std::size_t y) {
        double s = 0.0, s2 = 0.0;
        for (const auto& f : ph.sequence.frames) {
            s += f(x, y);
            s2 += double(f(x, y)) * f(x, y);
        }
        const double n = static_cast<double>(ph.sequence.length());
        return std::sqrt(std::max(0.0, s2 / n - (s / n) * (s / n)));
    };
    // The corner sits at normalized radius 1 (sigma 10 mm); the center near 0.
    EXPECT_NEAR(stddev(0, 0), 10.0, 1.5);
    EXPECT_LT(stddev(80, 60), 1.0);
}

TEST(Phantom, SpecKeyValueRoundTrip) {
    auto spec = small_spec();
    spec.posture_events = {{12.5, 3, -2}, {40.0, -1, 4}};
    spec.second_harmonic_ratio = 0.1;
    const auto back = PhantomSpec::from_key_values(parse_key_values(to_string(spec.to_key_values())));
    EXPECT_EQ(back, spec);
}

TEST(Phantom, InvalidSpecsAreRejected) {
    auto bad = small_spec();
    bad.chest = {10.0, 10.0, 5.0, 5.0};  // outside the body
    EXPECT_THROW(generate_phantom(bad, 0, 1), Error);
    bad = small_spec();
    bad.breathing_freq_hz = 6.0;  // above Nyquist
    EXPECT_THROW(bad.validate(), Error);
    bad = small_spec();
    bad.posture_events = {{1.0, 100, 0}};
    EXPECT_THROW(bad.validate(), Error);
    EXPECT_THROW(PhantomSpec::from_key_values(parse_key_values("posture_event = 1 2\n")), Error);
}

TEST(Phantom, PostureEventsCreateEpochs) {
    auto spec = small_spec().without_noise();
    spec.duration_s = 10.0;
    spec.posture_events = {{4.0, 5, 3}};
    const auto ph = generate_phantom(spec, 0, 1);
    ASSERT_EQ(ph.truth.epochs.size(), 2u);
    EXPECT_EQ(ph.truth.epochs[1].start_frame, 40u);
    EXPECT_EQ(ph.truth.epochs[1].chest_mask, detail::rasterize(spec.chest, spec.width, spec.height, 5, 3));
    const auto cx = static_cast<std::size_t>(spec.body.cx);
    const auto cy = static_cast<std::size_t>(spec.body.cy - spec.body.ry);
    // The top of the body moved down by 3 pixels.
    EXPECT_EQ(ph.sequence.frames[0](cx, cy), 2200);
    EXPECT_EQ(ph.sequence.frames[50](cx, cy), 2600);
}

TEST(Phantom, ApplyPostureEventsShiftsContent) {
    auto spec = small_spec().without_noise();
    spec.duration_s = 2.0;
    const auto ph = generate_phantom(spec, 0, 1);
    const std::vector<PostureEvent> events{{1.0, 4, -2}};
    const auto moved = apply_posture_events(ph.sequence, events, 2600);
    EXPECT_EQ(moved.frames[5], ph.sequence.frames[5]);
    EXPECT_EQ(moved.frames[15](60 + 4, 50 - 2), ph.sequence.frames[15](60, 50));
    EXPECT_EQ(moved.frames[15](0, 119), 2600);
    const std::vector<PostureEvent> huge{{0.0, 500, 0}};
    EXPECT_THROW(apply_posture_events(ph.sequence, huge, 0), Error);
}
