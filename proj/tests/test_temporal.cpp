#include <gtest/gtest.h>

#include <random>

#include "chestseg/temporal.hpp"
#include "support.hpp"

using namespace chestseg;
namespace ct = chestseg::testing;

TEST(Accumulate, CountsPerPixel) {
    std::vector<SegmentMask> masks{SegmentMask(2, 1, std::vector<std::uint8_t>{1, 0}),
                                   SegmentMask(2, 1, std::vector<std::uint8_t>{1, 1}),
                                   SegmentMask(2, 1, std::vector<std::uint8_t>{1, 0})};
    const auto h = accumulate(masks);
    EXPECT_EQ(h[0], 3u);
    EXPECT_EQ(h[1], 1u);
    const auto c = to_confidence(h, 3);
    EXPECT_DOUBLE_EQ(c[0], 1.0);
    EXPECT_DOUBLE_EQ(c[1], 1.0 / 3.0);
}

TEST(Accumulate, ErrorsOnEmptyOrMismatchedInput) {
    EXPECT_THROW(accumulate(std::vector<SegmentMask>{}), Error);
    std::vector<SegmentMask> bad{SegmentMask(2, 2), SegmentMask(3, 2)};
    EXPECT_THROW(accumulate(bad), Error);
    EXPECT_THROW(to_confidence(Histogram(1, 1, 4u), 3), Error);
    EXPECT_THROW(to_confidence(Histogram(1, 1), 0), Error);
}

TEST(Accumulate, MergeOfPartsEqualsWhole) {
    std::mt19937_64 rng(41);
    std::vector<SegmentMask> masks;
    for (int i = 0; i < 7; ++i) masks.push_back(ct::random_mask(12, 9, 0.4, rng));
    const std::span<const SegmentMask> all(masks);
    const auto whole = accumulate(all);
    EXPECT_EQ(merge(accumulate(all.first(3)), accumulate(all.subspan(3))), whole);
    EXPECT_EQ(merge(accumulate(all.subspan(3)), accumulate(all.first(3))), whole);
}

TEST(Confidence, MonotoneInAddedAgreeingMasks) {
    // Adding a segment whose mask contains a pixel never lowers that pixel's
    // count, and the final mask shrinks as the threshold rises.
    std::mt19937_64 rng(42);
    std::vector<SegmentMask> masks;
    for (int i = 0; i < 5; ++i) masks.push_back(ct::random_mask(15, 15, 0.5, rng));
    auto before = accumulate(masks);
    masks.push_back(SegmentMask(15, 15, 1));
    auto after = accumulate(masks);
    for (std::size_t i = 0; i < before.size(); ++i) EXPECT_EQ(after[i], before[i] + 1);
    const auto conf = to_confidence(after, masks.size());
    SegmentationMask prev = threshold_confidence(conf, 0.01);
    for (int k = 1; k <= 10; ++k) {
        const auto cur = threshold_confidence(conf, k / 10.0);
        EXPECT_TRUE(is_subset(cur, prev)) << k;
        prev = cur;
    }
}

TEST(Confidence, ThresholdBoundsAndInclusiveComparison) {
    ConfidenceMap conf(3, 1, std::vector<double>{0.25, 0.5, 1.0});
    EXPECT_EQ(threshold_confidence(conf, 0.5), SegmentationMask(3, 1, std::vector<std::uint8_t>{0, 1, 1}));
    EXPECT_EQ(count_true(threshold_confidence(conf, 1.0)), 1u);
    EXPECT_THROW(threshold_confidence(conf, 0.0), Error);
    EXPECT_THROW(threshold_confidence(conf, 1.5), Error);
}

TEST(Motion, ScoresAndThreshold) {
    std::vector<NormalizedFrame> frames{NormalizedFrame(4, 4, 0.5), NormalizedFrame(4, 4, 0.5),
                                        NormalizedFrame(4, 4, 0.6)};
    frames[1](0, 0) = 0.0;  // missing readings are skipped
    Mask exclude(4, 4);
    const auto s = frame_motion_scores(frames, exclude);
    ASSERT_EQ(s.size(), 3u);
    EXPECT_EQ(s[0], 0.0);
    EXPECT_DOUBLE_EQ(s[1], 0.0);
    EXPECT_NEAR(s[2], 0.1, 1e-12);
    EXPECT_TRUE(has_motion(s, 0.05));
    EXPECT_FALSE(has_motion(s, 0.2));
    EXPECT_FALSE(has_motion(s, 0.0));
    // Excluding every pixel leaves nothing to compare.
    EXPECT_EQ(frame_motion_scores(frames, Mask(4, 4, 1))[2], 0.0);
}
