#include <gtest/gtest.h>

#include <random>
#include <stdexcept>

#include "decompose_oracle.hpp"
#include "fixtures.hpp"
#include "tubekit/tubegen.hpp"

using namespace tubekit;

namespace {

Track turning_track() {
    // Right along x for 10 frames, then straight down.
    Track t;
    t.id = 1;
    double x = 0, y = 0;
    for (Frame f = 1; f <= 20; ++f) {
        t.boxes[f] = {x, y, x + 20, y + 40};
        if (f < 10) {
            x += 6;
        } else {
            y += 6;
        }
    }
    return t;
}

}  // namespace

TEST(Decompose, StaticTrackUsesFullExtent) {
    const Track t = fixtures::linear_track(3, 1, 20, {5, 5, 25, 45}, 0, 0);
    const auto tubes = decompose_track(t, {0.8, 16});
    ASSERT_EQ(tubes.size(), 20u);
    for (const auto& tube : tubes) {
        EXPECT_EQ(tube.te - tube.ts, 16);
        EXPECT_DOUBLE_EQ(mean_fit_iou(tube, t.boxes), 1.0);
    }
    EXPECT_EQ(recompose(tubes), t.boxes);
}

TEST(Decompose, ShortTrackCappedByAvailableSpan) {
    const Track t = fixtures::linear_track(3, 1, 6, {5, 5, 25, 45}, 0, 0);
    for (const auto& tube : decompose_track(t, {0.8, 16})) {
        EXPECT_EQ(tube.ts, 1);
        EXPECT_EQ(tube.te, 6);
    }
}

TEST(Decompose, ConstantVelocityIsExact) {
    const Track t = fixtures::linear_track(1, 1, 40, {0.3, 1.1, 20.3, 41.1}, 2.7, -1.3);
    const auto tubes = decompose_track(t, {0.8, 16});
    for (const auto& tube : tubes) {
        EXPECT_EQ(tube.te - tube.ts, 16);
        EXPECT_NEAR(mean_fit_iou(tube, t.boxes), 1.0, 1e-12);
    }
    const auto back = recompose(tubes);
    for (const auto& [f, b] : t.boxes) {
        EXPECT_NEAR(back.at(f).x1, b.x1, 1e-9);
        EXPECT_NEAR(back.at(f).y1, b.y1, 1e-9);
        EXPECT_NEAR(back.at(f).x2, b.x2, 1e-9);
        EXPECT_NEAR(back.at(f).y2, b.y2, 1e-9);
    }
}

TEST(Decompose, TurnAtMiddleBoxIsFree) {
    const Track t = turning_track();
    const auto tubes = decompose_track(t, {0.8, 16});
    ASSERT_EQ(tubes.size(), 20u);
    EXPECT_EQ(tubes, oracle::decompose(t, 0.8, 16));
    // Both legs are straight, so a tube bending at its B_m frame fits exactly
    // at full length, while one anchored at the start cannot pass the turn far.
    const BTube& apex = tubes[9];
    EXPECT_EQ(apex.tm, 10);
    EXPECT_EQ(apex.te - apex.ts, 16);
    EXPECT_NEAR(mean_fit_iou(apex, t.boxes), 1.0, 1e-12);
    EXPECT_LT(tubes[0].te - tubes[0].ts, 16);
}

TEST(Decompose, RejectsBadInput) {
    EXPECT_THROW(decompose_track(Track{}, {}), std::invalid_argument);
    const Track t = fixtures::linear_track(1, 1, 5, {0, 0, 1, 1}, 0, 0);
    EXPECT_THROW(decompose_track(t, {0.0, 16}), std::invalid_argument);
    EXPECT_THROW(decompose_track(t, {1.01, 16}), std::invalid_argument);
}

TEST(Decompose, NeverSpansAGap) {
    Track t = fixtures::linear_track(1, 1, 10, {0, 0, 10, 10}, 1, 0);
    const Track tail = fixtures::linear_track(1, 15, 10, {0, 0, 10, 10}, 1, 0);
    t.boxes.insert(tail.boxes.begin(), tail.boxes.end());
    ASSERT_EQ(contiguous_segments(t).size(), 2u);
    const auto tubes = decompose_track(t, {0.8, 16});
    ASSERT_EQ(tubes.size(), 20u);
    for (const auto& tube : tubes) {
        EXPECT_TRUE(tube.te <= 10 || tube.ts >= 15);
    }
}

TEST(Decompose, MatchesExhaustiveSearchOnRandomTracks) {
    std::mt19937 rng(99);
    std::uniform_int_distribution<int> len(1, 30);
    for (int k = 0; k < 30; ++k) {
        const Track t = fixtures::wandering_track(rng, k, len(rng));
        for (double eta : {0.5, 0.8, 0.95}) {
            const auto tubes = decompose_track(t, {eta, 16});
            EXPECT_EQ(tubes, oracle::decompose(t, eta, 16)) << "track " << k << " eta " << eta;
            for (const auto& tube : tubes) {
                EXPECT_GE(mean_fit_iou(tube, t.boxes), eta);
            }
        }
    }
}

TEST(Decompose, EveryBoxIsMiddleOfExactlyOneTube) {
    std::mt19937 rng(3);
    const Track t = fixtures::wandering_track(rng, 1, 60);
    const auto tubes = decompose_track(t, {0.8, 16});
    ASSERT_EQ(tubes.size(), t.boxes.size());
    auto it = t.boxes.begin();
    for (const auto& tube : tubes) {
        EXPECT_EQ(tube.tm, it->first);
        EXPECT_EQ(tube.bm, it->second);
        ++it;
    }
}

TEST(Decompose, RaisingEtaNeverLengthensTubes) {
    std::mt19937 rng(8);
    for (int k = 0; k < 10; ++k) {
        const Track t = fixtures::wandering_track(rng, k, 40);
        const auto loose = decompose_track(t, {0.6, 16});
        const auto strict = decompose_track(t, {0.9, 16});
        for (std::size_t i = 0; i < loose.size(); ++i) {
            EXPECT_LE(strict[i].te - strict[i].ts, loose[i].te - loose[i].ts);
        }
    }
}

TEST(Decompose, ConsecutiveTubesOverlapOnSmoothTracks) {
    const Track t = fixtures::linear_track(1, 1, 50, {0, 0, 30, 60}, 1.5, 0.5);
    const auto tubes = decompose_track(t, {0.8, 16});
    for (std::size_t i = 1; i < tubes.size(); ++i) {
        EXPECT_LE(tubes[i].ts, tubes[i - 1].te);
    }
}

TEST(Decompose, TubesChainAcrossTheTrack) {
    // On erratic motion the tie-break may leave two neighbours back to back
    // instead of overlapping; the chain still covers every frame.
    std::mt19937 rng(21);
    for (int k = 0; k < 20; ++k) {
        const Track t = fixtures::wandering_track(rng, k, 30);
        const auto tubes = decompose_track(t, {0.8, 16});
        Frame reach = tubes.front().te;
        EXPECT_EQ(tubes.front().ts, t.first_frame());
        for (std::size_t i = 1; i < tubes.size(); ++i) {
            EXPECT_LE(tubes[i].ts, reach + 1);
            reach = std::max(reach, tubes[i].te);
        }
        EXPECT_EQ(reach, t.last_frame());
    }
}

TEST(Recompose, SingleTubeGivesItsBoxes) {
    const BTube tube{{0, 0, 10, 10}, {4, 2, 14, 12}, {10, 2, 20, 12}, 0, 2, 5};
    const auto boxes = recompose({tube});
    ASSERT_EQ(boxes.size(), 6u);
    for (Frame f = 0; f <= 5; ++f) EXPECT_EQ(boxes.at(f), interpolate(tube, f));
}
