#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <limits>
#include <span>
#include <vector>

#include "tubekit/geometry.hpp"

namespace tubekit {

/// Tube parameterization at one map point. Spatial values are distances from
/// the point's image location to each side of B_m, B_s and B_e (left, top,
/// right, bottom); the B_s / B_e distances are signed. ds, de are frame counts.
struct RegressionTarget {
    static constexpr std::size_t kSize = 14;

    double lm = 0, tm = 0, rm = 0, bm = 0;
    double ls = 0, ts = 0, rs = 0, bs = 0;
    double le = 0, te = 0, re = 0, be = 0;
    double ds = 0, de = 0;

    std::array<double, kSize> to_array() const;
    static RegressionTarget from_array(const std::array<double, kSize>& v);

    friend bool operator==(const RegressionTarget&, const RegressionTarget&) = default;
};

/// One head level: spatial stride and the (min, max] range of the largest
/// B_m side distance it is responsible for.
struct LevelSpec {
    int stride = 8;
    double min_size = 0.0;
    double max_size = std::numeric_limits<double>::infinity();
};

/// Five levels, strides 8..128, ranges (0,64], (64,128], (128,256], (256,512], (512,inf).
std::vector<LevelSpec> default_levels();

/// Target (or prediction) grids of one level, row-major in (t, y, x).
struct LevelMaps {
    LevelSpec spec;
    int frames = 0;
    int height = 0;
    int width = 0;
    std::vector<double> confidence;
    std::vector<RegressionTarget> regression;
    std::vector<double> centerness;

    std::size_t size() const { return static_cast<std::size_t>(frames) * height * width; }
    std::size_t index(int t, int y, int x) const {
        return (static_cast<std::size_t>(t) * height + y) * width + x;
    }
    LevelMaps zeros_like() const;
};

struct TargetMaps {
    Frame clip_start = 0;
    int clip_len = 0;
    int image_h = 0;
    int image_w = 0;
    std::vector<LevelMaps> levels;
};

/// A map location: level, temporal index and grid cell.
struct MapPoint {
    int stride = 8;
    Frame frame = 0;
    double px = 0.0;
    double py = 0.0;
};

MapPoint map_point(const LevelSpec& level, Frame clip_start, int t, int y, int x);

struct EncodeParams {
    Frame clip_start = 0;
    int clip_len = 8;
    int image_h = 0;
    int image_w = 0;
    std::vector<LevelSpec> levels = default_levels();
};

/// Regression target of `tube` seen from point (px, py).
RegressionTarget make_target(const BTube& tube, double px, double py);

/// Builds confidence / regression / center-ness grids for one clip. When
/// several tubes claim a point, the one with the smallest B_m area wins.
TargetMaps encode_targets(std::span<const BTube> tubes, const EncodeParams& params);

/// sqrt of the product of the three min/max ratios; a 0/0 ratio counts as 1.
/// Throws std::invalid_argument on negative distances.
double centerness(const RegressionTarget& r);

struct DecodedTube {
    BTube tube;
    bool clamped = false;
};

/// Inverse of make_target. Inverted boxes and negative lengths are clamped
/// and flagged.
DecodedTube decode_target(const MapPoint& p, const RegressionTarget& r);

/// Every point with confidence x center-ness >= min_score as a scored tube.
std::vector<ScoredTube> decode_detections(const TargetMaps& maps, double min_score);

/// Binary layout (little endian): "TBTK1", u32 level count, per level
/// u32 stride, frames, height, width; then per level f32 grids in order
/// confidence, 14 regression planes, center-ness.
void write_target_maps(std::ostream& out, const TargetMaps& maps);
TargetMaps read_target_maps(std::istream& in);

}  // namespace tubekit
