#include "tubekit/encoder.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <istream>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>
#include <utility>

namespace tubekit {

std::array<double, RegressionTarget::kSize> RegressionTarget::to_array() const {
    return {lm, tm, rm, bm, ls, ts, rs, bs, le, te, re, be, ds, de};
}

RegressionTarget RegressionTarget::from_array(const std::array<double, kSize>& v) {
    return {v[0], v[1], v[2], v[3], v[4], v[5], v[6], v[7], v[8], v[9], v[10], v[11], v[12], v[13]};
}

std::vector<LevelSpec> default_levels() {
    const double inf = std::numeric_limits<double>::infinity();
    return {{8, 0.0, 64.0}, {16, 64.0, 128.0}, {32, 128.0, 256.0}, {64, 256.0, 512.0}, {128, 512.0, inf}};
}

LevelMaps LevelMaps::zeros_like() const {
    LevelMaps out;
    out.spec = spec;
    out.frames = frames;
    out.height = height;
    out.width = width;
    out.confidence.assign(size(), 0.0);
    out.regression.assign(size(), RegressionTarget{});
    out.centerness.assign(size(), 0.0);
    return out;
}

MapPoint map_point(const LevelSpec& level, Frame clip_start, int t, int y, int x) {
    const double half = 0.5 * level.stride;
    return {level.stride, clip_start + t, half + static_cast<double>(x) * level.stride,
            half + static_cast<double>(y) * level.stride};
}

RegressionTarget make_target(const BTube& tube, double px, double py) {
    RegressionTarget r;
    r.lm = px - tube.bm.x1;
    r.tm = py - tube.bm.y1;
    r.rm = tube.bm.x2 - px;
    r.bm = tube.bm.y2 - py;
    r.ls = px - tube.bs.x1;
    r.ts = py - tube.bs.y1;
    r.rs = tube.bs.x2 - px;
    r.bs = tube.bs.y2 - py;
    r.le = px - tube.be.x1;
    r.te = py - tube.be.y1;
    r.re = tube.be.x2 - px;
    r.be = tube.be.y2 - py;
    r.ds = tube.tm - tube.ts;
    r.de = tube.te - tube.tm;
    return r;
}

namespace {

double ratio(double a, double b) {
    const double hi = std::max(a, b);
    if (hi <= 0.0) {
        return 1.0;
    }
    return std::min(a, b) / hi;
}

// Grid cells whose centers can fall inside [lo, hi], widened by one; the
// exact containment test happens per cell.
std::pair<int, int> cell_span(double lo, double hi, double stride, int n) {
    const int a = static_cast<int>(std::floor((lo - 0.5 * stride) / stride)) - 1;
    const int b = static_cast<int>(std::ceil((hi - 0.5 * stride) / stride)) + 1;
    return {std::max(0, a), std::min(n - 1, b)};
}

void encode_level(std::span<const BTube> tubes, const EncodeParams& params, LevelMaps& level) {
    std::vector<std::vector<int>> by_frame(level.frames);
    for (int i = 0; i < static_cast<int>(tubes.size()); ++i) {
        by_frame[tubes[i].tm - params.clip_start].push_back(i);
    }
    const double stride = level.spec.stride;
    // Each thread owns whole (t) planes and paints that frame's tubes over
    // their B_m footprint. Ties in area keep the earlier tube.
#pragma omp parallel for schedule(dynamic)
    for (int t = 0; t < level.frames; ++t) {
        if (by_frame[t].empty()) {
            continue;
        }
        std::vector<double> best_area(static_cast<std::size_t>(level.height) * level.width,
                                      std::numeric_limits<double>::infinity());
        for (int i : by_frame[t]) {
            const BBox& bm = tubes[i].bm;
            const double area = box_area(bm);
            const auto [x_lo, x_hi] = cell_span(bm.x1, bm.x2, stride, level.width);
            const auto [y_lo, y_hi] = cell_span(bm.y1, bm.y2, stride, level.height);
            for (int y = y_lo; y <= y_hi; ++y) {
                for (int x = x_lo; x <= x_hi; ++x) {
                    const MapPoint p = map_point(level.spec, params.clip_start, t, y, x);
                    if (p.px < bm.x1 || p.px > bm.x2 || p.py < bm.y1 || p.py > bm.y2) {
                        continue;
                    }
                    const double reach = std::max({p.px - bm.x1, p.py - bm.y1, bm.x2 - p.px, bm.y2 - p.py});
                    if (!(reach > level.spec.min_size && reach <= level.spec.max_size)) {
                        continue;
                    }
                    double& best = best_area[static_cast<std::size_t>(y) * level.width + x];
                    if (!(area < best)) {
                        continue;
                    }
                    best = area;
                    const std::size_t idx = level.index(t, y, x);
                    const RegressionTarget r = make_target(tubes[i], p.px, p.py);
                    level.confidence[idx] = 1.0;
                    level.regression[idx] = r;
                    level.centerness[idx] = centerness(r);
                }
            }
        }
    }
}

}  // namespace

TargetMaps encode_targets(std::span<const BTube> tubes, const EncodeParams& params) {
    if (params.clip_len < 1) {
        throw std::invalid_argument("encode_targets: clip_len must be >= 1");
    }
    if (params.levels.empty()) {
        throw std::invalid_argument("encode_targets: empty level spec");
    }
    if (params.image_h < 1 || params.image_w < 1) {
        throw std::invalid_argument("encode_targets: image size must be positive");
    }
    for (const auto& tube : tubes) {
        if (tube.tm < params.clip_start || tube.tm >= params.clip_start + params.clip_len) {
            throw std::invalid_argument("encode_targets: tube B_m frame " + std::to_string(tube.tm) +
                                        " outside clip");
        }
    }

    TargetMaps maps;
    maps.clip_start = params.clip_start;
    maps.clip_len = params.clip_len;
    maps.image_h = params.image_h;
    maps.image_w = params.image_w;
    for (const auto& spec : params.levels) {
        if (spec.stride < 1) {
            throw std::invalid_argument("encode_targets: level stride must be positive");
        }
        LevelMaps level;
        level.spec = spec;
        level.frames = params.clip_len;
        level.height = (params.image_h + spec.stride - 1) / spec.stride;
        level.width = (params.image_w + spec.stride - 1) / spec.stride;
        level = level.zeros_like();
        encode_level(tubes, params, level);
        maps.levels.push_back(std::move(level));
    }
    return maps;
}

double centerness(const RegressionTarget& r) {
    if (r.lm < 0 || r.rm < 0 || r.tm < 0 || r.bm < 0 || r.ds < 0 || r.de < 0) {
        throw std::invalid_argument("centerness: negative distance");
    }
    return std::sqrt(ratio(r.lm, r.rm) * ratio(r.tm, r.bm) * ratio(r.ds, r.de));
}

namespace {

BBox decode_box(double px, double py, double l, double t, double r, double b, bool& clamped) {
    BBox box{px - l, py - t, px + r, py + b};
    if (box.x1 > box.x2) {
        box.x1 = box.x2 = 0.5 * (box.x1 + box.x2);
        clamped = true;
    }
    if (box.y1 > box.y2) {
        box.y1 = box.y2 = 0.5 * (box.y1 + box.y2);
        clamped = true;
    }
    return box;
}

}  // namespace

DecodedTube decode_target(const MapPoint& p, const RegressionTarget& r) {
    DecodedTube out;
    BTube& tube = out.tube;
    tube.bm = decode_box(p.px, p.py, r.lm, r.tm, r.rm, r.bm, out.clamped);
    tube.bs = decode_box(p.px, p.py, r.ls, r.ts, r.rs, r.bs, out.clamped);
    tube.be = decode_box(p.px, p.py, r.le, r.te, r.re, r.be, out.clamped);
    long ds = std::lround(r.ds);
    long de = std::lround(r.de);
    if (ds < 0 || de < 0) {
        out.clamped = true;
        ds = std::max(0L, ds);
        de = std::max(0L, de);
    }
    tube.tm = p.frame;
    tube.ts = p.frame - static_cast<Frame>(ds);
    tube.te = p.frame + static_cast<Frame>(de);
    return out;
}

std::vector<ScoredTube> decode_detections(const TargetMaps& maps, double min_score) {
    std::vector<ScoredTube> out;
    for (const auto& level : maps.levels) {
        for (int t = 0; t < level.frames; ++t) {
            for (int y = 0; y < level.height; ++y) {
                for (int x = 0; x < level.width; ++x) {
                    const std::size_t idx = level.index(t, y, x);
                    const double score = level.confidence[idx] * level.centerness[idx];
                    if (score < min_score || score <= 0.0) {
                        continue;
                    }
                    const MapPoint p = map_point(level.spec, maps.clip_start, t, y, x);
                    out.push_back({decode_target(p, level.regression[idx]).tube, score});
                }
            }
        }
    }
    return out;
}

namespace {

void put_u32(std::ostream& out, std::uint32_t v) {
    const unsigned char bytes[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                                    static_cast<unsigned char>(v >> 16),
                                    static_cast<unsigned char>(v >> 24)};
    out.write(reinterpret_cast<const char*>(bytes), 4);
}

void put_f32(std::ostream& out, double value) {
    put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(value)));
}

std::uint32_t get_u32(std::istream& in) {
    unsigned char bytes[4];
    if (!in.read(reinterpret_cast<char*>(bytes), 4)) {
        throw std::runtime_error("target maps: truncated input");
    }
    return static_cast<std::uint32_t>(bytes[0]) | (static_cast<std::uint32_t>(bytes[1]) << 8) |
           (static_cast<std::uint32_t>(bytes[2]) << 16) | (static_cast<std::uint32_t>(bytes[3]) << 24);
}

double get_f32(std::istream& in) { return std::bit_cast<float>(get_u32(in)); }

constexpr char kMagic[5] = {'T', 'B', 'T', 'K', '1'};

}  // namespace

void write_target_maps(std::ostream& out, const TargetMaps& maps) {
    out.write(kMagic, sizeof(kMagic));
    put_u32(out, static_cast<std::uint32_t>(maps.levels.size()));
    for (const auto& level : maps.levels) {
        put_u32(out, static_cast<std::uint32_t>(level.spec.stride));
        put_u32(out, static_cast<std::uint32_t>(level.frames));
        put_u32(out, static_cast<std::uint32_t>(level.height));
        put_u32(out, static_cast<std::uint32_t>(level.width));
    }
    for (const auto& level : maps.levels) {
        for (double v : level.confidence) {
            put_f32(out, v);
        }
        for (std::size_t k = 0; k < RegressionTarget::kSize; ++k) {
            for (const auto& r : level.regression) {
                put_f32(out, r.to_array()[k]);
            }
        }
        for (double v : level.centerness) {
            put_f32(out, v);
        }
    }
    if (!out) {
        throw std::runtime_error("target maps: write failed");
    }
}

TargetMaps read_target_maps(std::istream& in) {
    char magic[5];
    if (!in.read(magic, sizeof(magic)) || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
        throw std::runtime_error("target maps: bad magic");
    }
    TargetMaps maps;
    const std::uint32_t count = get_u32(in);
    maps.levels.resize(count);
    for (auto& level : maps.levels) {
        level.spec.stride = static_cast<int>(get_u32(in));
        level.frames = static_cast<int>(get_u32(in));
        level.height = static_cast<int>(get_u32(in));
        level.width = static_cast<int>(get_u32(in));
        level = level.zeros_like();
    }
    for (auto& level : maps.levels) {
        for (double& v : level.confidence) {
            v = get_f32(in);
        }
        for (std::size_t k = 0; k < RegressionTarget::kSize; ++k) {
            for (auto& r : level.regression) {
                auto values = r.to_array();
                values[k] = get_f32(in);
                r = RegressionTarget::from_array(values);
            }
        }
        for (double& v : level.centerness) {
            v = get_f32(in);
        }
    }
    if (!maps.levels.empty()) {
        maps.clip_len = maps.levels.front().frames;
    }
    return maps;
}

}  // namespace tubekit
