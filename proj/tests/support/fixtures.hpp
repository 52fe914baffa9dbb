#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "tubekit/geometry.hpp"
#include "tubekit/tubegen.hpp"

namespace fixtures {

using tubekit::BBox;
using tubekit::BTube;
using tubekit::Track;

inline BBox random_box(std::mt19937& rng, double lo = 0.0, double hi = 50.0, double min_side = 5.0,
                       double max_side = 20.0) {
    std::uniform_real_distribution<double> side(min_side, max_side);
    const double w = side(rng), h = side(rng);
    std::uniform_real_distribution<double> px(lo, hi - w), py(lo, hi - h);
    const double x = px(rng), y = py(rng);
    return {x, y, x + w, y + h};
}

/// Small tube: at most `max_frames` frames starting in [0, 4], coordinates in [0, 50].
inline BTube random_tube(std::mt19937& rng, int max_frames = 10) {
    std::uniform_int_distribution<int> start(0, 4), len(1, max_frames);
    BTube t;
    t.ts = start(rng);
    t.te = t.ts + len(rng) - 1;
    std::uniform_int_distribution<int> mid(t.ts, t.te);
    t.tm = mid(rng);
    t.bs = random_box(rng);
    t.bm = random_box(rng);
    t.be = random_box(rng);
    return t;
}

inline Track linear_track(int id, int first, int n, BBox start, double vx, double vy) {
    Track t;
    t.id = id;
    for (int k = 0; k < n; ++k) {
        t.boxes[first + k] = {start.x1 + vx * k, start.y1 + vy * k, start.x2 + vx * k, start.y2 + vy * k};
        t.visibility[first + k] = 1.0;
    }
    return t;
}

/// Random-walk track with occasional direction changes and size drift.
inline Track wandering_track(std::mt19937& rng, int id, int n) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Track t;
    t.id = id;
    double x = 100 + 20 * u(rng), y = 100 + 20 * u(rng), w = 30 + 5 * u(rng), h = 60 + 10 * u(rng);
    double vx = 3 * u(rng), vy = 3 * u(rng);
    for (int f = 1; f <= n; ++f) {
        t.boxes[f] = {x, y, x + w, y + h};
        if (u(rng) > 0.6) {
            vx = 4 * u(rng);
            vy = 4 * u(rng);
        }
        x += vx;
        y += vy;
        w = std::max(5.0, w + 0.5 * u(rng));
        h = std::max(10.0, h + 0.5 * u(rng));
    }
    return t;
}

class TempDir {
public:
    TempDir() {
        static int counter = 0;
        path_ = std::filesystem::temp_directory_path() /
                ("tubekit_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() { std::filesystem::remove_all(path_); }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

inline std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void spit(const std::filesystem::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    out << text;
}

}  // namespace fixtures
