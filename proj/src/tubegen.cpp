#include "tubekit/tubegen.hpp"

#include <algorithm>
#include <cstdlib>
#include <stdexcept>
#include <string>

namespace tubekit {

std::vector<std::map<Frame, BBox>> contiguous_segments(const Track& track) {
    std::vector<std::map<Frame, BBox>> segments;
    Frame prev = 0;
    for (const auto& [frame, box] : track.boxes) {
        if (segments.empty() || frame != prev + 1) {
            segments.emplace_back();
        }
        segments.back().emplace(frame, box);
        prev = frame;
    }
    return segments;
}

double mean_fit_iou(const BTube& tube, const std::map<Frame, BBox>& gt) {
    double sum = 0.0;
    for (Frame f = tube.ts; f <= tube.te; ++f) {
        const BBox& truth = gt.at(f);
        const BBox fitted = interpolate(tube, f);
        sum += fitted == truth ? 1.0 : box_iou(fitted, truth);
    }
    return sum / static_cast<double>(tube.length());
}

namespace {

// Boxes of one gap-free segment, indexed from 0.
struct Segment {
    Frame first = 0;
    std::vector<BBox> boxes;
};

bool feasible(const Segment& seg, int s, int m, int e, double eta) {
    const BTube tube{seg.boxes[s], seg.boxes[m], seg.boxes[e], s, m, e};
    double sum = 0.0;
    for (int i = s; i <= e; ++i) {
        const BBox fitted = interpolate(tube, i);
        sum += fitted == seg.boxes[i] ? 1.0 : box_iou(fitted, seg.boxes[i]);
    }
    return sum / static_cast<double>(e - s + 1) >= eta;
}

BTube best_tube(const Segment& seg, int m, const DecomposeParams& params) {
    const int n = static_cast<int>(seg.boxes.size());
    const int max_back = std::min(m, params.max_extent);
    const int max_fwd = std::min(n - 1 - m, params.max_extent);
    const int max_len = std::min(params.max_extent, max_back + max_fwd);

    for (int len = max_len; len > 0; --len) {
        // ds ordered by |ds - de| ascending, then larger ds (earlier start) first.
        std::vector<int> candidates;
        for (int ds = std::max(0, len - max_fwd); ds <= std::min(len, max_back); ++ds) {
            candidates.push_back(ds);
        }
        std::sort(candidates.begin(), candidates.end(), [len](int a, int b) {
            const int asym_a = std::abs(2 * a - len);
            const int asym_b = std::abs(2 * b - len);
            if (asym_a != asym_b) {
                return asym_a < asym_b;
            }
            return a > b;
        });
        for (int ds : candidates) {
            const int s = m - ds;
            const int e = m + (len - ds);
            if (feasible(seg, s, m, e, params.eta)) {
                return {seg.boxes[s], seg.boxes[m], seg.boxes[e], seg.first + s, seg.first + m,
                        seg.first + e};
            }
        }
    }
    const BBox& b = seg.boxes[m];
    return {b, b, b, seg.first + m, seg.first + m, seg.first + m};
}

}  // namespace

std::vector<BTube> decompose_track(const Track& track, const DecomposeParams& params) {
    if (track.boxes.empty()) {
        throw std::invalid_argument("decompose_track: track " + std::to_string(track.id) +
                                    " has no boxes");
    }
    if (!(params.eta > 0.0 && params.eta <= 1.0)) {
        throw std::invalid_argument("decompose_track: eta must lie in (0, 1]");
    }
    if (params.max_extent < 0) {
        throw std::invalid_argument("decompose_track: max_extent must be non-negative");
    }

    std::vector<BTube> tubes;
    tubes.reserve(track.boxes.size());
    for (const auto& boxes : contiguous_segments(track)) {
        Segment seg;
        seg.first = boxes.begin()->first;
        for (const auto& [frame, box] : boxes) {
            seg.boxes.push_back(box);
        }
        for (int m = 0; m < static_cast<int>(seg.boxes.size()); ++m) {
            tubes.push_back(best_tube(seg, m, params));
        }
    }
    return tubes;
}

std::map<Frame, BBox> recompose(const std::vector<BTube>& tubes) {
    struct Acc {
        BBox sum;
        int count = 0;
    };
    std::map<Frame, Acc> acc;
    for (const auto& tube : tubes) {
        for (Frame f = tube.ts; f <= tube.te; ++f) {
            const BBox b = interpolate(tube, f);
            Acc& a = acc[f];
            a.sum.x1 += b.x1;
            a.sum.y1 += b.y1;
            a.sum.x2 += b.x2;
            a.sum.y2 += b.y2;
            ++a.count;
        }
    }
    std::map<Frame, BBox> out;
    for (const auto& [f, a] : acc) {
        const double n = a.count;
        out.emplace_hint(out.end(), f, BBox{a.sum.x1 / n, a.sum.y1 / n, a.sum.x2 / n, a.sum.y2 / n});
    }
    return out;
}

}  // namespace tubekit
