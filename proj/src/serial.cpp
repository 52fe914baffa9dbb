#include "tubekit/serial.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace tubekit {

std::vector<std::vector<double>> pairwise_tube_iou(std::span<const BTube> a, std::span<const BTube> b) {
    std::vector<std::vector<double>> out(a.size(), std::vector<double>(b.size(), 0.0));
    const long rows = static_cast<long>(a.size());
#pragma omp parallel for schedule(dynamic)
    for (long i = 0; i < rows; ++i) {
        for (std::size_t j = 0; j < b.size(); ++j) {
            out[i][j] = tube_iou(a[i], b[j]);
        }
    }
    return out;
}

namespace serial {

std::vector<std::vector<double>> pairwise_tube_iou(std::span<const BTube> a, std::span<const BTube> b) {
    std::vector<std::vector<double>> out(a.size(), std::vector<double>(b.size(), 0.0));
    for (std::size_t i = 0; i < a.size(); ++i) {
        for (std::size_t j = 0; j < b.size(); ++j) {
            out[i][j] = tube_iou(a[i], b[j]);
        }
    }
    return out;
}

std::vector<ScoredTube> tube_nms(std::span<const ScoredTube> tubes, double gamma1, double gamma2) {
    std::vector<std::size_t> order(tubes.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (tubes[a].tube.tm != tubes[b].tube.tm) {
            return tubes[a].tube.tm < tubes[b].tube.tm;
        }
        return tubes[a].score > tubes[b].score;
    });
    std::vector<char> keep(tubes.size(), 0);
    std::vector<std::size_t> kept;
    for (std::size_t idx : order) {
        bool suppressed = false;
        for (std::size_t k : kept) {
            if (tube_suppresses(tubes[k].tube, tubes[idx].tube, gamma1, gamma2)) {
                suppressed = true;
                break;
            }
        }
        if (!suppressed) {
            kept.push_back(idx);
            keep[idx] = 1;
        }
    }
    std::vector<ScoredTube> out;
    for (std::size_t i = 0; i < tubes.size(); ++i) {
        if (keep[i]) {
            out.push_back(tubes[i]);
        }
    }
    return out;
}

std::vector<std::vector<double>> score_matrix(std::span<const Track> tracks, std::span<const BTube> tubes,
                                              double phi) {
    std::vector<std::vector<double>> s(tracks.size(), std::vector<double>(tubes.size(), -1.0));
    for (std::size_t i = 0; i < tracks.size(); ++i) {
        for (std::size_t j = 0; j < tubes.size(); ++j) {
            if (const auto score = matching_score(tracks[i], tubes[j], phi)) {
                s[i][j] = *score;
            }
        }
    }
    return s;
}

TargetMaps encode_targets(std::span<const BTube> tubes, const EncodeParams& params) {
    if (params.clip_len < 1 || params.levels.empty() || params.image_h < 1 || params.image_w < 1) {
        throw std::invalid_argument("serial::encode_targets: bad parameters");
    }
    for (const auto& tube : tubes) {
        if (tube.tm < params.clip_start || tube.tm >= params.clip_start + params.clip_len) {
            throw std::invalid_argument("serial::encode_targets: tube B_m frame outside clip");
        }
    }
    TargetMaps maps;
    maps.clip_start = params.clip_start;
    maps.clip_len = params.clip_len;
    maps.image_h = params.image_h;
    maps.image_w = params.image_w;
    for (const auto& spec : params.levels) {
        LevelMaps level;
        level.spec = spec;
        level.frames = params.clip_len;
        level.height = (params.image_h + spec.stride - 1) / spec.stride;
        level.width = (params.image_w + spec.stride - 1) / spec.stride;
        level = level.zeros_like();
        std::vector<double> best_area(level.size(), std::numeric_limits<double>::infinity());

        for (const auto& tube : tubes) {
            const int t = tube.tm - params.clip_start;
            const double s = spec.stride;
            const BBox& bm = tube.bm;
            // Candidate cells, widened by one and filtered by the exact test.
            const int x_lo = std::max(0, static_cast<int>(std::floor((bm.x1 - 0.5 * s) / s)) - 1);
            const int x_hi = std::min(level.width - 1, static_cast<int>(std::ceil((bm.x2 - 0.5 * s) / s)) + 1);
            const int y_lo = std::max(0, static_cast<int>(std::floor((bm.y1 - 0.5 * s) / s)) - 1);
            const int y_hi = std::min(level.height - 1, static_cast<int>(std::ceil((bm.y2 - 0.5 * s) / s)) + 1);
            const double area = box_area(bm);
            for (int y = y_lo; y <= y_hi; ++y) {
                for (int x = x_lo; x <= x_hi; ++x) {
                    const MapPoint p = map_point(spec, params.clip_start, t, y, x);
                    if (p.px < bm.x1 || p.px > bm.x2 || p.py < bm.y1 || p.py > bm.y2) {
                        continue;
                    }
                    const double reach = std::max({p.px - bm.x1, p.py - bm.y1, bm.x2 - p.px, bm.y2 - p.py});
                    if (!(reach > spec.min_size && reach <= spec.max_size)) {
                        continue;
                    }
                    const std::size_t idx = level.index(t, y, x);
                    if (area < best_area[idx]) {
                        best_area[idx] = area;
                        const RegressionTarget r = make_target(tube, p.px, p.py);
                        level.confidence[idx] = 1.0;
                        level.regression[idx] = r;
                        level.centerness[idx] = centerness(r);
                    }
                }
            }
        }
        maps.levels.push_back(std::move(level));
    }
    return maps;
}

LossBreakdown total_loss(const TargetMaps& pred, const TargetMaps& target, const LossWeights& weights) {
    if (pred.levels.size() != target.levels.size()) {
        throw std::invalid_argument("serial::total_loss: level count mismatch");
    }
    LossBreakdown out;
    double cls = 0.0, reg = 0.0, cent = 0.0;
    for (std::size_t l = 0; l < pred.levels.size(); ++l) {
        const auto& p = pred.levels[l];
        const auto& t = target.levels[l];
        if (p.size() != t.size()) {
            throw std::invalid_argument("serial::total_loss: shape mismatch");
        }
        for (std::size_t i = 0; i < p.size(); ++i) {
            const double c = p.confidence[i];
            cls += focal_loss(std::span<const double>(&c, 1), std::span<const double>(&t.confidence[i], 1),
                              weights.focal);
            if (t.confidence[i] > 0.5) {
                ++out.n_pos;
                reg += tube_giou_loss(p.regression[i], t.regression[i]).loss;
                cent += binary_cross_entropy(p.centerness[i], t.centerness[i]);
            }
        }
    }
    const double norm = out.n_pos > 0 ? static_cast<double>(out.n_pos) : 1.0;
    out.cls = cls / norm;
    out.reg = out.n_pos > 0 ? reg / norm : 0.0;
    out.cent = out.n_pos > 0 ? cent / norm : 0.0;
    out.total = out.cls + weights.lambda * out.reg + weights.alpha * out.cent;
    return out;
}

}  // namespace serial
}  // namespace tubekit
