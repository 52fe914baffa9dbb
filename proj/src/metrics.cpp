#include "tubekit/metrics.hpp"

#include <algorithm>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include "tubekit/assignment.hpp"

namespace tubekit {

namespace {

struct FrameBox {
    TrackId id;
    BBox box;
};

using FrameIndex = std::map<Frame, std::vector<FrameBox>>;

FrameIndex index_by_frame(std::span<const Track> tracks, const char* what) {
    FrameIndex index;
    for (const auto& track : tracks) {
        for (const auto& [frame, box] : track.boxes) {
            index[frame].push_back({track.id, box});
        }
    }
    for (auto& [frame, boxes] : index) {
        std::sort(boxes.begin(), boxes.end(), [](const FrameBox& a, const FrameBox& b) { return a.id < b.id; });
        for (std::size_t i = 1; i < boxes.size(); ++i) {
            if (boxes[i].id == boxes[i - 1].id) {
                throw std::invalid_argument(std::string("evaluate: duplicate ") + what + " id " +
                                            std::to_string(boxes[i].id) + " in frame " + std::to_string(frame));
            }
        }
    }
    return index;
}

double ratio_or_zero(double num, double den) { return den > 0.0 ? num / den : 0.0; }

}  // namespace

Evaluation evaluate_detailed(std::span<const Track> pred, std::span<const Track> gt, double iou_thresh) {
    const FrameIndex gt_index = index_by_frame(gt, "ground-truth");
    const FrameIndex pred_index = index_by_frame(pred, "prediction");

    std::set<Frame> frames;
    for (const auto& [f, _] : gt_index) frames.insert(f);
    for (const auto& [f, _] : pred_index) frames.insert(f);

    Evaluation out;
    MotReport& r = out.report;
    std::map<TrackId, TrackId> last_match;
    std::map<TrackId, long> gt_len, gt_hits, pred_len;
    std::map<std::pair<TrackId, TrackId>, long> pair_hits;
    static const std::vector<FrameBox> kNone;

    for (Frame frame : frames) {
        const auto git = gt_index.find(frame);
        const auto pit = pred_index.find(frame);
        const auto& gts = git != gt_index.end() ? git->second : kNone;
        const auto& preds = pit != pred_index.end() ? pit->second : kNone;

        std::vector<std::vector<double>> iou(gts.size(), std::vector<double>(preds.size()));
        for (std::size_t i = 0; i < gts.size(); ++i) {
            for (std::size_t j = 0; j < preds.size(); ++j) {
                iou[i][j] = box_iou(gts[i].box, preds[j].box);
                if (iou[i][j] >= iou_thresh) {
                    ++pair_hits[{gts[i].id, preds[j].id}];
                }
            }
        }

        std::vector<int> match(gts.size(), -1);
        std::vector<char> pred_taken(preds.size(), 0);

        // Carry over still-valid correspondences.
        for (std::size_t i = 0; i < gts.size(); ++i) {
            const auto prev = last_match.find(gts[i].id);
            if (prev == last_match.end()) {
                continue;
            }
            for (std::size_t j = 0; j < preds.size(); ++j) {
                if (preds[j].id == prev->second && !pred_taken[j] && iou[i][j] >= iou_thresh) {
                    match[i] = static_cast<int>(j);
                    pred_taken[j] = 1;
                    break;
                }
            }
        }

        std::vector<std::size_t> free_gt, free_pred;
        for (std::size_t i = 0; i < gts.size(); ++i) {
            if (match[i] < 0) free_gt.push_back(i);
        }
        for (std::size_t j = 0; j < preds.size(); ++j) {
            if (!pred_taken[j]) free_pred.push_back(j);
        }
        if (!free_gt.empty() && !free_pred.empty()) {
            std::vector<std::vector<double>> cost(free_gt.size(), std::vector<double>(free_pred.size()));
            std::vector<std::vector<bool>> allowed(free_gt.size(), std::vector<bool>(free_pred.size()));
            for (std::size_t a = 0; a < free_gt.size(); ++a) {
                for (std::size_t b = 0; b < free_pred.size(); ++b) {
                    const double v = iou[free_gt[a]][free_pred[b]];
                    cost[a][b] = 1.0 - v;
                    allowed[a][b] = v >= iou_thresh;
                }
            }
            const std::vector<int> assigned = min_cost_assignment(cost, allowed);
            for (std::size_t a = 0; a < free_gt.size(); ++a) {
                if (assigned[a] >= 0) {
                    match[free_gt[a]] = static_cast<int>(free_pred[assigned[a]]);
                    pred_taken[free_pred[assigned[a]]] = 1;
                }
            }
        }

        for (std::size_t i = 0; i < gts.size(); ++i) {
            GtBoxEvent ev;
            ev.gt_id = gts[i].id;
            ev.frame = frame;
            ++gt_len[gts[i].id];
            if (match[i] >= 0) {
                const TrackId hyp = preds[match[i]].id;
                ev.pred_id = hyp;
                const auto prev = last_match.find(gts[i].id);
                if (prev != last_match.end() && prev->second != hyp) {
                    ev.switched = true;
                    ++r.ids;
                }
                last_match[gts[i].id] = hyp;
                ++gt_hits[gts[i].id];
                ++r.matches;
            } else {
                ++r.fn;
            }
            out.events.push_back(ev);
        }
        for (std::size_t j = 0; j < preds.size(); ++j) {
            ++pred_len[preds[j].id];
            if (!pred_taken[j]) {
                ++r.fp;
            }
        }
        r.gt_boxes += static_cast<long>(gts.size());
        r.pred_boxes += static_cast<long>(preds.size());
    }

    r.mota = 1.0 - static_cast<double>(r.fp + r.fn + r.ids) / static_cast<double>(std::max(r.gt_boxes, 1L));

    r.gt_tracks = static_cast<int>(gt_len.size());
    for (const auto& [id, len] : gt_len) {
        const double covered = static_cast<double>(gt_hits[id]) / static_cast<double>(len);
        if (covered >= 0.8) ++r.mt;
        if (covered <= 0.2) ++r.ml;
    }
    r.mt_pct = ratio_or_zero(r.mt, r.gt_tracks);
    r.ml_pct = ratio_or_zero(r.ml, r.gt_tracks);

    // Identity measures: one-to-one trajectory assignment maximizing the
    // number of frames where the paired boxes match.
    std::vector<TrackId> gt_ids, pred_ids;
    for (const auto& [id, _] : gt_len) gt_ids.push_back(id);
    for (const auto& [id, _] : pred_len) pred_ids.push_back(id);
    if (!gt_ids.empty() && !pred_ids.empty()) {
        std::vector<std::vector<double>> cost(gt_ids.size(), std::vector<double>(pred_ids.size(), 0.0));
        std::vector<std::vector<bool>> allowed(gt_ids.size(), std::vector<bool>(pred_ids.size(), true));
        for (std::size_t i = 0; i < gt_ids.size(); ++i) {
            for (std::size_t j = 0; j < pred_ids.size(); ++j) {
                const auto it = pair_hits.find({gt_ids[i], pred_ids[j]});
                cost[i][j] = it != pair_hits.end() ? -static_cast<double>(it->second) : 0.0;
            }
        }
        const std::vector<int> assigned = min_cost_assignment(cost, allowed);
        for (std::size_t i = 0; i < gt_ids.size(); ++i) {
            if (assigned[i] >= 0) {
                r.idtp += static_cast<long>(-cost[i][assigned[i]]);
            }
        }
    }
    r.idfn = r.gt_boxes - r.idtp;
    r.idfp = r.pred_boxes - r.idtp;
    r.idp = ratio_or_zero(r.idtp, r.idtp + r.idfp);
    r.idr = ratio_or_zero(r.idtp, r.idtp + r.idfn);
    r.idf1 = ratio_or_zero(2.0 * r.idtp, 2.0 * r.idtp + r.idfp + r.idfn);
    return out;
}

MotReport evaluate(std::span<const Track> pred, std::span<const Track> gt, double iou_thresh) {
    return evaluate_detailed(pred, gt, iou_thresh).report;
}

std::vector<double> uniform_bin_edges(int n) {
    if (n < 1) {
        throw std::invalid_argument("uniform_bin_edges: need at least one bin");
    }
    std::vector<double> edges;
    for (int i = 0; i <= n; ++i) {
        edges.push_back(static_cast<double>(i) / n);
    }
    return edges;
}

std::vector<VisibilityBin> visibility_analysis(std::span<const Track> pred, std::span<const Track> gt,
                                               std::span<const double> edges, double iou_thresh) {
    if (edges.size() < 2 || !std::is_sorted(edges.begin(), edges.end())) {
        throw std::invalid_argument("visibility_analysis: need at least two ascending bin edges");
    }
    std::map<std::pair<TrackId, Frame>, double> vis;
    for (const auto& track : gt) {
        for (const auto& [frame, box] : track.boxes) {
            const auto it = track.visibility.find(frame);
            if (it == track.visibility.end()) {
                throw std::invalid_argument("visibility_analysis: track " + std::to_string(track.id) +
                                            " has no visibility at frame " + std::to_string(frame));
            }
            vis[{track.id, frame}] = it->second;
        }
    }

    const Evaluation ev = evaluate_detailed(pred, gt, iou_thresh);
    std::vector<VisibilityBin> bins(edges.size() - 1);
    for (std::size_t b = 0; b < bins.size(); ++b) {
        bins[b].lo = edges[b];
        bins[b].hi = edges[b + 1];
    }
    for (const auto& e : ev.events) {
        const double v = vis.at({e.gt_id, e.frame});
        auto it = std::upper_bound(edges.begin(), edges.end(), v);
        std::size_t b = it == edges.begin() ? 0 : static_cast<std::size_t>(it - edges.begin()) - 1;
        b = std::min(b, bins.size() - 1);
        ++bins[b].gt_boxes;
        if (e.pred_id) ++bins[b].tracked;
        if (e.switched) ++bins[b].switches;
    }
    for (auto& bin : bins) {
        bin.tracked_ratio = ratio_or_zero(bin.tracked, bin.gt_boxes);
        bin.ids_over_idr = ratio_or_zero(bin.switches, ev.report.idr);
    }
    return bins;
}

std::string format_report_text(const MotReport& r) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(1);
    os << std::left << std::setw(8) << "MOTA" << std::right << std::setw(10) << 100.0 * r.mota << '\n';
    os << std::left << std::setw(8) << "IDF1" << std::right << std::setw(10) << 100.0 * r.idf1 << '\n';
    os << std::left << std::setw(8) << "IDP" << std::right << std::setw(10) << 100.0 * r.idp << '\n';
    os << std::left << std::setw(8) << "IDR" << std::right << std::setw(10) << 100.0 * r.idr << '\n';
    os << std::left << std::setw(8) << "MT" << std::right << std::setw(10) << r.mt << "  (" << 100.0 * r.mt_pct
       << "%)\n";
    os << std::left << std::setw(8) << "ML" << std::right << std::setw(10) << r.ml << "  (" << 100.0 * r.ml_pct
       << "%)\n";
    os << std::left << std::setw(8) << "FP" << std::right << std::setw(10) << r.fp << '\n';
    os << std::left << std::setw(8) << "FN" << std::right << std::setw(10) << r.fn << '\n';
    os << std::left << std::setw(8) << "IDS" << std::right << std::setw(10) << r.ids << '\n';
    os << std::left << std::setw(8) << "GT" << std::right << std::setw(10) << r.gt_boxes << '\n';
    return os.str();
}

std::string format_report_kv(const MotReport& r) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(4);
    os << "MOTA\t" << 100.0 * r.mota << '\n';
    os << "IDF1\t" << 100.0 * r.idf1 << '\n';
    os << "IDP\t" << 100.0 * r.idp << '\n';
    os << "IDR\t" << 100.0 * r.idr << '\n';
    os << "MT\t" << r.mt << '\n';
    os << "ML\t" << r.ml << '\n';
    os << "MT_PCT\t" << 100.0 * r.mt_pct << '\n';
    os << "ML_PCT\t" << 100.0 * r.ml_pct << '\n';
    os << "FP\t" << r.fp << '\n';
    os << "FN\t" << r.fn << '\n';
    os << "IDS\t" << r.ids << '\n';
    os << "GT_BOXES\t" << r.gt_boxes << '\n';
    os << "GT_TRACKS\t" << r.gt_tracks << '\n';
    return os.str();
}

std::string format_visibility_text(std::span<const VisibilityBin> bins) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(3);
    os << "visibility        boxes  tracked  ratio    ids/idr\n";
    for (const auto& b : bins) {
        const char close = &b == &bins.back() ? ']' : ')';
        os << '[' << b.lo << ", " << b.hi << close << "  " << std::setw(7) << b.gt_boxes << std::setw(9) << b.tracked
           << std::setw(7) << b.tracked_ratio << std::setw(11) << b.ids_over_idr << '\n';
    }
    return os.str();
}

}  // namespace tubekit
