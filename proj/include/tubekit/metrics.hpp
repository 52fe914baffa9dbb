#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tubekit/tubegen.hpp"

namespace tubekit {

struct MotReport {
    double mota = 0.0;
    double idf1 = 0.0;
    double idp = 0.0;
    double idr = 0.0;
    long fp = 0;
    long fn = 0;
    long ids = 0;
    long matches = 0;
    long gt_boxes = 0;
    long pred_boxes = 0;
    long idtp = 0;
    long idfp = 0;
    long idfn = 0;
    int gt_tracks = 0;
    int mt = 0;
    int ml = 0;
    double mt_pct = 0.0;
    double ml_pct = 0.0;
};

/// Outcome for one ground-truth box.
struct GtBoxEvent {
    TrackId gt_id = 0;
    Frame frame = 0;
    std::optional<TrackId> pred_id;
    bool switched = false;
};

struct Evaluation {
    MotReport report;
    std::vector<GtBoxEvent> events;  // frame-major, then gt id
};

/// CLEAR MOT and identity metrics. Per frame, previous correspondences that
/// still reach iou_thresh are kept, the rest are matched by a min-cost
/// assignment on 1 - IoU. Throws std::invalid_argument when an id appears
/// twice in one frame of either input.
Evaluation evaluate_detailed(std::span<const Track> pred, std::span<const Track> gt, double iou_thresh = 0.5);
MotReport evaluate(std::span<const Track> pred, std::span<const Track> gt, double iou_thresh = 0.5);

struct VisibilityBin {
    double lo = 0.0;
    double hi = 0.0;
    long gt_boxes = 0;
    long tracked = 0;
    long switches = 0;
    double tracked_ratio = 0.0;
    double ids_over_idr = 0.0;
};

/// `n` equal bins over [0, 1], as edges.
std::vector<double> uniform_bin_edges(int n = 10);

/// Tracked ratio and identity switches (divided by global ID recall) per
/// visibility bin. Every GT box must carry a visibility value.
std::vector<VisibilityBin> visibility_analysis(std::span<const Track> pred, std::span<const Track> gt,
                                               std::span<const double> edges, double iou_thresh = 0.5);

std::string format_report_text(const MotReport& r);
/// One metric per line, NAME<TAB>VALUE.
std::string format_report_kv(const MotReport& r);
std::string format_visibility_text(std::span<const VisibilityBin> bins);

}  // namespace tubekit
