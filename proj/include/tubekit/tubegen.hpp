#pragma once

#include <map>
#include <vector>

#include "tubekit/geometry.hpp"

namespace tubekit {

using TrackId = int;

/// A whole track: identity plus frame-indexed boxes, optionally with
/// per-frame visibility in [0, 1].
struct Track {
    TrackId id = 0;
    std::map<Frame, BBox> boxes;
    std::map<Frame, double> visibility;

    bool empty() const { return boxes.empty(); }
    Frame first_frame() const { return boxes.begin()->first; }
    Frame last_frame() const { return boxes.rbegin()->first; }

    friend bool operator==(const Track&, const Track&) = default;
};

struct DecomposeParams {
    double eta = 0.8;
    int max_extent = 16;
};

/// Splits a track into maximal runs of consecutive frames.
std::vector<std::map<Frame, BBox>> contiguous_segments(const Track& track);

/// Mean per-frame IoU between a tube and the ground-truth boxes it spans.
/// Frames where the interpolated box equals the ground truth count as 1.
double mean_fit_iou(const BTube& tube, const std::map<Frame, BBox>& gt);

/// One tube per ground-truth box (that box as B_m), each as long as the
/// mean-IoU threshold and max_extent allow. Tubes never cross a frame gap.
/// Equal-length candidates prefer |ds - de| minimal, then the earlier start.
std::vector<BTube> decompose_track(const Track& track, const DecomposeParams& params = {});

/// Per-frame coordinate-wise mean of all tubes covering that frame.
std::map<Frame, BBox> recompose(const std::vector<BTube>& tubes);

}  // namespace tubekit
