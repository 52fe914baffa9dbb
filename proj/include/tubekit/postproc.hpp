#pragma once

#include <optional>
#include <span>
#include <vector>

#include "tubekit/geometry.hpp"
#include "tubekit/tubegen.hpp"

namespace tubekit {

struct LinkConfig {
    double beta = 0.4;    // linking threshold on the matching score
    double phi = 0.2;     // weight of the moving-direction term
    double gamma1 = 0.5;  // NMS threshold on IoU(B_m)
    double gamma2 = 0.4;  // NMS threshold on IoU(B_s') and IoU(B_e')
    int min_track_len = 0;

    void validate() const;
};

/// True when `lower` would be suppressed by `kept`: same B_m frame and
/// IoU(B_m) > gamma1, IoU(B_s') > gamma2, IoU(B_e') > gamma2 on the
/// shared frame range [max(ts), min(te)].
bool tube_suppresses(const BTube& kept, const BTube& lower, double gamma1, double gamma2);

/// Tube NMS within each B_m frame group, highest score first. Returns the
/// surviving tubes in input order. Groups are processed in parallel.
std::vector<ScoredTube> tube_nms(std::span<const ScoredTube> tubes, double gamma1, double gamma2);

/// Direction-weighted mean overlap IoU between a track and a tube, clamped
/// at 0. std::nullopt when their frame spans do not overlap.
std::optional<double> matching_score(const Track& track, const BTube& tube, double phi);

/// Extends `track` with `tube`: overlap frames are averaged, frames outside
/// the track come from the tube. Throws std::invalid_argument when the spans
/// do not overlap.
Track link(const Track& track, const BTube& tube);

/// Scores between every track (rows) and tube (columns); no-overlap pairs
/// are -1. Rows are computed in parallel.
std::vector<std::vector<double>> score_matrix(std::span<const Track> tracks, std::span<const BTube> tubes,
                                              double phi);

/// Online greedy linking of NMS-filtered tubes into tracks. When video_len is
/// positive, output tracks are clipped to frames [1, video_len].
std::vector<Track> greedy_link(std::span<const ScoredTube> tubes, const LinkConfig& cfg, int video_len = 0);

}  // namespace tubekit
