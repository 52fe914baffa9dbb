#pragma once

// Single-threaded reference versions of the OpenMP kernels. They follow the
// plainest loop order (encode_targets walks the tubes over the whole clip
// instead of per-frame buckets) and exist to cross-check and benchmark the
// parallel paths.

#include <span>
#include <vector>

#include "tubekit/encoder.hpp"
#include "tubekit/losses.hpp"
#include "tubekit/postproc.hpp"

namespace tubekit {

/// Tube IoU between every pair, rows from `a`. Rows are computed in parallel.
std::vector<std::vector<double>> pairwise_tube_iou(std::span<const BTube> a, std::span<const BTube> b);

namespace serial {

std::vector<std::vector<double>> pairwise_tube_iou(std::span<const BTube> a, std::span<const BTube> b);
std::vector<ScoredTube> tube_nms(std::span<const ScoredTube> tubes, double gamma1, double gamma2);
std::vector<std::vector<double>> score_matrix(std::span<const Track> tracks, std::span<const BTube> tubes,
                                              double phi);
TargetMaps encode_targets(std::span<const BTube> tubes, const EncodeParams& params);
LossBreakdown total_loss(const TargetMaps& pred, const TargetMaps& target, const LossWeights& weights = {});

}  // namespace serial
}  // namespace tubekit
