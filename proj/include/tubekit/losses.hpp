#pragma once

#include <array>
#include <span>

#include "tubekit/encoder.hpp"

namespace tubekit {

struct FocalParams {
    double alpha = 0.25;
    double gamma = 2.0;
};

/// Summed (unnormalized) focal loss. Predictions must lie in (0, 1) and
/// targets in {0, 1}; throws std::invalid_argument otherwise.
double focal_loss(std::span<const double> pred, std::span<const double> target,
                  const FocalParams& params = {});

/// Binary cross-entropy against a soft target in [0, 1].
double binary_cross_entropy(double pred, double target);

struct TubeLoss {
    double loss = 0.0;
    std::array<double, RegressionTarget::kSize> grad{};
    bool clamped = false;
};

/// 1 - Tube GIoU between the tubes decoded from `pred` and `gt` at point p,
/// with the gradient w.r.t. the 14 predicted values.
///
/// ds / de are relaxed to reals: with ds = n + f (0 <= f < 1) the tube holds
/// frames m - n .. m interpolated towards B_s at offset ds, plus the B_s box
/// itself at offset n + 1 weighted by f. At integer lengths this is exactly
/// the discrete Tube GIoU of the decoded tubes. Inverted predicted boxes
/// count as zero area and set `clamped`.
TubeLoss tube_giou_loss(const RegressionTarget& pred, const RegressionTarget& gt);

struct LossWeights {
    double lambda = 1.0;
    double alpha = 1.0;
    FocalParams focal;
};

struct LossBreakdown {
    double cls = 0.0;
    double reg = 0.0;
    double cent = 0.0;
    double total = 0.0;
    long n_pos = 0;
};

/// Full training objective over all levels. `pred` must have the shape of
/// `target`; its confidence and center-ness grids hold probabilities.
LossBreakdown total_loss(const TargetMaps& pred, const TargetMaps& target, const LossWeights& weights = {});

}  // namespace tubekit
