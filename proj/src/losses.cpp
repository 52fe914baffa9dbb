#include "tubekit/losses.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace tubekit {

namespace {

constexpr double kProbEps = 1e-12;

double focal_term(double p, double target, const FocalParams& params) {
    if (target > 0.5) {
        return -params.alpha * std::pow(1.0 - p, params.gamma) * std::log(p);
    }
    return -(1.0 - params.alpha) * std::pow(p, params.gamma) * std::log(1.0 - p);
}

void check_focal_inputs(std::span<const double> pred, std::span<const double> target) {
    if (pred.size() != target.size()) {
        throw std::invalid_argument("focal_loss: shape mismatch");
    }
    for (std::size_t i = 0; i < pred.size(); ++i) {
        if (!(pred[i] > 0.0 && pred[i] < 1.0)) {
            throw std::invalid_argument("focal_loss: prediction outside (0, 1)");
        }
        if (target[i] != 0.0 && target[i] != 1.0) {
            throw std::invalid_argument("focal_loss: target must be 0 or 1");
        }
    }
}

}  // namespace

double focal_loss(std::span<const double> pred, std::span<const double> target, const FocalParams& params) {
    check_focal_inputs(pred, target);
    double sum = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        sum += focal_term(pred[i], target[i], params);
    }
    return sum;
}

double binary_cross_entropy(double pred, double target) {
    const double p = std::clamp(pred, kProbEps, 1.0 - kProbEps);
    return -(target * std::log(p) + (1.0 - target) * std::log(1.0 - p));
}

namespace {

constexpr std::size_t kParams = RegressionTarget::kSize;
constexpr int kDs = 12;
constexpr int kDe = 13;

using Grad = std::array<double, kParams>;

// Box with the gradient of each coordinate w.r.t. the 14 predicted values.
struct DiffBox {
    std::array<double, 4> v{};
    std::array<Grad, 4> g{};
};

// Box from side distances around the origin: (-l, -t, r, b). Inverted axes
// collapse to their midpoint, as decode_target does.
DiffBox endpoint_box(const std::array<double, kParams>& r, int first, bool track_grad, bool& clamped) {
    DiffBox box;
    static constexpr double kSign[4] = {-1.0, -1.0, 1.0, 1.0};
    for (int c = 0; c < 4; ++c) {
        box.v[c] = kSign[c] * r[first + c];
        if (track_grad) {
            box.g[c][first + c] = kSign[c];
        }
    }
    for (int axis = 0; axis < 2; ++axis) {
        const int lo = axis;
        const int hi = axis + 2;
        if (box.v[lo] > box.v[hi]) {
            clamped = true;
            const double mid = 0.5 * (box.v[lo] + box.v[hi]);
            box.v[lo] = box.v[hi] = mid;
            for (std::size_t p = 0; p < kParams; ++p) {
                const double gm = 0.5 * (box.g[lo][p] + box.g[hi][p]);
                box.g[lo][p] = box.g[hi][p] = gm;
            }
        }
    }
    return box;
}

struct Sample {
    double w = 0.0;
    double dw = 0.0;  // d w / d(length of this side)
    DiffBox box;
};

struct SideTube {
    DiffBox mid;
    DiffBox end;
    double len = 0.0;
    bool len_live = true;  // false once a negative length was clamped
    int len_param = kDs;
};

// Sample at offset k >= 1 from B_m along one side.
Sample side_sample(const SideTube& side, int k) {
    Sample s;
    const double n = std::floor(side.len);
    if (k <= n) {
        const double a = k / side.len;
        s.w = 1.0;
        for (int c = 0; c < 4; ++c) {
            const double diff = side.end.v[c] - side.mid.v[c];
            s.box.v[c] = side.mid.v[c] + diff * a;
            for (std::size_t p = 0; p < kParams; ++p) {
                s.box.g[c][p] = side.mid.g[c][p] * (1.0 - a) + side.end.g[c][p] * a;
            }
            if (side.len_live) {
                s.box.g[c][side.len_param] += -diff * k / (side.len * side.len);
            }
        }
    } else if (k == n + 1) {
        s.w = side.len - n;
        s.dw = side.len_live ? 1.0 : 0.0;
        s.box = side.end;
    }
    return s;
}

struct AreaGrad {
    double area = 0.0;
    std::array<double, 4> d{};  // w.r.t. the four coordinates
};

AreaGrad area_of(const std::array<double, 4>& b) {
    const double w = b[2] - b[0];
    const double h = b[3] - b[1];
    AreaGrad a;
    if (w <= 0.0 || h <= 0.0) {
        return a;
    }
    a.area = w * h;
    a.d = {-h, -w, h, w};
    return a;
}

// Intersection area; gradient w.r.t. the first box's coordinates.
AreaGrad intersection_of(const std::array<double, 4>& p, const std::array<double, 4>& g) {
    const double x1 = std::max(p[0], g[0]);
    const double y1 = std::max(p[1], g[1]);
    const double x2 = std::min(p[2], g[2]);
    const double y2 = std::min(p[3], g[3]);
    AreaGrad a;
    const double w = x2 - x1;
    const double h = y2 - y1;
    if (w <= 0.0 || h <= 0.0) {
        return a;
    }
    a.area = w * h;
    a.d = {p[0] > g[0] ? -h : 0.0, p[1] > g[1] ? -w : 0.0, p[2] < g[2] ? h : 0.0, p[3] < g[3] ? w : 0.0};
    return a;
}

AreaGrad enclosure_of(const std::array<double, 4>& p, const std::array<double, 4>& g) {
    const double x1 = std::min(p[0], g[0]);
    const double y1 = std::min(p[1], g[1]);
    const double x2 = std::max(p[2], g[2]);
    const double y2 = std::max(p[3], g[3]);
    AreaGrad a;
    const double w = x2 - x1;
    const double h = y2 - y1;
    if (w <= 0.0 || h <= 0.0) {
        return a;
    }
    a.area = w * h;
    a.d = {p[0] < g[0] ? -h : 0.0, p[1] < g[1] ? -w : 0.0, p[2] > g[2] ? h : 0.0, p[3] > g[3] ? w : 0.0};
    return a;
}

void add_chain(Grad& out, double scale, const AreaGrad& a, const DiffBox& box) {
    if (scale == 0.0) {
        return;
    }
    for (int c = 0; c < 4; ++c) {
        if (a.d[c] == 0.0) {
            continue;
        }
        for (std::size_t p = 0; p < kParams; ++p) {
            out[p] += scale * a.d[c] * box.g[c][p];
        }
    }
}

struct Accum {
    double vp = 0.0, vg = 0.0, inter = 0.0, hull = 0.0;
    Grad dvp{}, dinter{}, dhull{};
};

void accumulate(Accum& acc, const Sample& ps, int len_param, const Sample& gs) {
    const AreaGrad ap = area_of(ps.box.v);
    const AreaGrad ag = area_of(gs.box.v);
    const AreaGrad ai = intersection_of(ps.box.v, gs.box.v);
    const AreaGrad ae = enclosure_of(ps.box.v, gs.box.v);
    const double wp = ps.w;
    const double wg = gs.w;

    acc.vp += wp * ap.area;
    acc.vg += wg * ag.area;
    acc.inter += wp * wg * ai.area;
    acc.hull += wp * wg * ae.area + wp * (1.0 - wg) * ap.area + (1.0 - wp) * wg * ag.area;

    add_chain(acc.dvp, wp, ap, ps.box);
    add_chain(acc.dinter, wp * wg, ai, ps.box);
    add_chain(acc.dhull, wp * wg, ae, ps.box);
    add_chain(acc.dhull, wp * (1.0 - wg), ap, ps.box);
    if (ps.dw != 0.0) {
        acc.dvp[len_param] += ps.dw * ap.area;
        acc.dinter[len_param] += ps.dw * wg * ai.area;
        acc.dhull[len_param] += ps.dw * (wg * ae.area + (1.0 - wg) * ap.area - wg * ag.area);
    }
}

}  // namespace

TubeLoss tube_giou_loss(const RegressionTarget& pred, const RegressionTarget& gt) {
    TubeLoss out;
    const auto pr = pred.to_array();
    const auto gr = gt.to_array();
    bool gt_clamped = false;

    const DiffBox pm = endpoint_box(pr, 0, true, out.clamped);
    const DiffBox gm = endpoint_box(gr, 0, false, gt_clamped);

    auto make_side = [&](const std::array<double, kParams>& r, const DiffBox& mid, int first, int len_param,
                         bool track_grad, bool& clamped) {
        SideTube side;
        side.mid = mid;
        side.end = endpoint_box(r, first, track_grad, clamped);
        side.len_param = len_param;
        side.len = r[len_param];
        side.len_live = track_grad;
        if (side.len < 0.0) {
            clamped = true;
            side.len = 0.0;
            side.len_live = false;
        }
        return side;
    };

    Accum acc;
    Sample pm_sample{1.0, 0.0, pm};
    Sample gm_sample{1.0, 0.0, gm};
    accumulate(acc, pm_sample, kDs, gm_sample);

    for (const int len_param : {kDs, kDe}) {
        const int first = len_param == kDs ? 4 : 8;
        const SideTube ps = make_side(pr, pm, first, len_param, true, out.clamped);
        const SideTube gs = make_side(gr, gm, first, len_param, false, gt_clamped);
        const int reach = static_cast<int>(std::max(std::floor(ps.len), std::floor(gs.len))) + 1;
        for (int k = 1; k <= reach; ++k) {
            const Sample p = side_sample(ps, k);
            const Sample g = side_sample(gs, k);
            if (p.w == 0.0 && g.w == 0.0 && p.dw == 0.0) {
                continue;
            }
            accumulate(acc, p, len_param, g);
        }
    }

    // L = 1 - GIoU = 1 - I/U + (D - U)/D, with U = Vp + Vg - I.
    const double uni = acc.vp + acc.vg - acc.inter;
    double loss = 1.0;
    Grad grad{};
    if (uni > 0.0) {
        loss -= acc.inter / uni;
        for (std::size_t p = 0; p < kParams; ++p) {
            const double du = acc.dvp[p] - acc.dinter[p];
            grad[p] -= (acc.dinter[p] * uni - acc.inter * du) / (uni * uni);
        }
    }
    if (acc.hull > 0.0) {
        loss += (acc.hull - uni) / acc.hull;
        for (std::size_t p = 0; p < kParams; ++p) {
            const double du = acc.dvp[p] - acc.dinter[p];
            // d/dθ (1 - U/D)
            grad[p] -= (du * acc.hull - uni * acc.dhull[p]) / (acc.hull * acc.hull);
        }
    }
    out.loss = loss;
    out.grad = grad;
    return out;
}

namespace {

void check_same_shape(const TargetMaps& a, const TargetMaps& b) {
    if (a.levels.size() != b.levels.size()) {
        throw std::invalid_argument("total_loss: level count mismatch");
    }
    for (std::size_t i = 0; i < a.levels.size(); ++i) {
        const auto& la = a.levels[i];
        const auto& lb = b.levels[i];
        if (la.frames != lb.frames || la.height != lb.height || la.width != lb.width ||
            la.confidence.size() != lb.confidence.size() || la.regression.size() != lb.regression.size() ||
            la.centerness.size() != lb.centerness.size() || la.confidence.size() != la.size()) {
            throw std::invalid_argument("total_loss: shape mismatch at level " + std::to_string(i));
        }
    }
}

}  // namespace

LossBreakdown total_loss(const TargetMaps& pred, const TargetMaps& target, const LossWeights& weights) {
    check_same_shape(pred, target);
    for (std::size_t i = 0; i < pred.levels.size(); ++i) {
        check_focal_inputs(pred.levels[i].confidence, target.levels[i].confidence);
    }

    LossBreakdown out;
    double cls_sum = 0.0;
    double reg_sum = 0.0;
    double cent_sum = 0.0;
    for (std::size_t level = 0; level < pred.levels.size(); ++level) {
        const LevelMaps* p_level = &pred.levels[level];
        const LevelMaps* t_level = &target.levels[level];
        const auto n = static_cast<long>(p_level->size());
        std::vector<double> cls(n, 0.0);
        std::vector<double> reg(n, 0.0);
        std::vector<double> cent(n, 0.0);
        // Per-point terms in parallel; the reduction below is sequential so the
        // sums do not depend on the thread count.
#pragma omp parallel for schedule(static)
        for (long i = 0; i < n; ++i) {
            cls[i] = focal_term(p_level->confidence[i], t_level->confidence[i], weights.focal);
            if (t_level->confidence[i] > 0.5) {
                reg[i] = tube_giou_loss(p_level->regression[i], t_level->regression[i]).loss;
                cent[i] = binary_cross_entropy(p_level->centerness[i], t_level->centerness[i]);
            }
        }
        for (long i = 0; i < n; ++i) {
            cls_sum += cls[i];
            if (t_level->confidence[i] > 0.5) {
                ++out.n_pos;
                reg_sum += reg[i];
                cent_sum += cent[i];
            }
        }
    }

    const double norm = out.n_pos > 0 ? static_cast<double>(out.n_pos) : 1.0;
    out.cls = cls_sum / norm;
    out.reg = out.n_pos > 0 ? reg_sum / norm : 0.0;
    out.cent = out.n_pos > 0 ? cent_sum / norm : 0.0;
    out.total = out.cls + weights.lambda * out.reg + weights.alpha * out.cent;
    return out;
}

}  // namespace tubekit
