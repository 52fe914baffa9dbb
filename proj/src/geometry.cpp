#include "tubekit/geometry.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace tubekit {

namespace {

BBox lerp_box(const BBox& a, const BBox& b, double w) {
    return {a.x1 + (b.x1 - a.x1) * w, a.y1 + (b.y1 - a.y1) * w,
            a.x2 + (b.x2 - a.x2) * w, a.y2 + (b.y2 - a.y2) * w};
}

}  // namespace

double box_area(const BBox& b) {
    return std::max(0.0, b.x2 - b.x1) * std::max(0.0, b.y2 - b.y1);
}

double intersection_area(const BBox& a, const BBox& b) {
    const double w = std::min(a.x2, b.x2) - std::max(a.x1, b.x1);
    const double h = std::min(a.y2, b.y2) - std::max(a.y1, b.y1);
    if (w <= 0.0 || h <= 0.0) {
        return 0.0;
    }
    return w * h;
}

BBox enclosing_box(const BBox& a, const BBox& b) {
    return {std::min(a.x1, b.x1), std::min(a.y1, b.y1), std::max(a.x2, b.x2),
            std::max(a.y2, b.y2)};
}

BBox interpolate(const BTube& tube, Frame f) {
    if (f < tube.ts || f > tube.te) {
        throw std::out_of_range("frame " + std::to_string(f) + " outside tube span [" +
                                std::to_string(tube.ts) + ", " + std::to_string(tube.te) + "]");
    }
    if (f == tube.tm) {
        return tube.bm;
    }
    if (f < tube.tm) {
        if (f == tube.ts) {
            return tube.bs;
        }
        const double w = static_cast<double>(f - tube.ts) / static_cast<double>(tube.tm - tube.ts);
        return lerp_box(tube.bs, tube.bm, w);
    }
    if (f == tube.te) {
        return tube.be;
    }
    const double w = static_cast<double>(f - tube.tm) / static_cast<double>(tube.te - tube.tm);
    return lerp_box(tube.bm, tube.be, w);
}

double box_iou(const BBox& a, const BBox& b) {
    const double inter = intersection_area(a, b);
    const double uni = box_area(a) + box_area(b) - inter;
    if (uni <= 0.0) {
        return 0.0;
    }
    return inter / uni;
}

double box_giou(const BBox& a, const BBox& b) {
    const double inter = intersection_area(a, b);
    const double uni = box_area(a) + box_area(b) - inter;
    const double hull = box_area(enclosing_box(a, b));
    const double iou = uni > 0.0 ? inter / uni : 0.0;
    if (hull <= 0.0) {
        return iou;
    }
    return iou - (hull - uni) / hull;
}

double tube_volume(const BTube& tube) {
    double vol = 0.0;
    for (Frame f = tube.ts; f <= tube.te; ++f) {
        vol += box_area(interpolate(tube, f));
    }
    return vol;
}

namespace {

double tube_intersection(const BTube& a, const BTube& b) {
    const Frame lo = std::max(a.ts, b.ts);
    const Frame hi = std::min(a.te, b.te);
    double inter = 0.0;
    for (Frame f = lo; f <= hi; ++f) {
        inter += intersection_area(interpolate(a, f), interpolate(b, f));
    }
    return inter;
}

}  // namespace

double tube_iou(const BTube& a, const BTube& b) {
    const double inter = tube_intersection(a, b);
    const double uni = tube_volume(a) + tube_volume(b) - inter;
    if (uni <= 0.0) {
        return 0.0;
    }
    return inter / uni;
}

double tube_giou(const BTube& a, const BTube& b) {
    const double inter = tube_intersection(a, b);
    const double uni = tube_volume(a) + tube_volume(b) - inter;
    const double iou = uni > 0.0 ? inter / uni : 0.0;

    const BTube& early = a.te <= b.te ? a : b;
    const BTube& late = a.te <= b.te ? b : a;
    double hull = 0.0;
    for (Frame f = std::min(a.ts, b.ts); f <= std::max(a.te, b.te); ++f) {
        const bool in_a = a.covers(f);
        const bool in_b = b.covers(f);
        if (in_a && in_b) {
            hull += box_area(enclosing_box(interpolate(a, f), interpolate(b, f)));
        } else if (in_a) {
            hull += box_area(interpolate(a, f));
        } else if (in_b) {
            hull += box_area(interpolate(b, f));
        } else {
            hull += box_area(enclosing_box(early.be, late.bs));
        }
    }
    if (hull <= 0.0) {
        return iou;
    }
    return iou - (hull - uni) / hull;
}

Vec2 mdv(const BBox& start, const BBox& end) {
    return {end.cx() - start.cx(), end.cy() - start.cy()};
}

double cos_angle(const Vec2& a, const Vec2& b) {
    const double na = a.norm();
    const double nb = b.norm();
    if (na <= 0.0 || nb <= 0.0) {
        return 0.0;
    }
    return std::clamp((a.x * b.x + a.y * b.y) / (na * nb), -1.0, 1.0);
}

}  // namespace tubekit
