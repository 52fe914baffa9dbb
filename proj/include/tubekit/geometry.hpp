#pragma once

#include <cmath>

namespace tubekit {

using Frame = int;

/// Axis-aligned box in image pixels, (x1, y1) top-left and (x2, y2) bottom-right.
struct BBox {
    double x1 = 0.0;
    double y1 = 0.0;
    double x2 = 0.0;
    double y2 = 0.0;

    double width() const { return x2 - x1; }
    double height() const { return y2 - y1; }
    double cx() const { return 0.5 * (x1 + x2); }
    double cy() const { return 0.5 * (y1 + y2); }
    bool valid() const { return x1 <= x2 && y1 <= y2; }

    friend bool operator==(const BBox&, const BBox&) = default;
};

/// A bounding tube: three boxes at frames ts <= tm <= te, linearly
/// interpolated in between (15 degrees of freedom).
struct BTube {
    BBox bs;
    BBox bm;
    BBox be;
    Frame ts = 0;
    Frame tm = 0;
    Frame te = 0;

    Frame ds() const { return tm - ts; }
    Frame de() const { return te - tm; }
    int length() const { return te - ts + 1; }
    bool covers(Frame f) const { return f >= ts && f <= te; }
    bool valid() const { return ts <= tm && tm <= te && bs.valid() && bm.valid() && be.valid(); }

    friend bool operator==(const BTube&, const BTube&) = default;
};

/// A tube with its detection score (confidence x center-ness).
struct ScoredTube {
    BTube tube;
    double score = 1.0;
};

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    double norm() const { return std::hypot(x, y); }
    friend bool operator==(const Vec2&, const Vec2&) = default;
};

double box_area(const BBox& b);
double intersection_area(const BBox& a, const BBox& b);
BBox enclosing_box(const BBox& a, const BBox& b);

/// Box at frame f. Throws std::out_of_range when f lies outside [ts, te].
BBox interpolate(const BTube& tube, Frame f);

/// Intersection over union; 0 when the union is empty.
double box_iou(const BBox& a, const BBox& b);
double box_giou(const BBox& a, const BBox& b);

/// Sum over integer frames of the interpolated box areas.
double tube_volume(const BTube& tube);
double tube_iou(const BTube& a, const BTube& b);

// The enclosing volume covers [min ts, max te]. Frames held by one tube
// contribute that tube's box; frames between two temporally disjoint tubes
// contribute the box enclosing the two facing end boxes.
double tube_giou(const BTube& a, const BTube& b);

/// Moving direction: center(end) - center(start).
Vec2 mdv(const BBox& start, const BBox& end);

/// cos of the angle between two vectors, 0 if either has zero length.
double cos_angle(const Vec2& a, const Vec2& b);

}  // namespace tubekit
