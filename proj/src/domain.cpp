#include "sdtrack/domain.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "sdtrack/errors.hpp"

namespace sdt {

double l1_distance(const Point2& a, const Point2& b) {
    return std::abs(a.x - b.x) + std::abs(a.y - b.y);
}

double l2_distance(const Point2& a, const Point2& b) {
    return std::hypot(a.x - b.x, a.y - b.y);
}

void DebrisState::validate() const {
    const bool finite = std::isfinite(center.x) && std::isfinite(center.y) && std::isfinite(length) &&
                        std::isfinite(width) && std::isfinite(angle) && std::isfinite(speed);
    if (!finite) throw ValidationError("debris state has non-finite fields");
    if (!(length > 0.0)) throw ValidationError("debris length must be positive");
    if (!(width > 0.0)) throw ValidationError("debris width must be positive");
    if (width > length) throw ValidationError("debris width must not exceed its length");
    if (speed < 0.0) throw ValidationError("debris speed must be non-negative");
}

Point2 DebrisState::direction() const {
    return {std::cos(angle), std::sin(angle)};
}

bool EndpointPair::is_left_of(const Point2& a, const Point2& b) {
    if (std::abs(a.x - b.x) < kVerticalTolerance) return a.y <= b.y;
    return a.x < b.x;
}

EndpointPair EndpointPair::ordered(const Point2& a, const Point2& b) {
    return is_left_of(a, b) ? EndpointPair{a, b} : EndpointPair{b, a};
}

double iou(const BBox& a, const BBox& b) {
    const double ix = std::max(0.0, std::min(a.x_max, b.x_max) - std::max(a.x_min, b.x_min));
    const double iy = std::max(0.0, std::min(a.y_max, b.y_max) - std::max(a.y_min, b.y_min));
    const double inter = ix * iy;
    const double uni = a.area() + b.area() - inter;
    return uni > 0.0 ? inter / uni : 0.0;
}

EndpointPair endpoints_from_state(const DebrisState& s) {
    const Point2 half = s.direction() * (s.length / 2.0);
    return EndpointPair::ordered(s.center - half, s.center + half);
}

std::vector<Point2> rectangle_corners(const DebrisState& s) {
    const Point2 u = s.direction() * (s.length / 2.0);
    const Point2 n = Point2{-std::sin(s.angle), std::cos(s.angle)} * (s.width / 2.0);
    return {s.center + u + n, s.center + u - n, s.center - u - n, s.center - u + n};
}

BBox bbox_from_state(const DebrisState& s) {
    // Closed form of the corner hull: half extents |u_x| + |n_x| and |u_y| + |n_y|.
    const double c = std::cos(s.angle);
    const double sn = std::sin(s.angle);
    const double hx = std::abs(c) * s.length / 2.0 + std::abs(sn) * s.width / 2.0;
    const double hy = std::abs(sn) * s.length / 2.0 + std::abs(c) * s.width / 2.0;
    return {s.center.x - hx, s.center.y - hy, s.center.x + hx, s.center.y + hy};
}

BBox bbox_from_endpoints(const EndpointPair& e) {
    return {std::min(e.left.x, e.right.x), std::min(e.left.y, e.right.y), std::max(e.left.x, e.right.x),
            std::max(e.left.y, e.right.y)};
}

void Detection::validate() const {
    if (!(score >= 0.0 && score <= 1.0)) {
        throw ValidationError("detection score " + std::to_string(score) + " outside [0,1]");
    }
    if (!embedding_left.empty() && !embedding_right.empty() &&
        embedding_left.size() != embedding_right.size()) {
        throw ValidationError("left/right embedding dimensions differ");
    }
}

AnnotatedObject make_annotated(int track_id, const DebrisState& s) {
    return {track_id, s, endpoints_from_state(s), bbox_from_state(s)};
}

}  // namespace sdt
