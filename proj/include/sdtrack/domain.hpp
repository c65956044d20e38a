#pragma once

#include <optional>
#include <vector>

#include "sdtrack/grid.hpp"

namespace sdt {

/// Image coordinates: origin top-left, x right, y down, pixel centers at
/// integer positions.
struct Point2 {
    double x = 0.0;
    double y = 0.0;

    Point2 operator+(const Point2& o) const { return {x + o.x, y + o.y}; }
    Point2 operator-(const Point2& o) const { return {x - o.x, y - o.y}; }
    Point2 operator*(double s) const { return {x * s, y * s}; }
    bool operator==(const Point2&) const = default;
};

double l1_distance(const Point2& a, const Point2& b);
double l2_distance(const Point2& a, const Point2& b);

/// Per-frame parameters of one line source: center, length, width,
/// motion direction (radians, [0, 2pi)) and speed in pixels per frame.
struct DebrisState {
    Point2 center;
    double length = 1.0;
    double width = 1.0;
    double angle = 0.0;
    double speed = 0.0;

    /// Throws ValidationError unless l > 0, w > 0, w <= l, v >= 0 and the
    /// fields are finite.
    void validate() const;

    Point2 direction() const;
    bool operator==(const DebrisState&) const = default;
};

/// The two extremities of a line source with left.x <= right.x. When the
/// x coordinates differ by less than kVerticalTolerance the point with the
/// smaller y is the left one.
struct EndpointPair {
    Point2 left;
    Point2 right;

    static constexpr double kVerticalTolerance = 1e-9;

    /// Orders two arbitrary points into a left/right pair.
    static EndpointPair ordered(const Point2& a, const Point2& b);
    /// True if `a` must be placed on the left of `b`.
    static bool is_left_of(const Point2& a, const Point2& b);

    Point2 midpoint() const { return (left + right) * 0.5; }
    double length() const { return l2_distance(left, right); }
    bool operator==(const EndpointPair&) const = default;
};

struct BBox {
    double x_min = 0.0;
    double y_min = 0.0;
    double x_max = 0.0;
    double y_max = 0.0;

    double width() const { return x_max - x_min; }
    double height() const { return y_max - y_min; }
    double area() const { return width() * height(); }
    bool contains(const Point2& p, double tol = 1e-9) const {
        return p.x >= x_min - tol && p.x <= x_max + tol && p.y >= y_min - tol && p.y <= y_max + tol;
    }
    bool operator==(const BBox&) const = default;
};

/// Intersection over union; 0 when the union is empty.
double iou(const BBox& a, const BBox& b);

EndpointPair endpoints_from_state(const DebrisState& s);

/// The four corners of the rotated length x width rectangle.
std::vector<Point2> rectangle_corners(const DebrisState& s);

/// Tight axis-aligned hull of the rotated rectangle.
BBox bbox_from_state(const DebrisState& s);

/// Hull of the two endpoints (a degenerate box for axis-aligned lines).
BBox bbox_from_endpoints(const EndpointPair& e);

/// A decoded line source. Embeddings and offsets are present only when the
/// producing detector supplies them.
struct Detection {
    EndpointPair endpoints;
    double score = 1.0;
    std::vector<double> embedding_left;
    std::vector<double> embedding_right;
    std::optional<Point2> offset_left;
    std::optional<Point2> offset_right;

    bool has_offsets() const { return offset_left.has_value() && offset_right.has_value(); }
    /// Throws ValidationError on score outside [0,1] or mismatched
    /// embedding dimensions.
    void validate() const;
    bool operator==(const Detection&) const = default;
};

struct TrackEntry {
    int frame = 0;
    Detection detection;
    bool operator==(const TrackEntry&) const = default;
};

/// Identity-stamped detections with strictly increasing frame indices.
struct Track {
    int id = 0;
    std::vector<TrackEntry> entries;

    std::size_t length() const { return entries.size(); }
    bool operator==(const Track&) const = default;
};

/// One ground-truth object in one frame.
struct AnnotatedObject {
    int track_id = 0;
    DebrisState state;
    EndpointPair endpoints;
    BBox bbox;
    bool operator==(const AnnotatedObject&) const = default;
};

/// Ground truth for a whole sequence. frames[t] holds the objects visible
/// in frame t + 1 (frame indices are 1-based on disk). Masks are optional;
/// when present there is one single-channel grid per frame.
struct SequenceAnnotation {
    int width = 0;
    int height = 0;
    std::vector<std::vector<AnnotatedObject>> frames;
    std::vector<Grid2D> masks;

    int frame_count() const { return static_cast<int>(frames.size()); }
    bool operator==(const SequenceAnnotation&) const = default;
};

AnnotatedObject make_annotated(int track_id, const DebrisState& s);

}  // namespace sdt
