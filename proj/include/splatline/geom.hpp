#pragma once

#include <utility>

#include "splatline/types.hpp"

namespace splatline {

/// Overlap test variants for a pair of segments. `conjunction` requires an
/// endpoint of the shorter segment to project axially strictly inside the
/// longer one ((p-P1)·d > 0 and (p-P2)·d < 0). `paper_union` replaces the
/// "and" by "or", which admits every pair whose projections are ordered the
/// usual way; it is kept selectable for comparison runs.
enum class OverlapSemantics { conjunction, paper_union };

/// Euclidean distance from p to the closed segment (projection clamped to
/// the endpoints).
double point_segment_distance(const Vec3& p, const Segment& s);

/// Distance from p to the infinite line carrying s.
double point_line_distance(const Vec3& p, const Segment& s);

/// Unclamped projection parameter of p onto the axis line of s
/// (0 at s.a(), 1 at s.b()).
double projection_param(const Vec3& p, const Segment& s);

/// Displacement from the axis line of s to p with the axial component
/// removed: (p - a) - ((p - a)·d̂)d̂. Zero for points on the axis.
Vec3 perpendicular_offset(const Vec3& p, const Segment& s);

/// Membership in the capped cylinder: projection parameter in [0, 1] and
/// perpendicular distance <= radius, both boundaries inclusive.
bool cylinder_contains(const Cylinder& c, const Vec3& p);

/// True when the shorter segment overlaps the longer one along its axis.
/// Precondition: longer.length() >= shorter.length().
bool overlap(const Segment& longer, const Segment& shorter,
             OverlapSemantics semantics = OverlapSemantics::conjunction);

/// Clamped parameters (s, t) of the closest points between two segments;
/// closest points are s1.point_at(s) and s2.point_at(t).
std::pair<double, double> closest_params(const Segment& s1, const Segment& s2);

/// Sub-segment between arc-length parameters t0 < t1 of s.
Segment sub_segment(const Segment& s, double t0, double t1);

}  // namespace splatline
