#pragma once

#include <Eigen/Dense>
#include <Eigen/Geometry>

#include <cmath>
#include <stdexcept>
#include <vector>

namespace splatline {

using Vec3 = Eigen::Vector3d;
using Box3 = Eigen::AlignedBox3d;

/// Minimum segment length; anything shorter is rejected as degenerate
/// because every downstream formula normalizes the direction or divides
/// by the length.
inline constexpr double kMinSegmentLength = 1e-9;

inline bool is_finite(const Vec3& v) {
  return std::isfinite(v.x()) && std::isfinite(v.y()) && std::isfinite(v.z());
}

/// Directed 3D line segment with strictly positive length.
class Segment {
 public:
  Segment(const Vec3& a, const Vec3& b) : a_(a), b_(b) {
    if (!is_finite(a) || !is_finite(b))
      throw std::invalid_argument("segment endpoints must be finite");
    if ((b - a).norm() < kMinSegmentLength)
      throw std::invalid_argument("degenerate segment (length < 1e-9 m)");
  }

  const Vec3& a() const { return a_; }
  const Vec3& b() const { return b_; }

  Vec3 delta() const { return b_ - a_; }
  double length() const { return delta().norm(); }
  Vec3 direction() const { return delta().normalized(); }
  Vec3 midpoint() const { return 0.5 * (a_ + b_); }
  Vec3 point_at(double t) const { return a_ + t * delta(); }
  Segment reversed() const { return Segment(b_, a_); }

  Segment translated(const Vec3& t) const { return Segment(a_ + t, b_ + t); }

 private:
  Vec3 a_, b_;
};

/// Capped cylinder around a segment axis.
struct Cylinder {
  Cylinder(const Segment& axis_in, double radius_in)
      : axis(axis_in), radius(radius_in) {
    if (!(radius > 0.0) || !std::isfinite(radius))
      throw std::invalid_argument("cylinder radius must be positive");
  }

  Segment axis;
  double radius;
};

/// Gaussian center points of a trained splat model plus their tight
/// axis-aligned bounding box.
struct GaussianCloud {
  std::vector<Vec3> points;
  Box3 bbox;  // contains every retained point; empty when points is empty
};

inline GaussianCloud make_cloud(std::vector<Vec3> points) {
  GaussianCloud cloud;
  cloud.points = std::move(points);
  for (const Vec3& p : cloud.points) cloud.bbox.extend(p);
  return cloud;
}

/// Axis-aligned box spanned by all segment endpoints.
inline Box3 segments_bbox(const std::vector<Segment>& segments) {
  Box3 box;
  for (const Segment& s : segments) {
    box.extend(s.a());
    box.extend(s.b());
  }
  return box;
}

inline Box3 padded(const Box3& box, double pad) {
  if (box.isEmpty()) return box;
  Box3 out = box;
  out.min().array() -= pad;
  out.max().array() += pad;
  return out;
}

/// Inclusive containment test shared by the octree build and the
/// brute-force oracles so both filter points identically.
inline bool in_box(const Box3& box, const Vec3& p) { return box.contains(p); }

}  // namespace splatline
