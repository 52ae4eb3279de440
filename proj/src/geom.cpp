#include "splatline/geom.hpp"

#include <algorithm>
#include <cmath>

namespace splatline {

double projection_param(const Vec3& p, const Segment& s) {
  const Vec3 d = s.delta();
  return (p - s.a()).dot(d) / d.squaredNorm();
}

double point_segment_distance(const Vec3& p, const Segment& s) {
  const double t = std::clamp(projection_param(p, s), 0.0, 1.0);
  return (p - s.point_at(t)).norm();
}

double point_line_distance(const Vec3& p, const Segment& s) {
  return perpendicular_offset(p, s).norm();
}

Vec3 perpendicular_offset(const Vec3& p, const Segment& s) {
  const Vec3 w = p - s.a();
  const Vec3 d = s.direction();
  return w - w.dot(d) * d;
}

bool cylinder_contains(const Cylinder& c, const Vec3& p) {
  const Vec3 d = c.axis.delta();
  const Vec3 w = p - c.axis.a();
  const double t = w.dot(d) / d.squaredNorm();
  if (t < 0.0 || t > 1.0) return false;
  return (w - t * d).squaredNorm() <= c.radius * c.radius;
}

bool overlap(const Segment& longer, const Segment& shorter,
             OverlapSemantics semantics) {
  const Vec3 d = longer.direction();
  for (const Vec3& p : {shorter.a(), shorter.b()}) {
    const double from_p1 = (p - longer.a()).dot(d);
    const double from_p2 = (p - longer.b()).dot(d);
    const bool inside = semantics == OverlapSemantics::conjunction
                            ? (from_p1 > 0.0 && from_p2 < 0.0)
                            : (from_p1 > 0.0 || from_p2 < 0.0);
    if (inside) return true;
  }
  return false;
}

std::pair<double, double> closest_params(const Segment& s1,
                                         const Segment& s2) {
  // Clamped segment/segment closest points (Ericson). Both segments are
  // non-degenerate by construction, so a and e are strictly positive.
  const Vec3 d1 = s1.delta();
  const Vec3 d2 = s2.delta();
  const Vec3 r = s1.a() - s2.a();
  const double a = d1.squaredNorm();
  const double e = d2.squaredNorm();
  const double f = d2.dot(r);
  const double c = d1.dot(r);
  const double b = d1.dot(d2);
  const double denom = a * e - b * b;

  double s = denom != 0.0 ? std::clamp((b * f - c * e) / denom, 0.0, 1.0) : 0.0;
  double t = (b * s + f) / e;
  if (t < 0.0) {
    t = 0.0;
    s = std::clamp(-c / a, 0.0, 1.0);
  } else if (t > 1.0) {
    t = 1.0;
    s = std::clamp((b - c) / a, 0.0, 1.0);
  }
  return {s, t};
}

Segment sub_segment(const Segment& s, double t0, double t1) {
  return Segment(s.point_at(t0), s.point_at(t1));
}

}  // namespace splatline
