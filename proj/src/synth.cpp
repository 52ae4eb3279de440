#include "splatline/synth.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "splatline/geom.hpp"
#include "splatline/io.hpp"

namespace splatline {

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  // Box-Muller on our own uniforms keeps the stream platform-independent.
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  const double mag = std::sqrt(-2.0 * std::log(u1));
  const double two_pi = 2.0 * M_PI;
  spare_ = mag * std::sin(two_pi * u2);
  has_spare_ = true;
  return mag * std::cos(two_pi * u2);
}

Vec3 Rng::normal3(double sigma) {
  return Vec3(sigma * normal(), sigma * normal(), sigma * normal());
}

Vec3 Rng::unit_vector() {
  while (true) {
    const Vec3 v = normal3(1.0);
    const double n = v.norm();
    if (n > 1e-12) return v / n;
  }
}

Vec3 Rng::perpendicular_unit(const Vec3& dir) {
  const Vec3 d = dir.normalized();
  while (true) {
    const Vec3 v = unit_vector();
    const Vec3 perp = v - v.dot(d) * d;
    const double n = perp.norm();
    if (n > 1e-6) return perp / n;
  }
}

// --- wireframe shapes ---------------------------------------------------

std::vector<Segment> cube_wireframe(double size, const Vec3& origin) {
  const double s = size;
  const Vec3 o = origin;
  auto corner = [&](int x, int y, int z) {
    return o + s * Vec3(x, y, z);
  };
  std::vector<Segment> edges;
  for (int u = 0; u < 2; ++u) {
    for (int v = 0; v < 2; ++v) {
      edges.emplace_back(corner(0, u, v), corner(1, u, v));
      edges.emplace_back(corner(u, 0, v), corner(u, 1, v));
      edges.emplace_back(corner(u, v, 0), corner(u, v, 1));
    }
  }
  return edges;
}

std::vector<Segment> grid_wireframe(int n, double cell) {
  if (n < 2) throw std::invalid_argument("grid_wireframe: n must be >= 2");
  std::vector<Segment> edges;
  for (int axis = 0; axis < 3; ++axis) {
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        for (int k = 0; k + 1 < n; ++k) {
          Vec3 a, b;
          const int idx[3] = {k, i, j};
          for (int c = 0; c < 3; ++c) a[(axis + c) % 3] = cell * idx[c];
          b = a;
          b[axis] += cell;
          edges.emplace_back(a, b);
        }
      }
    }
  }
  return edges;
}

// --- scene generation -----------------------------------------------------

SyntheticScene generate_scene(const std::vector<Segment>& edges,
                              const SceneParams& params, std::uint64_t seed) {
  if (params.noise_sigma < 0)
    throw std::invalid_argument("generate_scene: sigma must be >= 0");
  if (params.background_fraction < 0 || params.background_fraction >= 1.0)
    throw std::invalid_argument(
        "generate_scene: background_fraction must be in [0, 1)");

  SyntheticScene scene;
  scene.ground_truth_edges = edges;
  scene.params = params;
  scene.rng_seed = seed;

  Rng rng(seed);
  std::vector<Vec3> points;
  for (const Segment& edge : edges) {
    const double expected = params.points_per_meter * edge.length();
    long long n = std::llround(expected);
    if (expected >= 1.0) n = std::max<long long>(n, 1);
    for (long long i = 0; i < n; ++i) {
      const Vec3 p = edge.point_at(rng.uniform());
      points.push_back(p + rng.normal3(params.noise_sigma));
    }
  }

  if (params.background_fraction > 0.0 && !points.empty()) {
    const double f = params.background_fraction;
    const long long n_bg = std::llround(
        static_cast<double>(points.size()) * f / (1.0 - f));
    const double pad = std::max(4.0 * params.noise_sigma, 1e-3);
    const Box3 box = padded(segments_bbox(edges), pad);
    for (long long i = 0; i < n_bg; ++i) {
      Vec3 p;
      for (int c = 0; c < 3; ++c)
        p[c] = rng.uniform(box.min()[c], box.max()[c]);
      points.push_back(p);
    }
  }

  scene.cloud = make_cloud(std::move(points));
  return scene;
}

// --- defect injection -----------------------------------------------------

namespace {

std::string join_tags(const std::vector<std::string>& tags) {
  if (tags.empty()) return "none";
  std::string out;
  for (const std::string& t : tags) {
    if (!out.empty()) out += '+';
    out += t;
  }
  return out;
}

double min_distance_to_edges(const Segment& s,
                             const std::vector<Segment>& edges) {
  double best = std::numeric_limits<double>::infinity();
  for (int k = 0; k <= 8; ++k) {
    const Vec3 p = s.point_at(static_cast<double>(k) / 8.0);
    for (const Segment& edge : edges)
      best = std::min(best, point_segment_distance(p, edge));
  }
  return best;
}

}  // namespace

DefectResult inject_defects(const std::vector<Segment>& edges,
                            const DefectSpec& spec, std::uint64_t seed) {
  if (spec.position_bias < 0 || spec.overextension < 0 ||
      spec.outlier_count < 0 || spec.duplicate_copies < 0 ||
      spec.duplicate_jitter < 0 || spec.split_count < 0 || spec.split_gap < 0)
    throw std::invalid_argument("inject_defects: magnitudes must be >= 0");

  Rng rng(seed);
  DefectResult result;

  double mean_edge_length = 0.0;
  for (const Segment& e : edges) mean_edge_length += e.length();
  if (!edges.empty()) mean_edge_length /= static_cast<double>(edges.size());

  for (std::size_t e = 0; e < edges.size(); ++e) {
    Segment base = edges[e];
    std::vector<std::string> tags;
    std::string side;

    if (spec.position_bias > 0.0) {
      base = base.translated(spec.position_bias *
                             rng.perpendicular_unit(base.direction()));
      tags.push_back("position_bias");
    }
    if (spec.overextension > 0.0) {
      const Vec3 ext = spec.overextension * base.delta();
      if (rng.uniform() < 0.5) {
        base = Segment(base.a() - ext, base.b());
        side = "a";
      } else {
        base = Segment(base.a(), base.b() + ext);
        side = "b";
      }
      tags.push_back("overextension");
    }

    if (spec.split_count > 0 && spec.split_gap > 0.0) {
      const double len = base.length();
      const int pieces = spec.split_count + 1;
      const double piece_span = len / static_cast<double>(pieces);
      if (piece_span <= spec.split_gap)
        throw std::invalid_argument(
            "inject_defects: split_gap too large for edge length");
      auto split_tags = tags;
      split_tags.push_back("discontinuity");
      for (int p = 0; p < pieces; ++p) {
        const double lo =
            (p == 0) ? 0.0
                     : (static_cast<double>(p) * piece_span + 0.5 * spec.split_gap);
        const double hi = (p == pieces - 1)
                              ? len
                              : (static_cast<double>(p + 1) * piece_span -
                                 0.5 * spec.split_gap);
        result.segments.push_back(sub_segment(base, lo / len, hi / len));
        result.manifest.push_back(
            ManifestEntry{static_cast<int>(e), join_tags(split_tags), side});
      }
    } else {
      result.segments.push_back(base);
      result.manifest.push_back(
          ManifestEntry{static_cast<int>(e), join_tags(tags), side});
    }

    if (spec.duplicate_copies > 0) {
      auto dup_tags = tags;
      dup_tags.push_back("duplication");
      for (int c = 0; c < spec.duplicate_copies; ++c) {
        const Vec3 ja = rng.normal3(spec.duplicate_jitter);
        const Vec3 jb = rng.normal3(spec.duplicate_jitter);
        result.segments.emplace_back(base.a() + ja, base.b() + jb);
        result.manifest.push_back(
            ManifestEntry{static_cast<int>(e), join_tags(dup_tags), side});
      }
    }
  }

  if (spec.outlier_count > 0) {
    if (edges.empty())
      throw std::invalid_argument("inject_defects: outliers need edges");
    const Box3 box = segments_bbox(edges);
    const double length =
        spec.outlier_length > 0.0 ? spec.outlier_length : mean_edge_length;
    int placed = 0;
    int attempts = 0;
    while (placed < spec.outlier_count) {
      if (++attempts > 100000)
        throw std::runtime_error(
            "inject_defects: cannot place outliers with the requested "
            "clearance");
      Vec3 mid;
      for (int c = 0; c < 3; ++c)
        mid[c] = rng.uniform(box.min()[c], box.max()[c]);
      const Vec3 dir = rng.unit_vector();
      const Segment candidate(mid - 0.5 * length * dir,
                              mid + 0.5 * length * dir);
      if (min_distance_to_edges(candidate, edges) <= spec.outlier_clearance)
        continue;
      result.segments.push_back(candidate);
      result.manifest.push_back(ManifestEntry{-1, "outlier", ""});
      ++placed;
    }
  }

  return result;
}

std::string manifest_to_text(const DefectResult& result) {
  std::string out;
  out += "# columns: segment_index source_edge defects extended_side\n";
  out += "# source_edge -1 marks a planted outlier; defects are '+'-joined\n";
  for (std::size_t i = 0; i < result.manifest.size(); ++i) {
    const ManifestEntry& m = result.manifest[i];
    out += std::to_string(i) + " " + std::to_string(m.source_edge) + " " +
           m.defects + " " + (m.extended_side.empty() ? "-" : m.extended_side) +
           "\n";
  }
  return out;
}

void save_manifest(const DefectResult& result,
                   const std::filesystem::path& path) {
  atomic_write(path, manifest_to_text(result));
}

// --- oracle ---------------------------------------------------------------

EvalReport brute_force_evaluate(const std::vector<Segment>& segments,
                                const GaussianCloud& cloud, const Box3& box,
                                const EvalConfig& ecfg) {
  ecfg.validate();
  if (segments.empty())
    throw std::invalid_argument("nothing to evaluate: zero segments");

  std::vector<std::uint32_t> indexed;
  for (std::uint32_t i = 0; i < cloud.points.size(); ++i)
    if (in_box(box, cloud.points[i])) indexed.push_back(i);

  EvalReport rep;
  rep.cloud_total = indexed.size();
  rep.per_segment.resize(segments.size());

  std::vector<double> nearest(indexed.size(),
                              std::numeric_limits<double>::infinity());
  for (std::size_t s = 0; s < segments.size(); ++s) {
    const Cylinder cyl(segments[s], ecfg.eval_radius);
    SegmentStats st;
    double sum_sq = 0.0;
    for (std::size_t k = 0; k < indexed.size(); ++k) {
      const Vec3& p = cloud.points[indexed[k]];
      if (!cylinder_contains(cyl, p)) continue;
      const double d = point_segment_distance(p, segments[s]);
      ++st.covered_count;
      sum_sq += d * d;
      if (d < nearest[k]) nearest[k] = d;
    }
    st.density = static_cast<double>(st.covered_count) / segments[s].length();
    if (st.covered_count > 0) {
      st.e_rms = std::sqrt(sum_sq / static_cast<double>(st.covered_count));
      st.ratio = st.e_rms / static_cast<double>(st.covered_count);
    }
    rep.per_segment[s] = st;
    rep.covered_multiplicity += st.covered_count;
  }

  double pooled_sq = 0.0;
  for (const double d : nearest) {
    if (std::isinf(d)) continue;
    ++rep.covered_total;
    pooled_sq += d * d;
  }
  const double e_rms_m =
      rep.covered_total > 0
          ? std::sqrt(pooled_sq / static_cast<double>(rep.covered_total))
          : 0.0;
  rep.e_rms_cm = 100.0 * e_rms_m;
  rep.r_covered_pct =
      rep.cloud_total > 0
          ? 100.0 * static_cast<double>(rep.covered_total) /
                static_cast<double>(rep.cloud_total)
          : 0.0;
  for (const Segment& s : segments) rep.total_length += s.length();
  if (rep.covered_multiplicity > 1)
    rep.r_l = rep.total_length /
              std::log(static_cast<double>(rep.covered_multiplicity));
  if (rep.r_l && rep.e_rms_cm > 0.0) {
    const double denom = std::log1p(rep.e_rms_cm) * std::log1p(*rep.r_l);
    if (denom > 0.0)
      rep.score = ecfg.score_scaler * rep.r_covered_pct / denom;
  }
  return rep;
}

}  // namespace splatline
