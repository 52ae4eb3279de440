#include "splatline/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "splatline/parallel.hpp"

namespace splatline {

void EvalConfig::validate() const {
  if (!(eval_radius > 0) || !std::isfinite(eval_radius))
    throw std::invalid_argument("config: eval_radius must be positive");
  if (!(score_scaler > 0))
    throw std::invalid_argument("config: score_scaler must be positive");
  if (radius_sweep.empty())
    throw std::invalid_argument("config: radii must not be empty");
  for (std::size_t i = 0; i < radius_sweep.size(); ++i) {
    if (!(radius_sweep[i] > 0))
      throw std::invalid_argument("config: radii must be positive");
    if (i > 0 && radius_sweep[i] <= radius_sweep[i - 1])
      throw std::invalid_argument("config: radii must be strictly increasing");
  }
}

namespace {

EvalReport evaluate_at(const std::vector<Segment>& segments,
                       const Octree& tree, double radius, double score_scaler,
                       unsigned threads) {
  if (segments.empty())
    throw std::invalid_argument("nothing to evaluate: zero segments");

  const std::size_t n = segments.size();
  std::vector<std::vector<std::uint32_t>> covered(n);
  std::vector<SegmentStats> per_segment(n);
  parallel_for(n, threads, [&](std::size_t i) {
    covered[i] = tree.query_cylinder(Cylinder(segments[i], radius));
    SegmentStats st;
    st.covered_count = covered[i].size();
    st.density = static_cast<double>(covered[i].size()) / segments[i].length();
    if (!covered[i].empty()) {
      double sum_sq = 0.0;
      for (const std::uint32_t id : covered[i]) {
        const double d = point_segment_distance(tree.point(id), segments[i]);
        sum_sq += d * d;
      }
      st.e_rms = std::sqrt(sum_sq / static_cast<double>(covered[i].size()));
      st.ratio = st.e_rms / static_cast<double>(covered[i].size());
    }
    per_segment[i] = st;
  });

  // Each covered point contributes its distance to the nearest covering
  // segment, counted once in the pooled E_rms and the coverage ratio.
  std::size_t cloud_span = 0;
  for (const auto& ids : covered)
    if (!ids.empty())
      cloud_span = std::max<std::size_t>(cloud_span, ids.back() + 1);
  std::vector<double> nearest(cloud_span,
                              std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < n; ++i) {
    for (const std::uint32_t id : covered[i]) {
      const double d = point_segment_distance(tree.point(id), segments[i]);
      if (d < nearest[id]) nearest[id] = d;
    }
  }

  EvalReport rep;
  rep.cloud_total = tree.indexed_count();
  double sum_sq = 0.0;
  for (const double d : nearest) {
    if (std::isinf(d)) continue;
    ++rep.covered_total;
    sum_sq += d * d;
  }
  const double e_rms_m =
      rep.covered_total > 0
          ? std::sqrt(sum_sq / static_cast<double>(rep.covered_total))
          : 0.0;
  rep.e_rms_cm = 100.0 * e_rms_m;
  rep.r_covered_pct =
      rep.cloud_total > 0
          ? 100.0 * static_cast<double>(rep.covered_total) /
                static_cast<double>(rep.cloud_total)
          : 0.0;

  for (const Segment& s : segments) rep.total_length += s.length();
  for (const auto& ids : covered) rep.covered_multiplicity += ids.size();
  if (rep.covered_multiplicity > 1)
    rep.r_l = rep.total_length /
              std::log(static_cast<double>(rep.covered_multiplicity));

  if (rep.r_l && rep.e_rms_cm > 0.0) {
    const double denom =
        std::log1p(rep.e_rms_cm) * std::log1p(*rep.r_l);
    if (denom > 0.0) rep.score = score_scaler * rep.r_covered_pct / denom;
  }
  rep.per_segment = std::move(per_segment);
  return rep;
}

}  // namespace

EvalReport evaluate(const std::vector<Segment>& segments, const Octree& tree,
                    const EvalConfig& ecfg, unsigned threads) {
  ecfg.validate();
  return evaluate_at(segments, tree, ecfg.eval_radius, ecfg.score_scaler,
                     threads);
}

std::vector<std::pair<double, EvalReport>> radius_sweep(
    const std::vector<Segment>& segments, const Octree& tree,
    const EvalConfig& ecfg, unsigned threads) {
  ecfg.validate();
  std::vector<std::pair<double, EvalReport>> out;
  out.reserve(ecfg.radius_sweep.size());
  for (const double r : ecfg.radius_sweep)
    out.emplace_back(r, evaluate_at(segments, tree, r, ecfg.score_scaler,
                                    threads));
  for (std::size_t i = 1; i < out.size(); ++i) {
    if (out[i].second.r_covered_pct + 1e-12 < out[i - 1].second.r_covered_pct)
      throw std::logic_error("radius sweep: coverage decreased with radius");
  }
  return out;
}

}  // namespace splatline
