#include "splatline/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <unordered_map>

#include "splatline/parallel.hpp"

namespace splatline {

namespace {

void require(bool ok, const char* msg) {
  if (!ok) throw std::invalid_argument(msg);
}

// Lexicographic order on endpoint coordinates; used to assign longer/shorter
// roles deterministically when two segments have exactly equal lengths.
bool canonical_less(const Segment& x, const Segment& y) {
  const double vx[6] = {x.a().x(), x.a().y(), x.a().z(),
                        x.b().x(), x.b().y(), x.b().z()};
  const double vy[6] = {y.a().x(), y.a().y(), y.a().z(),
                        y.b().x(), y.b().y(), y.b().z()};
  for (int k = 0; k < 6; ++k) {
    if (vx[k] < vy[k]) return true;
    if (vx[k] > vy[k]) return false;
  }
  return false;
}

double window_density(const Segment& s, double lo_m, double hi_m,
                      const Octree& tree, double radius) {
  const double len = s.length();
  lo_m = std::max(0.0, lo_m);
  hi_m = std::min(len, hi_m);
  if (hi_m - lo_m < kMinSegmentLength) return 0.0;
  const Segment win = sub_segment(s, lo_m / len, hi_m / len);
  const std::size_t n = tree.query_cylinder(Cylinder(win, radius)).size();
  return static_cast<double>(n) / win.length();
}

// Locates the new arc-length position (measured from s.a()) of one endpoint.
// The search interval runs from the segment midpoint (dense side) to the tip
// (sparse side); each probe measures the density of a window centered on the
// probe point and clamped to the segment, so the search converges on the
// point where local density crosses α times the interior density.
double crop_boundary(const Segment& s, const Octree& tree,
                     const PipelineConfig& cfg, double interior_density,
                     bool tip_is_b) {
  const double len = s.length();
  const double w = cfg.crop_window_fraction * len;
  const double tip = tip_is_b ? len : 0.0;
  const double trigger = cfg.crop_density_ratio * interior_density;

  const double tip_density =
      tip_is_b ? window_density(s, len - w, len, tree, cfg.working_radius)
               : window_density(s, 0.0, w, tree, cfg.working_radius);
  if (!(tip_density < trigger)) return tip;

  double dense = 0.5 * len;
  double sparse = tip;
  for (int iter = 0; iter < cfg.crop_max_iters; ++iter) {
    if (std::abs(sparse - dense) < cfg.crop_min_interval) break;
    const double probe = 0.5 * (dense + sparse);
    const double rho =
        window_density(s, probe - 0.5 * w, probe + 0.5 * w, tree,
                       cfg.working_radius);
    if (rho >= trigger)
      dense = probe;
    else
      sparse = probe;
  }
  return dense;
}

AggregateStats aggregate_stats(const std::vector<Segment>& segments,
                               const Octree& tree, double radius,
                               unsigned threads) {
  AggregateStats agg;
  agg.count = segments.size();
  if (segments.empty()) return agg;
  std::vector<SegmentStats> stats(segments.size());
  parallel_for(segments.size(), threads, [&](std::size_t i) {
    stats[i] = segment_stats(segments[i], tree, radius);
  });
  std::size_t with_points = 0;
  for (std::size_t i = 0; i < segments.size(); ++i) {
    agg.total_length += segments[i].length();
    agg.mean_density += stats[i].density;
    if (stats[i].covered_count > 0) {
      agg.mean_e_rms += stats[i].e_rms;
      ++with_points;
    }
  }
  agg.mean_density /= static_cast<double>(segments.size());
  if (with_points > 0) agg.mean_e_rms /= static_cast<double>(with_points);
  return agg;
}

}  // namespace

void PipelineConfig::validate() const {
  require(working_radius > 0 && std::isfinite(working_radius),
          "config: r must be positive");
  require(outlier_scaler > 0 && outlier_scaler <= 1.0,
          "config: xi must be in (0, 1]");
  require(!lambda_sim || *lambda_sim > 0,
          "config: lambda_sim must be positive");
  require(cluster_c > 0, "config: cluster_c must be positive");
  require(crop_max_iters >= 1, "config: crop_max_iters must be >= 1");
  require(crop_min_interval > 0, "config: crop_min_interval must be positive");
  require(crop_window_fraction > 0 && crop_window_fraction <= 0.5,
          "config: crop_window_fraction must be in (0, 0.5]");
  require(crop_density_ratio > 0 && crop_density_ratio < 1.0,
          "config: crop_density_ratio must be in (0, 1)");
  require(merge_gap_density_factor >= 0,
          "config: merge_gap_density_factor must be >= 0");
}

// --- ClusterUniverse ------------------------------------------------------

ClusterUniverse::ClusterUniverse(std::size_t n, double initial_threshold)
    : parent_(n), size_(n, 1), threshold_(n, initial_threshold),
      components_(n) {
  std::iota(parent_.begin(), parent_.end(), std::size_t{0});
}

std::size_t ClusterUniverse::find(std::size_t i) {
  while (parent_[i] != i) {
    parent_[i] = parent_[parent_[i]];  // path halving
    i = parent_[i];
  }
  return i;
}

std::size_t ClusterUniverse::unite(std::size_t a, std::size_t b) {
  if (size_[a] < size_[b]) std::swap(a, b);
  parent_[b] = a;
  size_[a] += size_[b];
  --components_;
  return a;
}

std::vector<std::vector<std::size_t>> ClusterUniverse::groups() {
  std::vector<std::vector<std::size_t>> out;
  std::unordered_map<std::size_t, std::size_t> slot_of_root;
  for (std::size_t i = 0; i < parent_.size(); ++i) {
    const std::size_t root = find(i);
    auto [it, inserted] = slot_of_root.try_emplace(root, out.size());
    if (inserted) out.emplace_back();
    out[it->second].push_back(i);
  }
  return out;
}

// --- per-segment stages -----------------------------------------------

SegmentStats segment_stats(const Segment& s, const Octree& tree,
                           double radius) {
  SegmentStats st;
  const auto ids = tree.query_cylinder(Cylinder(s, radius));
  st.covered_count = ids.size();
  st.density = static_cast<double>(ids.size()) / s.length();
  if (ids.empty()) {
    st.e_rms = 0.0;
    return st;
  }
  double sum_sq = 0.0;
  for (const std::uint32_t id : ids) {
    const double d = point_segment_distance(tree.point(id), s);
    sum_sq += d * d;
  }
  st.e_rms = std::sqrt(sum_sq / static_cast<double>(ids.size()));
  st.ratio = st.e_rms / static_cast<double>(ids.size());
  return st;
}

Segment translate_segment(const Segment& s, const Octree& tree,
                          const PipelineConfig& cfg) {
  const auto ids = tree.query_cylinder(Cylinder(s, cfg.working_radius));
  if (ids.empty()) return s;
  Vec3 sum = Vec3::Zero();
  for (const std::uint32_t id : ids)
    sum += perpendicular_offset(tree.point(id), s);
  return s.translated(sum / static_cast<double>(ids.size()));
}

CropResult crop_segment(const Segment& s, const Octree& tree,
                        const PipelineConfig& cfg) {
  const double len = s.length();
  const double w = cfg.crop_window_fraction * len;
  if (w < 1e-8) return CropResult{s, false, false};

  const double interior = window_density(s, 0.5 * (len - w), 0.5 * (len + w),
                                         tree, cfg.working_radius);
  if (interior <= 0.0) return CropResult{s, false, false};

  const double new_a = crop_boundary(s, tree, cfg, interior, false);
  const double new_b = crop_boundary(s, tree, cfg, interior, true);
  if (new_a == 0.0 && new_b == len) return CropResult{s, false, false};
  if (new_b - new_a < kMinSegmentLength) return CropResult{s, false, true};
  return CropResult{sub_segment(s, new_a / len, new_b / len), true, false};
}

// --- scene-level stages -----------------------------------------------

double outlier_threshold(const std::vector<SegmentStats>& stats, double xi) {
  require(!stats.empty(), "outlier_threshold: no segments");
  double mean = 0.0;
  for (const SegmentStats& st : stats) mean += st.density;
  mean /= static_cast<double>(stats.size());
  return xi * mean;
}

std::vector<Segment> remove_outliers(const std::vector<Segment>& segments,
                                     const std::vector<SegmentStats>& stats,
                                     double theta) {
  require(segments.size() == stats.size(),
          "remove_outliers: stats not aligned with segments");
  std::vector<Segment> kept;
  kept.reserve(segments.size());
  for (std::size_t i = 0; i < segments.size(); ++i)
    if (stats[i].density >= theta) kept.push_back(segments[i]);
  return kept;
}

double similarity(const Segment& si, const Segment& sj, double lambda_sim,
                  SimilarityBranch branch) {
  const double li = si.length();
  const double lj = sj.length();
  const Segment* lng = &si;
  const Segment* sht = &sj;
  if (lj > li || (lj == li && canonical_less(sj, si))) {
    lng = &sj;
    sht = &si;
  }

  const double cos_theta =
      std::min(1.0, std::abs(si.direction().dot(sj.direction())));
  const bool active = branch == SimilarityBranch::aligned ? cos_theta >= 0.5
                                                          : cos_theta < 0.5;
  if (!active) return 0.0;

  const double ratio = lng->length() / sht->length();
  const double d = std::max(point_line_distance(sht->a(), *lng),
                            point_line_distance(sht->b(), *lng));
  return std::tanh(ratio * ratio * cos_theta) /
         (1.0 + lambda_sim * d * d);
}

ClusterResult cluster(const std::vector<Segment>& segments, double lambda_sim,
                      double cluster_c, SimilarityBranch branch) {
  struct Edge {
    std::uint32_t i, j;
    double w;
  };
  const std::size_t n = segments.size();
  std::vector<Edge> edges;
  for (std::uint32_t i = 0; i < n; ++i) {
    for (std::uint32_t j = i + 1; j < n; ++j) {
      const double s = similarity(segments[i], segments[j], lambda_sim, branch);
      if (s > 0.0) edges.push_back(Edge{i, j, 1.0 - s});
    }
  }
  // Stable sort keeps (i, j) build order on equal weights.
  std::stable_sort(edges.begin(), edges.end(),
                   [](const Edge& a, const Edge& b) { return a.w < b.w; });

  ClusterResult result{ClusterUniverse(n, cluster_c), {}};
  ClusterUniverse& u = result.universe;
  for (const Edge& e : edges) {
    const std::size_t a = u.find(e.i);
    const std::size_t b = u.find(e.j);
    if (a == b) continue;
    const double ta = u.threshold(a);
    const double tb = u.threshold(b);
    if (e.w <= ta && e.w <= tb) {
      const std::size_t root = u.unite(a, b);
      u.set_threshold(root, e.w + cluster_c / static_cast<double>(u.size(root)));
      result.admitted.push_back(AdmittedEdge{e.i, e.j, e.w, ta, tb});
    }
  }
  return result;
}

namespace {

// Density gate on the region between two segments. A connecting segment
// shorter than the degeneracy bound means the segments touch: no gap.
bool gap_is_dense(const Vec3& from, const Vec3& to, const Octree& tree,
                  const PipelineConfig& cfg, double theta) {
  if ((to - from).norm() < kMinSegmentLength) return true;
  const Segment gap(from, to);
  const double density =
      static_cast<double>(
          tree.query_cylinder(Cylinder(gap, cfg.working_radius)).size()) /
      gap.length();
  return density >= cfg.merge_gap_density_factor * theta;
}

}  // namespace

MergeResult merge_pair(const Segment& longer, const Segment& shorter,
                       const Octree& tree, const PipelineConfig& cfg,
                       double theta) {
  const auto [tl, ts] = closest_params(longer, shorter);
  if (!gap_is_dense(longer.point_at(tl), shorter.point_at(ts), tree, cfg,
                    theta))
    return MergeResult{false, longer, false};

  const Vec3 delta = perpendicular_offset(shorter.midpoint(), longer);
  const double w_s =
      shorter.length() / (shorter.length() + longer.length());
  const Segment candidate = longer.translated(w_s * delta);
  const double r_candidate =
      segment_stats(candidate, tree, cfg.working_radius).ratio;
  const double r_longer =
      segment_stats(longer, tree, cfg.working_radius).ratio;
  if (r_candidate < r_longer) return MergeResult{true, candidate, true};
  return MergeResult{true, longer, false};
}

JoinResult join_pair(const Segment& si, const Segment& sj, const Octree& tree,
                     const PipelineConfig& cfg, double theta) {
  const Vec3 ends_i[2] = {si.a(), si.b()};
  const Vec3 ends_j[2] = {sj.a(), sj.b()};
  double best_near = std::numeric_limits<double>::infinity();
  double best_far = -1.0;
  Vec3 near_i = ends_i[0], near_j = ends_j[0];
  Vec3 far_i = ends_i[0], far_j = ends_j[0];
  for (const Vec3& ei : ends_i) {
    for (const Vec3& ej : ends_j) {
      const double d = (ei - ej).norm();
      if (d < best_near) {
        best_near = d;
        near_i = ei;
        near_j = ej;
      }
      if (d > best_far) {
        best_far = d;
        far_i = ei;
        far_j = ej;
      }
    }
  }
  if (!gap_is_dense(near_i, near_j, tree, cfg, theta)) return JoinResult{};
  if (best_far < kMinSegmentLength) return JoinResult{};

  const Segment candidate(far_i, far_j);
  const double r_candidate =
      segment_stats(candidate, tree, cfg.working_radius).ratio;
  const double r_best =
      std::min(segment_stats(si, tree, cfg.working_radius).ratio,
               segment_stats(sj, tree, cfg.working_radius).ratio);
  if (r_candidate <= r_best) return JoinResult{true, candidate};
  return JoinResult{};
}

// --- full pipeline --------------------------------------------------------

namespace {

struct GroupCounters {
  std::size_t merges = 0, candidates = 0, joins = 0, sweeps = 0;
};

// Merge/join sweep over one cluster's slots, longest segment first, repeated
// until no pair changes or the sweep cap is hit.
GroupCounters process_cluster(const std::vector<std::size_t>& members,
                              std::vector<std::optional<Segment>>& slot,
                              const Octree& tree, const PipelineConfig& cfg,
                              double theta) {
  GroupCounters counters;
  if (members.size() < 2) return counters;
  for (int sweep = 0; sweep < kMaxMergeSweeps; ++sweep) {
    std::vector<std::size_t> order;
    for (const std::size_t m : members)
      if (slot[m]) order.push_back(m);
    if (order.size() < 2) break;
    std::sort(order.begin(), order.end(),
              [&](std::size_t x, std::size_t y) {
                const double lx = slot[x]->length();
                const double ly = slot[y]->length();
                if (lx != ly) return lx > ly;
                return x < y;
              });
    ++counters.sweeps;
    bool changed = false;
    for (std::size_t ii = 0; ii < order.size(); ++ii) {
      for (std::size_t jj = ii + 1; jj < order.size(); ++jj) {
        const std::size_t x = order[ii];
        const std::size_t y = order[jj];
        if (!slot[x] || !slot[y]) continue;
        const Segment& sx = *slot[x];
        const Segment& sy = *slot[y];
        const bool x_longer = sx.length() >= sy.length();
        const std::size_t lng_slot = x_longer ? x : y;
        const std::size_t sht_slot = x_longer ? y : x;
        const Segment lng = x_longer ? sx : sy;
        const Segment sht = x_longer ? sy : sx;
        if (overlap(lng, sht, cfg.overlap_semantics)) {
          const MergeResult mr = merge_pair(lng, sht, tree, cfg, theta);
          if (mr.merged) {
            slot[lng_slot] = mr.survivor;
            slot[sht_slot].reset();
            ++counters.merges;
            if (mr.candidate_adopted) ++counters.candidates;
            changed = true;
          }
        } else {
          const JoinResult jr = join_pair(lng, sht, tree, cfg, theta);
          if (jr.joined) {
            slot[lng_slot] = *jr.joined_segment;
            slot[sht_slot].reset();
            ++counters.joins;
            changed = true;
          }
        }
      }
    }
    if (!changed) break;
  }
  return counters;
}

}  // namespace

RefineResult refine(const std::vector<Segment>& segments, const Octree& tree,
                    const PipelineConfig& cfg, unsigned threads) {
  cfg.validate();
  require(!segments.empty(), "refine: at least one segment required");
  require(tree.indexed_count() > 0, "refine: octree indexes no points");

  RefineReport rep;
  const std::size_t n = segments.size();
  rep.before = aggregate_stats(segments, tree, cfg.working_radius, threads);

  // translate
  rep.translate.in = n;
  std::vector<Segment> current = segments;
  parallel_for(n, threads, [&](std::size_t i) {
    current[i] = translate_segment(segments[i], tree, cfg);
  });
  rep.translate.out = n;

  // crop
  rep.crop.in = n;
  std::vector<char> modified(n, 0);
  std::vector<char> flagged(n, 0);
  {
    const std::vector<Segment> snapshot = current;
    parallel_for(n, threads, [&](std::size_t i) {
      const CropResult cr = crop_segment(snapshot[i], tree, cfg);
      current[i] = cr.segment;
      modified[i] = cr.modified ? 1 : 0;
      flagged[i] = cr.flagged ? 1 : 0;
    });
  }
  for (std::size_t i = 0; i < n; ++i) {
    rep.crop_modified += modified[i];
    rep.crop_flagged += flagged[i];
  }
  rep.crop.out = n;

  // outlier filter
  rep.outlier.in = n;
  std::vector<SegmentStats> stats(n);
  parallel_for(n, threads, [&](std::size_t i) {
    stats[i] = segment_stats(current[i], tree, cfg.working_radius);
  });
  const double theta = outlier_threshold(stats, cfg.outlier_scaler);
  rep.outlier_threshold = theta;
  std::vector<Segment> survivors;
  survivors.reserve(n);
  for (std::size_t i = 0; i < n; ++i)
    if (stats[i].density >= theta && !flagged[i]) survivors.push_back(current[i]);
  rep.outliers_removed = n - survivors.size();
  rep.outlier.out = survivors.size();

  rep.cluster.in = survivors.size();
  rep.merge_join.in = survivors.size();
  if (survivors.empty()) {
    rep.after = AggregateStats{};
    return RefineResult{survivors, rep};
  }

  // cluster
  ClusterResult clusters = cluster(survivors, cfg.similarity_weight(),
                                   cfg.cluster_c, cfg.similarity_branch);
  rep.cluster_count = clusters.universe.component_count();
  rep.cluster.out = survivors.size();

  // merge/join within clusters; clusters touch disjoint slots, so they can
  // run concurrently without affecting the result
  std::vector<std::optional<Segment>> slot(survivors.begin(), survivors.end());
  const std::vector<std::vector<std::size_t>> groups =
      clusters.universe.groups();
  std::vector<GroupCounters> counters(groups.size());
  parallel_for(groups.size(), threads, [&](std::size_t g) {
    counters[g] = process_cluster(groups[g], slot, tree, cfg, theta);
  });
  for (const GroupCounters& c : counters) {
    rep.merges_applied += c.merges;
    rep.merge_candidates_adopted += c.candidates;
    rep.joins_applied += c.joins;
    rep.sweeps_run += c.sweeps;
  }

  std::vector<Segment> out;
  out.reserve(survivors.size());
  for (const auto& s : slot)
    if (s) out.push_back(*s);
  rep.merge_join.out = out.size();
  rep.after = aggregate_stats(out, tree, cfg.working_radius, threads);
  return RefineResult{std::move(out), rep};
}

RefineResult refine(const std::vector<Segment>& segments,
                    const GaussianCloud& cloud, const PipelineConfig& cfg,
                    int octree_depth, int leaf_capacity, double bbox_pad,
                    unsigned threads) {
  const Box3 box =
      padded(segments_bbox(segments), bbox_pad + cfg.working_radius);
  const Octree tree = Octree::build(cloud, octree_depth, box, leaf_capacity);
  return refine(segments, tree, cfg, threads);
}

// --- enum token helpers -----------------------------------------------

std::string to_string(OverlapSemantics s) {
  return s == OverlapSemantics::conjunction ? "conjunction" : "paper-union";
}

std::string to_string(SimilarityBranch b) {
  return b == SimilarityBranch::aligned ? "aligned" : "paper";
}

OverlapSemantics overlap_semantics_from_string(const std::string& token) {
  if (token == "conjunction") return OverlapSemantics::conjunction;
  if (token == "paper-union") return OverlapSemantics::paper_union;
  throw std::invalid_argument(
      "overlap_semantics must be one of: conjunction, paper-union");
}

SimilarityBranch similarity_branch_from_string(const std::string& token) {
  if (token == "aligned") return SimilarityBranch::aligned;
  if (token == "paper") return SimilarityBranch::paper;
  throw std::invalid_argument(
      "similarity_branch must be one of: aligned, paper");
}

}  // namespace splatline
