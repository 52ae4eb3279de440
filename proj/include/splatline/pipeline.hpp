#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "splatline/geom.hpp"
#include "splatline/octree.hpp"
#include "splatline/types.hpp"

namespace splatline {

/// Which side of the 0.5 cosine gate evaluates the similarity formula.
/// `aligned` activates it for near-parallel pairs (cosθ >= 0.5, the default);
/// `paper` keeps the printed inequality (cosθ < 0.5) for comparison runs.
enum class SimilarityBranch { aligned, paper };

/// Per-segment derived quantities at a given cylinder radius.
struct SegmentStats {
  std::size_t covered_count = 0;  // N = |X(s)|
  double density = 0.0;           // N / length, points per meter
  double e_rms = 0.0;             // meters; 0 when N = 0
  /// R = e_rms / N, meters per point; +inf when N = 0 so that empty
  /// candidates always lose merge/join comparisons.
  double ratio = std::numeric_limits<double>::infinity();
};

/// Every tunable of the refinement pipeline.
struct PipelineConfig {
  double working_radius = 0.05;   // r, meters
  double outlier_scaler = 0.02;   // ξ in (0, 1]
  /// Similarity weight λ (1/m²); unset derives 2/r².
  std::optional<double> lambda_sim;
  double cluster_c = 0.25;
  int crop_max_iters = 10;
  double crop_min_interval = 1e-4;     // meters
  double crop_window_fraction = 0.25;  // of segment length, in (0, 0.5]
  double crop_density_ratio = 0.5;     // α in (0, 1)
  double merge_gap_density_factor = 1.0;
  OverlapSemantics overlap_semantics = OverlapSemantics::conjunction;
  SimilarityBranch similarity_branch = SimilarityBranch::aligned;

  double similarity_weight() const {
    return lambda_sim ? *lambda_sim
                      : 2.0 / (working_radius * working_radius);
  }

  /// Throws std::invalid_argument on any violated invariant.
  void validate() const;
};

/// Disjoint-set forest over segments with a per-component admission
/// threshold, grown by admitting low-dissimilarity edges.
class ClusterUniverse {
 public:
  ClusterUniverse(std::size_t n, double initial_threshold);

  std::size_t find(std::size_t i);
  /// Joins the components rooted at a and b (a != b); returns the new root.
  std::size_t unite(std::size_t a, std::size_t b);

  std::size_t size(std::size_t root) const { return size_[root]; }
  double threshold(std::size_t root) const { return threshold_[root]; }
  void set_threshold(std::size_t root, double t) { threshold_[root] = t; }
  std::size_t component_count() const { return components_; }
  std::size_t element_count() const { return parent_.size(); }

  /// Members per component, components ordered by smallest member index,
  /// members ascending.
  std::vector<std::vector<std::size_t>> groups();

 private:
  std::vector<std::size_t> parent_;
  std::vector<std::size_t> size_;
  std::vector<double> threshold_;
  std::size_t components_;
};

/// One edge admitted during clustering, with the component thresholds that
/// were in force at admission time (audit trail for replay checks).
struct AdmittedEdge {
  std::uint32_t i = 0, j = 0;
  double w = 0.0;
  double threshold_i = 0.0, threshold_j = 0.0;
};

struct ClusterResult {
  ClusterUniverse universe;
  std::vector<AdmittedEdge> admitted;
};

struct CropResult {
  Segment segment;
  bool modified = false;
  /// Both crop searches met in the middle; the segment is returned unchanged
  /// and force-removed at the outlier stage.
  bool flagged = false;
};

struct MergeResult {
  bool merged = false;  // shorter consumed; survivor below is the keeper
  Segment survivor;
  bool candidate_adopted = false;  // survivor is the shifted candidate
};

struct JoinResult {
  bool joined = false;
  std::optional<Segment> joined_segment;
};

struct AggregateStats {
  std::size_t count = 0;
  double total_length = 0.0;   // meters
  double mean_density = 0.0;   // points per meter
  double mean_e_rms = 0.0;     // meters, averaged over segments with N > 0
};

struct StageCounts {
  std::size_t in = 0, out = 0;
};

struct RefineReport {
  StageCounts translate, crop, outlier, cluster, merge_join;
  std::size_t crop_modified = 0;
  std::size_t crop_flagged = 0;
  double outlier_threshold = 0.0;  // θ, points per meter
  std::size_t outliers_removed = 0;
  std::size_t cluster_count = 0;
  std::size_t merges_applied = 0;
  std::size_t merge_candidates_adopted = 0;
  std::size_t joins_applied = 0;
  std::size_t sweeps_run = 0;
  AggregateStats before, after;
};

struct RefineResult {
  std::vector<Segment> segments;
  RefineReport report;
};

// --- per-segment stages -----------------------------------------------

SegmentStats segment_stats(const Segment& s, const Octree& tree, double radius);

/// Rigid translation by the mean perpendicular offset of the covered points
/// (closed-form least-squares minimizer over pure translations). Length and
/// direction are preserved exactly; N = 0 returns s unchanged.
Segment translate_segment(const Segment& s, const Octree& tree,
                          const PipelineConfig& cfg);

/// Binary-search cropping of overextended endpoints. Each endpoint is
/// handled independently and can move inward at most to the midpoint.
CropResult crop_segment(const Segment& s, const Octree& tree,
                        const PipelineConfig& cfg);

// --- scene-level stages -------------------------------------------------

/// θ = ξ · mean density over all segments. Throws on empty input.
double outlier_threshold(const std::vector<SegmentStats>& stats, double xi);

/// Keeps exactly the segments with density >= θ, order preserved.
std::vector<Segment> remove_outliers(const std::vector<Segment>& segments,
                                     const std::vector<SegmentStats>& stats,
                                     double theta);

/// Similarity in [0, 1): tanh(R²·cosθ) / (1 + λ·d²) gated on the cosine,
/// with R the longer/shorter length ratio, cosθ the |cosine| between the
/// directions, and d the larger distance from the shorter segment's
/// endpoints to the longer segment's line. Symmetric in its arguments.
double similarity(const Segment& si, const Segment& sj, double lambda_sim,
                  SimilarityBranch branch = SimilarityBranch::aligned);

/// Graph clustering over all pairs with similarity > 0, admitting edges in
/// ascending dissimilarity w = 1 - s under the adaptive per-component
/// threshold w + cluster_c / size. Deterministic: ties keep edge build order
/// ((i, j) lexicographic).
ClusterResult cluster(const std::vector<Segment>& segments, double lambda_sim,
                      double cluster_c,
                      SimilarityBranch branch = SimilarityBranch::aligned);

/// Merge attempt for an overlapping same-cluster pair. When the gap between
/// the two axes holds enough density, the longer segment is shifted toward
/// the shorter by len_s/(len_s+len_l) of their perpendicular offset and the
/// variant with the smaller R survives (ties keep the original); the shorter
/// segment is consumed. An empty gap keeps both.
MergeResult merge_pair(const Segment& longer, const Segment& shorter,
                       const Octree& tree, const PipelineConfig& cfg,
                       double theta);

/// Join attempt for a non-overlapping same-cluster pair: when the gap
/// between the nearest endpoints is dense enough and the segment connecting
/// the farthest endpoints does not worsen R, it replaces both.
JoinResult join_pair(const Segment& si, const Segment& sj, const Octree& tree,
                     const PipelineConfig& cfg, double theta);

/// Full pipeline: translate → crop → outlier filter → cluster → merge/join
/// within clusters (longest-first, swept to a fixpoint, at most
/// kMaxMergeSweeps sweeps). Deterministic for identical inputs and config.
RefineResult refine(const std::vector<Segment>& segments, const Octree& tree,
                    const PipelineConfig& cfg, unsigned threads = 0);

/// Convenience overload that builds the octree from the segments' padded
/// endpoint bbox (pad = bbox_pad + working radius).
RefineResult refine(const std::vector<Segment>& segments,
                    const GaussianCloud& cloud, const PipelineConfig& cfg,
                    int octree_depth = 10,
                    int leaf_capacity = Octree::kDefaultLeafCapacity,
                    double bbox_pad = 0.0, unsigned threads = 0);

inline constexpr int kMaxMergeSweeps = 10;

// --- enum <-> token helpers (shared by config files and CLI flags) -------

std::string to_string(OverlapSemantics s);
std::string to_string(SimilarityBranch b);
OverlapSemantics overlap_semantics_from_string(const std::string& token);
SimilarityBranch similarity_branch_from_string(const std::string& token);

}  // namespace splatline
