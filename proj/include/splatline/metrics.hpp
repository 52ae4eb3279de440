#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "splatline/octree.hpp"
#include "splatline/pipeline.hpp"
#include "splatline/types.hpp"

namespace splatline {

struct EvalConfig {
  double eval_radius = 0.10;  // meters
  double score_scaler = 1.0;  // λ of the score formula
  std::vector<double> radius_sweep = {0.01, 0.02, 0.05, 0.10};

  void validate() const;
};

/// Scene-level representation-quality report.
///
/// score = λ · r_covered_pct / (ln(1 + e_rms_cm) · ln(1 + r_l)); it is
/// absent whenever either log is non-positive (E_rms = 0 or r_l absent).
struct EvalReport {
  double e_rms_cm = 0.0;       // pooled RMS point-to-segment distance
  double r_covered_pct = 0.0;  // covered share of the indexed cloud
  std::optional<double> r_l;   // total length / ln(total covered count)
  std::optional<double> score;
  std::vector<SegmentStats> per_segment;  // at eval_radius
  std::size_t covered_total = 0;  // distinct covered points
  std::size_t cloud_total = 0;    // indexed points (inside the eval bbox)
  std::size_t covered_multiplicity = 0;  // Σ per-segment counts
  double total_length = 0.0;             // meters
};

/// Evaluates the segments against the indexed cloud. Every covered point is
/// assigned to its nearest covering segment for the pooled E_rms; the
/// covered count in R_L sums per-segment counts with multiplicity.
/// Throws std::invalid_argument when segments is empty.
EvalReport evaluate(const std::vector<Segment>& segments, const Octree& tree,
                    const EvalConfig& ecfg, unsigned threads = 0);

/// One report per sweep radius against the same tree. R_covered is
/// verified nondecreasing across the (strictly increasing) radii.
std::vector<std::pair<double, EvalReport>> radius_sweep(
    const std::vector<Segment>& segments, const Octree& tree,
    const EvalConfig& ecfg, unsigned threads = 0);

}  // namespace splatline
