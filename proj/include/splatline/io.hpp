#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "splatline/metrics.hpp"
#include "splatline/pipeline.hpp"
#include "splatline/types.hpp"

namespace splatline {

/// File-level failures: missing files, malformed or truncated data.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid configuration: unknown keys, unparsable or out-of-range values.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// --- point clouds (PLY) -----------------------------------------------

struct PlyLoadResult {
  GaussianCloud cloud;
  std::size_t declared_vertices = 0;
  std::size_t nonfinite_skipped = 0;
};

/// Reads a PLY point cloud (ASCII or binary little-endian). The vertex
/// element must carry float/double scalar properties x, y, z; every other
/// property and element is skipped. Non-finite vertices are dropped and
/// counted. Errors carry the byte offset of the failure.
PlyLoadResult load_ply(const std::filesystem::path& path);

void save_ply(const std::vector<Vec3>& points,
              const std::filesystem::path& path, bool binary = true);

/// Deterministic stride decimation keeping ~fraction of the points
/// (fraction in (0, 1]); the bbox is recomputed tight.
GaussianCloud downsample_cloud(const GaussianCloud& cloud, double fraction);

// --- segment files ----------------------------------------------------

struct SegmentsLoadResult {
  std::vector<Segment> segments;
  std::size_t degenerate_skipped = 0;
};

/// Text format: six whitespace-separated floats per line
/// (ax ay az bx by bz, meters); blank lines and `#` comments are ignored.
/// Zero-length records are skipped with a count; anything else malformed is
/// an error naming the line.
SegmentsLoadResult load_segments(const std::filesystem::path& path);

void save_segments(const std::vector<Segment>& segments,
                   const std::filesystem::path& path);

// --- configuration ----------------------------------------------------

/// Everything tunable, refinement and evaluation alike. Files are
/// line-oriented `key = value`; unknown keys are rejected.
struct Config {
  PipelineConfig pipeline;
  EvalConfig eval;
  int octree_depth = 10;
  int leaf_capacity = Octree::kDefaultLeafCapacity;
  double bbox_pad = 0.0;  // extra padding of the segment-endpoint bbox

  void validate() const;
};

/// Valid keys: r, xi, lambda_sim, cluster_c, crop_max_iters,
/// crop_min_interval, crop_window_fraction, crop_density_ratio,
/// merge_gap_density_factor, overlap_semantics, similarity_branch,
/// eval_radius, score_scaler, radii, octree_depth, leaf_capacity, bbox_pad.
const std::vector<std::string>& config_keys();

/// Defaults plus the file's keys; validates the result.
Config load_config(const std::filesystem::path& path);

/// Applies one `key = value` pair; shared by config files and --set flags.
/// Throws ConfigError on unknown keys or unparsable values.
void apply_config_override(Config& cfg, const std::string& key,
                           const std::string& value);

/// Full resolved key=value text (derived values spelled out).
std::string config_to_text(const Config& cfg);

void save_config(const Config& cfg, const std::filesystem::path& path);

// --- reports ----------------------------------------------------------

/// Flat `key = value` text; metric keys are e_rms_cm, r_covered_pct, r_l,
/// score, covered_total, cloud_total, covered_multiplicity, segment_count,
/// total_length_m. Absent metrics are omitted. When echo is non-null every
/// config key is appended as config.<key>.
std::string report_to_text(const EvalReport& rep, const Config* echo = nullptr);

/// Same content as a flat JSON object (metric name -> number); the config
/// echo, when present, is a nested "config" object of key -> string.
std::string report_to_json(const EvalReport& rep, const Config* echo = nullptr);

std::string refine_report_to_text(const RefineReport& rep,
                                  const EvalReport* eval_before,
                                  const EvalReport* eval_after,
                                  const Config& cfg);
std::string refine_report_to_json(const RefineReport& rep,
                                  const EvalReport* eval_before,
                                  const EvalReport* eval_after,
                                  const Config& cfg);

// --- helpers ------------------------------------------------------------

/// Writes via a temp file in the same directory plus rename, so interrupted
/// runs never leave truncated artifacts.
void atomic_write(const std::filesystem::path& path, std::string_view content);

/// "%.9g" formatting used for every number we persist.
std::string fmt_g9(double v);

}  // namespace splatline
