#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "splatline/metrics.hpp"
#include "splatline/types.hpp"

namespace splatline {

/// Deterministic random source. The mt19937_64 engine output is pinned by
/// the standard and all transforms (uniform, Box-Muller normal) are
/// hand-rolled here, so streams are identical across platforms and library
/// versions.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  double uniform() {  // [0, 1)
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  double normal();
  Vec3 normal3(double sigma);
  Vec3 unit_vector();
  /// Unit vector orthogonal to dir, uniform over the perpendicular circle.
  Vec3 perpendicular_unit(const Vec3& dir);

 private:
  std::mt19937_64 gen_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// --- wireframe shapes ---------------------------------------------------

/// The 12 edges of an axis-aligned cube.
std::vector<Segment> cube_wireframe(double size = 1.0,
                                    const Vec3& origin = Vec3::Zero());

/// All unit-cell edges of an n×n×n lattice with the given cell size
/// (3·n²·(n−1) segments).
std::vector<Segment> grid_wireframe(int n, double cell);

// --- scene generation -----------------------------------------------------

struct SceneParams {
  double points_per_meter = 500.0;
  double noise_sigma = 0.005;        // meters, isotropic
  double background_fraction = 0.0;  // of the total cloud, in [0, 1)
};

struct SyntheticScene {
  std::vector<Segment> ground_truth_edges;
  GaussianCloud cloud;
  SceneParams params;
  std::uint64_t rng_seed = 0;
};

/// Samples points uniformly along each edge with isotropic Gaussian jitter,
/// plus uniform background points in the padded edge bbox. Deterministic
/// per seed.
SyntheticScene generate_scene(const std::vector<Segment>& edges,
                              const SceneParams& params, std::uint64_t seed);

// --- defect injection -----------------------------------------------------

struct DefectSpec {
  double position_bias = 0.0;      // perpendicular offset magnitude, meters
  double overextension = 0.0;      // added length as a fraction of length
  int outlier_count = 0;           // spurious segments in empty space
  double outlier_clearance = 0.2;  // min distance of outliers to any edge, m
  double outlier_length = 0.0;     // 0 = mean edge length
  int duplicate_copies = 0;        // extra jittered copies per edge
  double duplicate_jitter = 0.0;   // endpoint jitter sigma, meters
  int split_count = 0;             // cuts per edge
  double split_gap = 0.0;          // gap removed around each cut, meters
};

/// Where an output segment came from. source_edge is -1 for planted
/// outliers; defects is a '+'-joined tag list ("none" when clean);
/// overextension records which endpoint ("a"/"b") was extended.
struct ManifestEntry {
  int source_edge = -1;
  std::string defects;
  std::string extended_side;
};

struct DefectResult {
  std::vector<Segment> segments;
  std::vector<ManifestEntry> manifest;  // aligned with segments
};

/// Applies the defect classes per edge in the order bias → overextension →
/// split, emits duplicate copies of the unsplit segment, and plants
/// outliers by rejection sampling inside the edge bbox. Deterministic per
/// seed.
DefectResult inject_defects(const std::vector<Segment>& edges,
                            const DefectSpec& spec, std::uint64_t seed);

/// Manifest text: "<index> <source_edge> <defects> <extended_side>" per
/// line, '#'-comment header describing the columns.
std::string manifest_to_text(const DefectResult& result);
void save_manifest(const DefectResult& result,
                   const std::filesystem::path& path);

// --- oracle ---------------------------------------------------------------

/// Linear-scan mirror of evaluate(): identical contract, no octree. Points
/// outside the box are excluded exactly like an octree build would drop
/// them. Used to cross-check the indexed path.
EvalReport brute_force_evaluate(const std::vector<Segment>& segments,
                                const GaussianCloud& cloud, const Box3& box,
                                const EvalConfig& ecfg);

}  // namespace splatline
