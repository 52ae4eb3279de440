#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "splatline/geom.hpp"
#include "splatline/types.hpp"

namespace splatline {

/// Conservative node-pruning predicate: true whenever the box could contain
/// a point of the solid capped cylinder. Uses the sphere bound
/// dist(box center, axis) <= radius + half diagonal, which never produces a
/// false negative; candidates are verified per point afterwards.
bool node_cylinder_intersects(const Box3& box, const Cylinder& c);

/// Static octree over Gaussian centers answering exact capped-cylinder
/// range queries. Points outside the seed box are dropped at build time and
/// counted. Immutable after build; concurrent queries are safe.
class Octree {
 public:
  static constexpr int kDefaultLeafCapacity = 32;

  /// Indexes the cloud points inside seed_bbox. Subdivision stops at
  /// max_depth levels below the root or when a node holds at most
  /// leaf_capacity points.
  static Octree build(const GaussianCloud& cloud, int max_depth,
                      const Box3& seed_bbox,
                      int leaf_capacity = kDefaultLeafCapacity);

  /// Exactly the indices (into the original cloud) of indexed points inside
  /// the cylinder, sorted ascending.
  std::vector<std::uint32_t> query_cylinder(const Cylinder& c) const;

  std::size_t indexed_count() const { return points_.size(); }
  std::size_t dropped_count() const { return dropped_; }
  const Box3& bbox() const { return bbox_; }
  int max_depth() const { return max_depth_; }
  std::size_t node_count() const { return nodes_.size(); }

  /// Original-cloud indices of every indexed point, sorted ascending.
  std::vector<std::uint32_t> indexed_ids() const;

  /// Coordinates of an indexed point, addressed by its original cloud index
  /// (the ids query_cylinder returns).
  const Vec3& point(std::uint32_t original_id) const {
    return points_[slot_of_[original_id]];
  }

 private:
  struct Node {
    Box3 box;
    std::int32_t children[8];  // -1 when absent
    std::uint32_t begin = 0;   // leaf range into points_/ids_
    std::uint32_t count = 0;
    bool leaf = true;
  };

  std::int32_t build_node(const Box3& box, std::uint32_t begin,
                          std::uint32_t end, int depth, int max_depth,
                          int leaf_capacity);
  void query_node(std::int32_t node_id, const Cylinder& c,
                  std::vector<std::uint32_t>& out) const;

  std::vector<Node> nodes_;
  std::vector<Vec3> points_;          // indexed points, leaf ranges contiguous
  std::vector<std::uint32_t> ids_;    // original cloud index per points_ slot
  std::vector<std::uint32_t> slot_of_;  // inverse of ids_, by original index
  Box3 bbox_;
  std::size_t dropped_ = 0;
  int max_depth_ = 0;
};

}  // namespace splatline
