#include "splatline/octree.hpp"

#include <algorithm>
#include <array>
#include <limits>
#include <stdexcept>

namespace splatline {

namespace {

int octant_of(const Vec3& p, const Vec3& center) {
  return (p.x() >= center.x() ? 1 : 0) | (p.y() >= center.y() ? 2 : 0) |
         (p.z() >= center.z() ? 4 : 0);
}

Box3 octant_box(const Box3& box, int oct) {
  const Vec3 c = box.center();
  Vec3 lo = box.min();
  Vec3 hi = c;
  for (int axis = 0; axis < 3; ++axis) {
    if (oct & (1 << axis)) {
      lo[axis] = c[axis];
      hi[axis] = box.max()[axis];
    }
  }
  return Box3(lo, hi);
}

}  // namespace

bool node_cylinder_intersects(const Box3& box, const Cylinder& c) {
  const double half_diag = 0.5 * box.diagonal().norm();
  const double bound = c.radius + half_diag;
  return point_segment_distance(box.center(), c.axis) <=
         bound + 1e-12 * bound;
}

Octree Octree::build(const GaussianCloud& cloud, int max_depth,
                     const Box3& seed_bbox, int leaf_capacity) {
  if (max_depth < 1) throw std::invalid_argument("octree max_depth must be >= 1");
  if (leaf_capacity < 1)
    throw std::invalid_argument("octree leaf_capacity must be >= 1");
  if (seed_bbox.isEmpty() || (seed_bbox.sizes().array() <= 0.0).any())
    throw std::invalid_argument("degenerate bounding box");

  Octree tree;
  tree.bbox_ = seed_bbox;
  tree.max_depth_ = max_depth;
  for (std::uint32_t i = 0; i < cloud.points.size(); ++i) {
    if (in_box(seed_bbox, cloud.points[i])) {
      tree.ids_.push_back(i);
      tree.points_.push_back(cloud.points[i]);
    } else {
      ++tree.dropped_;
    }
  }
  if (!tree.points_.empty())
    tree.build_node(seed_bbox, 0, static_cast<std::uint32_t>(tree.points_.size()),
                    0, max_depth, leaf_capacity);
  tree.slot_of_.assign(cloud.points.size(),
                       std::numeric_limits<std::uint32_t>::max());
  for (std::uint32_t k = 0; k < tree.ids_.size(); ++k)
    tree.slot_of_[tree.ids_[k]] = k;
  return tree;
}

std::int32_t Octree::build_node(const Box3& box, std::uint32_t begin,
                                std::uint32_t end, int depth, int max_depth,
                                int leaf_capacity) {
  const std::int32_t id = static_cast<std::int32_t>(nodes_.size());
  nodes_.push_back(Node{});
  nodes_[id].box = box;
  std::fill(std::begin(nodes_[id].children), std::end(nodes_[id].children), -1);
  nodes_[id].begin = begin;
  nodes_[id].count = end - begin;

  if (end - begin <= static_cast<std::uint32_t>(leaf_capacity) ||
      depth >= max_depth)
    return id;

  // Stable counting sort of the range by octant keeps leaf point lists in
  // ascending original order, which makes builds and queries deterministic.
  const Vec3 center = box.center();
  std::array<std::uint32_t, 8> counts{};
  for (std::uint32_t k = begin; k < end; ++k)
    ++counts[octant_of(points_[k], center)];

  std::array<std::uint32_t, 9> offsets{};
  for (int o = 0; o < 8; ++o) offsets[o + 1] = offsets[o] + counts[o];

  std::vector<Vec3> tmp_pts(points_.begin() + begin, points_.begin() + end);
  std::vector<std::uint32_t> tmp_ids(ids_.begin() + begin, ids_.begin() + end);
  std::array<std::uint32_t, 8> cursor{};
  for (std::uint32_t k = 0; k < tmp_pts.size(); ++k) {
    const int o = octant_of(tmp_pts[k], center);
    const std::uint32_t dst = begin + offsets[o] + cursor[o]++;
    points_[dst] = tmp_pts[k];
    ids_[dst] = tmp_ids[k];
  }

  nodes_[id].leaf = false;
  for (int o = 0; o < 8; ++o) {
    if (counts[o] == 0) continue;
    const std::uint32_t child_begin = begin + offsets[o];
    const std::int32_t child =
        build_node(octant_box(box, o), child_begin, child_begin + counts[o],
                   depth + 1, max_depth, leaf_capacity);
    nodes_[id].children[o] = child;
  }
  return id;
}

std::vector<std::uint32_t> Octree::query_cylinder(const Cylinder& c) const {
  std::vector<std::uint32_t> out;
  if (!nodes_.empty()) query_node(0, c, out);
  std::sort(out.begin(), out.end());
  return out;
}

void Octree::query_node(std::int32_t node_id, const Cylinder& c,
                        std::vector<std::uint32_t>& out) const {
  const Node& node = nodes_[node_id];
  if (!node_cylinder_intersects(node.box, c)) return;
  if (node.leaf) {
    const std::uint32_t end = node.begin + node.count;
    for (std::uint32_t k = node.begin; k < end; ++k)
      if (cylinder_contains(c, points_[k])) out.push_back(ids_[k]);
    return;
  }
  for (const std::int32_t child : node.children)
    if (child >= 0) query_node(child, c, out);
}

std::vector<std::uint32_t> Octree::indexed_ids() const {
  std::vector<std::uint32_t> ids = ids_;
  std::sort(ids.begin(), ids.end());
  return ids;
}

}  // namespace splatline
