#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "meshfeat/camera.hpp"
#include "meshfeat/mesh.hpp"

namespace meshfeat {

inline constexpr double kMinHitDistance = 1e-6;

struct Hit {
  SurfaceSample sample;
  double t = 0.0;
};

struct Aabb {
  Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
  Vec3 hi = Vec3::Constant(-std::numeric_limits<double>::infinity());

  void extend(const Vec3& p) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  void extend(const Aabb& b) {
    lo = lo.cwiseMin(b.lo);
    hi = hi.cwiseMax(b.hi);
  }
  bool contains(const Aabb& b) const {
    return (lo.array() <= b.lo.array()).all() && (hi.array() >= b.hi.array()).all();
  }
  double surface_area() const;
};

/// Binned-SAH bounding volume hierarchy over the faces of one mesh. Keeps a reference
/// to the mesh, which must outlive it and stay unmodified.
class Bvh {
 public:
  struct Node {
    Aabb box;
    uint32_t first = 0;  // leaf: offset into face_order; inner: left child
    uint32_t count = 0;  // 0 for inner nodes
    uint32_t right = 0;  // inner: right child
  };

  explicit Bvh(const Mesh& mesh);

  const Mesh& mesh() const { return *mesh_; }
  const std::vector<Node>& nodes() const { return nodes_; }
  const std::vector<uint32_t>& face_order() const { return order_; }

  /// Nearest hit with t > kMinHitDistance; equal t resolves to the lower face index.
  std::optional<Hit> intersect(const Ray& ray) const;
  /// True if anything is hit with kMinHitDistance < t < t_max.
  bool occluded(const Ray& ray, double t_max = std::numeric_limits<double>::infinity()) const;

 private:
  uint32_t build(uint32_t first, uint32_t count, int depth);

  const Mesh* mesh_;
  std::vector<Node> nodes_;
  std::vector<uint32_t> order_;
  std::vector<Aabb> face_boxes_;
  std::vector<Vec3> centroids_;
};

/// Möller–Trumbore, both windings. Returns t and (u, v) for corners 1 and 2.
std::optional<std::array<double, 3>> intersect_triangle(const Ray& ray, const Vec3& p0, const Vec3& p1,
                                                        const Vec3& p2);

/// Reference: tests every face.
std::optional<Hit> intersect_brute_force(const Mesh& mesh, const Ray& ray);

}  // namespace meshfeat
