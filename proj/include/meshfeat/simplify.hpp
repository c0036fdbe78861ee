#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <vector>

#include <Eigen/Core>

#include "meshfeat/mesh.hpp"

namespace meshfeat {

/// Garland-Heckbert error quadric: symmetric 4x4, v^T Q v is the summed squared
/// distance of homogeneous point v to the accumulated planes.
using Quadric = Eigen::Matrix4d;

Quadric plane_quadric(const Vec3& unit_normal, double offset);

/// Per-vertex quadrics: one plane term per incident face plus a heavily weighted
/// perpendicular plane for every boundary edge.
std::vector<Quadric> vertex_quadrics(const Mesh& mesh);

inline constexpr double kBoundaryQuadricWeight = 1e3;

/// Position minimizing v^T Q v. Falls back to the best of {a, b, midpoint} when the
/// 3x3 system is near-singular (condition estimate above 1e12).
Vec3 optimal_collapse_position(const Quadric& q, const Vec3& a, const Vec3& b);
double quadric_cost(const Quadric& q, const Vec3& p);

/// One recorded contraction: `removed` merged into `kept` (indices of the input mesh).
struct Collapse {
  uint32_t kept = 0;
  uint32_t removed = 0;
};

struct SimplifyResult {
  Mesh mesh;
  std::vector<uint32_t> map;  // input vertex -> output vertex
  std::vector<Collapse> log;
  bool stalled = false;
};

/// Edge-collapse decimation down to `target_vertices`. Survivors keep their input
/// order in the output mesh. Throws DataError if target < 3 or target > |V|.
SimplifyResult simplify_to_count(const Mesh& mesh, size_t target_vertices);

/// Multi-resolution sequence. Level 0 is the input mesh with identity map; every map
/// indexes directly from original vertices into that level's vertex set.
struct Hierarchy {
  std::vector<double> resolutions;
  std::vector<Mesh> meshes;
  std::vector<std::vector<uint32_t>> maps;

  size_t num_levels() const { return meshes.size(); }
  size_t num_original_vertices() const { return maps.empty() ? 0 : maps[0].size(); }
  uint64_t hash() const;
};

size_t target_vertex_count(double ratio, size_t original_vertices);

/// Cascaded decimation: level i+1 is simplified from level i. `resolutions` must start
/// at 1, lie in (0, 1] and never increase.
Hierarchy build_hierarchy(const Mesh& mesh, const std::vector<double>& resolutions);

void save_hierarchy(const Hierarchy& h, const std::filesystem::path& path);
Hierarchy load_hierarchy(const std::filesystem::path& path);
void write_hierarchy(const Hierarchy& h, std::ostream& out);
Hierarchy read_hierarchy(std::istream& in);

}  // namespace meshfeat
