#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace meshfeat {

using Vec3 = Eigen::Vector3d;
using Face = std::array<uint32_t, 3>;

/// Triangle mesh M = (V, F). Immutable once built; faces index 0-based into vertices.
struct Mesh {
  std::vector<Vec3> vertices;
  std::vector<Face> faces;

  size_t num_vertices() const { return vertices.size(); }
  size_t num_faces() const { return faces.size(); }
};

/// A point on the surface: a face plus barycentric weights of its three corners.
struct SurfaceSample {
  uint32_t face = 0;
  std::array<double, 3> bary{1.0, 0.0, 0.0};
};

// Throws DataError if an index is out of range, a face repeats a vertex,
// the mesh is too small, or any face has zero area (offending faces listed).
void validate(const Mesh& mesh);

// Same as validate() minus the zero-area check.
void validate_indices(const Mesh& mesh);

Mesh load_obj(const std::filesystem::path& path);
Mesh parse_obj(const std::string& text);
void save_obj(const Mesh& mesh, const std::filesystem::path& path);

Vec3 face_normal(const Mesh& mesh, uint32_t face);  // unit, CCW winding
double face_area(const Mesh& mesh, uint32_t face);

/// Area-weighted vertex normals; vertices with no incident face get (0,0,1).
std::vector<Vec3> vertex_normals(const Mesh& mesh);

/// Barycentric coordinates of `point` w.r.t. `face`. The point is projected onto the
/// triangle plane first; the result is clamped to [0,1] and renormalized.
std::array<double, 3> barycentric_coords(const Mesh& mesh, uint32_t face, const Vec3& point);

Vec3 point_from_barycentric(const Mesh& mesh, const SurfaceSample& sample);

/// Renormalizes a barycentric triple after clamping negative weights to zero.
std::array<double, 3> clamp_barycentric(std::array<double, 3> bary);

/// Axis-aligned bounding box diagonal length.
double bounding_diagonal(const Mesh& mesh);

/// Unique undirected edges (i < j), sorted.
std::vector<std::array<uint32_t, 2>> unique_edges(const Mesh& mesh);

}  // namespace meshfeat
