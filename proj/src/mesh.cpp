#include "meshfeat/mesh.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include "meshfeat/errors.hpp"

namespace meshfeat {

namespace {

std::string line_error(const std::string& what, size_t line) {
  return what + ", line " + std::to_string(line);
}

// Parses the vertex index of an OBJ face token ("7", "7/2", "7//3", "-1").
// Returns a 0-based index; relative (negative) indices are resolved against `count`.
long parse_face_index(std::string_view token, size_t count, size_t line) {
  auto slash = token.find('/');
  if (slash != std::string_view::npos) token = token.substr(0, slash);
  long value = 0;
  auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
  if (ec != std::errc() || ptr != token.data() + token.size() || value == 0) {
    throw DataError(line_error("malformed face index '" + std::string(token) + "'", line));
  }
  return value > 0 ? value - 1 : static_cast<long>(count) + value;
}

}  // namespace

void validate_indices(const Mesh& mesh) {
  if (mesh.vertices.size() < 3) throw DataError("mesh needs at least 3 vertices");
  if (mesh.faces.empty()) throw DataError("mesh has no faces");
  for (size_t f = 0; f < mesh.faces.size(); ++f) {
    const Face& t = mesh.faces[f];
    for (uint32_t i : t) {
      if (i >= mesh.vertices.size()) {
        throw DataError("face " + std::to_string(f) + ": index out of range");
      }
    }
    if (t[0] == t[1] || t[1] == t[2] || t[0] == t[2]) {
      throw DataError("face " + std::to_string(f) + " repeats a vertex index");
    }
  }
}

void validate(const Mesh& mesh) {
  validate_indices(mesh);
  std::vector<size_t> degenerate;
  for (size_t f = 0; f < mesh.faces.size(); ++f) {
    if (!(face_area(mesh, static_cast<uint32_t>(f)) > 0.0)) degenerate.push_back(f);
  }
  if (!degenerate.empty()) {
    std::ostringstream msg;
    msg << degenerate.size() << " degenerate (zero-area) face(s):";
    for (size_t i = 0; i < std::min<size_t>(degenerate.size(), 20); ++i) msg << ' ' << degenerate[i];
    if (degenerate.size() > 20) msg << " ...";
    throw DataError(msg.str());
  }
}

Mesh parse_obj(const std::string& text) {
  Mesh mesh;
  std::vector<size_t> face_lines;
  std::istringstream in(text);
  std::string line;
  size_t line_no = 0;
  std::vector<long> poly;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream ls(line);
    std::string tag;
    if (!(ls >> tag) || tag[0] == '#') continue;
    if (tag == "v") {
      double x, y, z;
      if (!(ls >> x >> y >> z)) throw DataError(line_error("malformed vertex record", line_no));
      mesh.vertices.emplace_back(x, y, z);
    } else if (tag == "f") {
      poly.clear();
      std::string token;
      while (ls >> token) poly.push_back(parse_face_index(token, mesh.vertices.size(), line_no));
      if (poly.size() < 3) throw DataError(line_error("face with fewer than 3 vertices", line_no));
      for (long idx : poly) {
        if (idx < 0) throw DataError(line_error("index out of range", line_no));
      }
      // Fan triangulation around the first corner.
      for (size_t k = 1; k + 1 < poly.size(); ++k) {
        mesh.faces.push_back({static_cast<uint32_t>(poly[0]), static_cast<uint32_t>(poly[k]),
                              static_cast<uint32_t>(poly[k + 1])});
        face_lines.push_back(line_no);
      }
    }
    // vt, vn, o, g, s, usemtl, mtllib: ignored.
  }
  for (size_t f = 0; f < mesh.faces.size(); ++f) {
    for (uint32_t i : mesh.faces[f]) {
      if (i >= mesh.vertices.size()) throw DataError(line_error("index out of range", face_lines[f]));
    }
  }
  validate(mesh);
  return mesh;
}

Mesh load_obj(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return parse_obj(buf.str());
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

void save_obj(const Mesh& mesh, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (const Vec3& v : mesh.vertices) out << "v " << v.x() << ' ' << v.y() << ' ' << v.z() << '\n';
  for (const Face& f : mesh.faces) out << "f " << f[0] + 1 << ' ' << f[1] + 1 << ' ' << f[2] + 1 << '\n';
  if (!out) throw DataError("write failed: " + path.string());
}

Vec3 face_normal(const Mesh& mesh, uint32_t face) {
  const Face& f = mesh.faces[face];
  const Vec3& a = mesh.vertices[f[0]];
  Vec3 n = (mesh.vertices[f[1]] - a).cross(mesh.vertices[f[2]] - a);
  double len = n.norm();
  return len > 0.0 ? Vec3(n / len) : Vec3(0, 0, 1);
}

double face_area(const Mesh& mesh, uint32_t face) {
  const Face& f = mesh.faces[face];
  const Vec3& a = mesh.vertices[f[0]];
  return 0.5 * (mesh.vertices[f[1]] - a).cross(mesh.vertices[f[2]] - a).norm();
}

std::vector<Vec3> vertex_normals(const Mesh& mesh) {
  std::vector<Vec3> acc(mesh.vertices.size(), Vec3::Zero());
  for (const Face& f : mesh.faces) {
    const Vec3& a = mesh.vertices[f[0]];
    // Unnormalized cross product has length 2*area: area weighting for free.
    Vec3 n = (mesh.vertices[f[1]] - a).cross(mesh.vertices[f[2]] - a);
    for (uint32_t i : f) acc[i] += n;
  }
  for (Vec3& n : acc) {
    double len = n.norm();
    n = len > 0.0 ? Vec3(n / len) : Vec3(0, 0, 1);
  }
  return acc;
}

std::array<double, 3> clamp_barycentric(std::array<double, 3> bary) {
  double sum = 0.0;
  for (double& l : bary) {
    l = std::clamp(l, 0.0, 1.0);
    sum += l;
  }
  if (sum <= 0.0) return {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
  for (double& l : bary) l /= sum;
  return bary;
}

std::array<double, 3> barycentric_coords(const Mesh& mesh, uint32_t face, const Vec3& point) {
  if (face >= mesh.faces.size()) throw DataError("face index out of range");
  const Face& f = mesh.faces[face];
  const Vec3& a = mesh.vertices[f[0]];
  const Vec3 e0 = mesh.vertices[f[1]] - a;
  const Vec3 e1 = mesh.vertices[f[2]] - a;
  const Vec3 n = e0.cross(e1);
  const double n2 = n.squaredNorm();
  const double scale = std::max(e0.squaredNorm(), e1.squaredNorm());
  if (!(n2 > 1e-24 * scale * scale) || scale == 0.0) {
    throw DataError("degenerate triangle " + std::to_string(face));
  }
  // Project onto the triangle plane, then solve p = w1*e0 + w2*e1 via cross products.
  Vec3 p = point - a;
  p -= n * (p.dot(n) / n2);
  const double w1 = p.cross(e1).dot(n) / n2;
  const double w2 = e0.cross(p).dot(n) / n2;
  return clamp_barycentric({1.0 - w1 - w2, w1, w2});
}

Vec3 point_from_barycentric(const Mesh& mesh, const SurfaceSample& sample) {
  if (sample.face >= mesh.faces.size()) throw DataError("face index out of range");
  const Face& f = mesh.faces[sample.face];
  return sample.bary[0] * mesh.vertices[f[0]] + sample.bary[1] * mesh.vertices[f[1]] +
         sample.bary[2] * mesh.vertices[f[2]];
}

double bounding_diagonal(const Mesh& mesh) {
  if (mesh.vertices.empty()) return 0.0;
  Vec3 lo = mesh.vertices[0], hi = mesh.vertices[0];
  for (const Vec3& v : mesh.vertices) {
    lo = lo.cwiseMin(v);
    hi = hi.cwiseMax(v);
  }
  return (hi - lo).norm();
}

std::vector<std::array<uint32_t, 2>> unique_edges(const Mesh& mesh) {
  std::vector<std::array<uint32_t, 2>> edges;
  edges.reserve(mesh.faces.size() * 3);
  for (const Face& f : mesh.faces) {
    for (int k = 0; k < 3; ++k) {
      uint32_t i = f[k], j = f[(k + 1) % 3];
      edges.push_back({std::min(i, j), std::max(i, j)});
    }
  }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  return edges;
}

}  // namespace meshfeat
