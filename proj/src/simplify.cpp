#include "meshfeat/simplify.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <queue>

#include <Eigen/Eigenvalues>

#include "meshfeat/errors.hpp"

namespace meshfeat {

Quadric plane_quadric(const Vec3& unit_normal, double offset) {
  Eigen::Vector4d p(unit_normal.x(), unit_normal.y(), unit_normal.z(), offset);
  return p * p.transpose();
}

std::vector<Quadric> vertex_quadrics(const Mesh& mesh) {
  std::vector<Quadric> q(mesh.num_vertices(), Quadric::Zero());
  struct EdgeUse {
    uint32_t a, b, face;
  };
  std::vector<EdgeUse> uses;
  uses.reserve(mesh.num_faces() * 3);
  for (uint32_t f = 0; f < mesh.num_faces(); ++f) {
    const Face& t = mesh.faces[f];
    const Vec3 n = face_normal(mesh, f);
    const Quadric k = plane_quadric(n, -n.dot(mesh.vertices[t[0]]));
    for (uint32_t i : t) q[i] += k;
    for (int e = 0; e < 3; ++e) {
      uint32_t a = t[e], b = t[(e + 1) % 3];
      uses.push_back({std::min(a, b), std::max(a, b), f});
    }
  }
  std::sort(uses.begin(), uses.end(), [](const EdgeUse& x, const EdgeUse& y) {
    return std::tie(x.a, x.b, x.face) < std::tie(y.a, y.b, y.face);
  });
  for (size_t i = 0; i < uses.size();) {
    size_t j = i;
    while (j < uses.size() && uses[j].a == uses[i].a && uses[j].b == uses[i].b) ++j;
    if (j - i == 1) {
      // Boundary edge: plane through the edge, perpendicular to its face.
      const Vec3& pa = mesh.vertices[uses[i].a];
      const Vec3 e = mesh.vertices[uses[i].b] - pa;
      Vec3 n = e.cross(face_normal(mesh, uses[i].face));
      if (n.norm() > 0.0) {
        n.normalize();
        const Quadric k = kBoundaryQuadricWeight * plane_quadric(n, -n.dot(pa));
        q[uses[i].a] += k;
        q[uses[i].b] += k;
      }
    }
    i = j;
  }
  return q;
}

double quadric_cost(const Quadric& q, const Vec3& p) {
  Eigen::Vector4d v(p.x(), p.y(), p.z(), 1.0);
  return std::max(0.0, v.dot(q * v));
}

Vec3 optimal_collapse_position(const Quadric& q, const Vec3& a, const Vec3& b) {
  const Eigen::Matrix3d A = q.topLeftCorner<3, 3>();
  const Vec3 rhs = -q.topRightCorner<3, 1>();
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(A);
  const Vec3 lambda = eig.eigenvalues();  // ascending
  if (lambda(0) > 0.0 && lambda(2) / lambda(0) <= 1e12) {
    const Eigen::Matrix3d& V = eig.eigenvectors();
    return V * (V.transpose() * rhs).cwiseQuotient(lambda);
  }
  const Vec3 mid = 0.5 * (a + b);
  Vec3 best = a;
  double best_cost = quadric_cost(q, a);
  for (const Vec3& c : {b, mid}) {
    double cost = quadric_cost(q, c);
    if (cost < best_cost) {
      best_cost = cost;
      best = c;
    }
  }
  return best;
}

namespace {

struct Candidate {
  double cost;
  uint32_t a, b;  // a < b; a survives
  uint32_t version_a, version_b;
  bool penalized;
  Vec3 position;
};

struct CandidateGreater {
  bool operator()(const Candidate& x, const Candidate& y) const {
    return std::tie(x.cost, x.a, x.b) > std::tie(y.cost, y.a, y.b);
  }
};

class EdgeCollapser {
 public:
  explicit EdgeCollapser(const Mesh& mesh)
      : pos_(mesh.vertices),
        quadric_(vertex_quadrics(mesh)),
        faces_(mesh.faces),
        face_alive_(mesh.num_faces(), 1),
        vert_faces_(mesh.num_vertices()),
        vert_alive_(mesh.num_vertices(), 1),
        version_(mesh.num_vertices(), 0),
        parent_(mesh.num_vertices()),
        alive_count_(mesh.num_vertices()) {
    for (uint32_t f = 0; f < faces_.size(); ++f) {
      for (uint32_t v : faces_[f]) vert_faces_[v].push_back(f);
    }
    for (uint32_t v = 0; v < parent_.size(); ++v) parent_[v] = v;
    const double diag = bounding_diagonal(mesh);
    penalty_ = 1e9 * std::max(diag * diag, 1e-30);
    area_eps_ = 1e-14 * std::max(diag * diag, 1e-300);
    for (const auto& e : unique_edges(mesh)) push(e[0], e[1], false);
  }

  void run(size_t target) {
    size_t collapses_since_retry = 0;
    while (alive_count_ > target) {
      if (heap_.empty()) {
        if (deferred_.empty() || collapses_since_retry == 0) {
          stalled_ = true;
          break;
        }
        for (const auto& [a, b] : deferred_) {
          if (vert_alive_[a] && vert_alive_[b]) push(a, b, false);
        }
        deferred_.clear();
        collapses_since_retry = 0;
        continue;
      }
      Candidate c = heap_.top();
      heap_.pop();
      if (!vert_alive_[c.a] || !vert_alive_[c.b]) continue;
      if (c.version_a != version_[c.a] || c.version_b != version_[c.b]) continue;
      if (!shares_face(c.a, c.b)) continue;
      if (!collapse_is_valid(c.a, c.b, c.position)) {
        if (!c.penalized) {
          c.penalized = true;
          c.cost += penalty_;
          heap_.push(c);
        } else {
          deferred_.emplace_back(c.a, c.b);
        }
        continue;
      }
      collapse(c.a, c.b, c.position);
      ++collapses_since_retry;
    }
  }

  SimplifyResult result() {
    SimplifyResult out;
    out.stalled = stalled_;
    out.log = std::move(log_);
    std::vector<uint32_t> compact(pos_.size(), UINT32_MAX);
    for (uint32_t v = 0; v < pos_.size(); ++v) {
      if (vert_alive_[v]) {
        compact[v] = static_cast<uint32_t>(out.mesh.vertices.size());
        out.mesh.vertices.push_back(pos_[v]);
      }
    }
    out.map.resize(pos_.size());
    for (uint32_t v = 0; v < pos_.size(); ++v) out.map[v] = compact[find(v)];
    for (uint32_t f = 0; f < faces_.size(); ++f) {
      if (!face_alive_[f]) continue;
      const Face& t = faces_[f];
      out.mesh.faces.push_back({compact[t[0]], compact[t[1]], compact[t[2]]});
    }
    return out;
  }

 private:
  uint32_t find(uint32_t v) {
    while (parent_[v] != v) {
      parent_[v] = parent_[parent_[v]];
      v = parent_[v];
    }
    return v;
  }

  void push(uint32_t a, uint32_t b, bool penalized) {
    if (a > b) std::swap(a, b);
    const Quadric q = quadric_[a] + quadric_[b];
    Candidate c;
    c.position = optimal_collapse_position(q, pos_[a], pos_[b]);
    c.cost = quadric_cost(q, c.position) + (penalized ? penalty_ : 0.0);
    c.a = a;
    c.b = b;
    c.version_a = version_[a];
    c.version_b = version_[b];
    c.penalized = penalized;
    heap_.push(c);
  }

  void compact_faces(uint32_t v) {
    auto& fs = vert_faces_[v];
    fs.erase(std::remove_if(fs.begin(), fs.end(), [&](uint32_t f) { return !face_alive_[f]; }),
             fs.end());
  }

  static bool contains(const Face& t, uint32_t v) { return t[0] == v || t[1] == v || t[2] == v; }

  bool shares_face(uint32_t a, uint32_t b) const {
    for (uint32_t f : vert_faces_[a]) {
      if (face_alive_[f] && contains(faces_[f], b)) return true;
    }
    return false;
  }

  std::vector<uint32_t> neighbors(uint32_t v) const {
    std::vector<uint32_t> out;
    for (uint32_t f : vert_faces_[v]) {
      if (!face_alive_[f]) continue;
      for (uint32_t u : faces_[f]) {
        if (u != v) out.push_back(u);
      }
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }

  int edge_face_count(uint32_t a, uint32_t b) const {
    int n = 0;
    for (uint32_t f : vert_faces_[a]) {
      if (face_alive_[f] && contains(faces_[f], b)) ++n;
    }
    return n;
  }

  bool is_boundary_vertex(uint32_t v) const {
    for (uint32_t u : neighbors(v)) {
      if (edge_face_count(v, u) == 1) return true;
    }
    return false;
  }

  bool collapse_is_valid(uint32_t a, uint32_t b, const Vec3& p) const {
    // Link condition: the only common neighbors are the apexes of the edge's faces.
    std::vector<uint32_t> apexes;
    for (uint32_t f : vert_faces_[a]) {
      if (!face_alive_[f] || !contains(faces_[f], b)) continue;
      for (uint32_t u : faces_[f]) {
        if (u != a && u != b) apexes.push_back(u);
      }
    }
    std::sort(apexes.begin(), apexes.end());
    const auto na = neighbors(a), nb = neighbors(b);
    std::vector<uint32_t> common;
    std::set_intersection(na.begin(), na.end(), nb.begin(), nb.end(), std::back_inserter(common));
    if (common != apexes) return false;
    if (apexes.size() >= 2 && is_boundary_vertex(a) && is_boundary_vertex(b)) return false;

    // Faces that survive must not flip by more than 90 degrees, collapse to zero
    // area, or duplicate an existing face.
    for (uint32_t src : {a, b}) {
      const uint32_t other = src == a ? b : a;
      for (uint32_t f : vert_faces_[src]) {
        if (!face_alive_[f] || contains(faces_[f], other)) continue;
        const Face& t = faces_[f];
        Vec3 before[3], after[3];
        for (int k = 0; k < 3; ++k) {
          before[k] = pos_[t[k]];
          after[k] = (t[k] == src) ? p : pos_[t[k]];
        }
        const Vec3 n0 = (before[1] - before[0]).cross(before[2] - before[0]);
        const Vec3 n1 = (after[1] - after[0]).cross(after[2] - after[0]);
        if (n1.norm() <= area_eps_) return false;
        if (n0.dot(n1) < 0.0) return false;
        if (src == b && duplicates_face_of_a(t, a, b)) return false;
      }
    }
    return true;
  }

  bool duplicates_face_of_a(const Face& t, uint32_t a, uint32_t b) const {
    uint32_t x = UINT32_MAX, y = UINT32_MAX;
    for (uint32_t u : t) {
      if (u == b) continue;
      (x == UINT32_MAX ? x : y) = u;
    }
    for (uint32_t f : vert_faces_[a]) {
      if (face_alive_[f] && contains(faces_[f], x) && contains(faces_[f], y)) return true;
    }
    return false;
  }

  void collapse(uint32_t a, uint32_t b, const Vec3& p) {
    pos_[a] = p;
    quadric_[a] += quadric_[b];
    for (uint32_t f : vert_faces_[b]) {
      if (!face_alive_[f]) continue;
      Face& t = faces_[f];
      if (contains(t, a)) {
        face_alive_[f] = 0;
        continue;
      }
      for (uint32_t& u : t) {
        if (u == b) u = a;
      }
      vert_faces_[a].push_back(f);
    }
    vert_faces_[b].clear();
    vert_alive_[b] = 0;
    parent_[b] = a;
    --alive_count_;
    ++version_[a];
    log_.push_back({a, b});
    compact_faces(a);
    for (uint32_t n : neighbors(a)) {
      compact_faces(n);
      push(a, n, false);
    }
  }

  std::vector<Vec3> pos_;
  std::vector<Quadric> quadric_;
  std::vector<Face> faces_;
  std::vector<uint8_t> face_alive_;
  std::vector<std::vector<uint32_t>> vert_faces_;
  std::vector<uint8_t> vert_alive_;
  std::vector<uint32_t> version_;
  std::vector<uint32_t> parent_;
  std::vector<Collapse> log_;
  std::vector<std::pair<uint32_t, uint32_t>> deferred_;
  std::priority_queue<Candidate, std::vector<Candidate>, CandidateGreater> heap_;
  size_t alive_count_;
  double penalty_ = 0.0;
  double area_eps_ = 0.0;
  bool stalled_ = false;
};

}  // namespace

SimplifyResult simplify_to_count(const Mesh& mesh, size_t target_vertices) {
  if (target_vertices < 3) throw DataError("simplification target must be at least 3 vertices");
  if (target_vertices > mesh.num_vertices()) {
    throw DataError("simplification target exceeds vertex count");
  }
  validate_indices(mesh);
  EdgeCollapser collapser(mesh);
  collapser.run(target_vertices);
  return collapser.result();
}

size_t target_vertex_count(double ratio, size_t original_vertices) {
  return static_cast<size_t>(std::llround(ratio * static_cast<double>(original_vertices)));
}

Hierarchy build_hierarchy(const Mesh& mesh, const std::vector<double>& resolutions) {
  if (resolutions.empty() || resolutions.front() != 1.0) {
    throw DataError("resolutions must start at 1");
  }
  for (size_t i = 0; i < resolutions.size(); ++i) {
    if (!(resolutions[i] > 0.0 && resolutions[i] <= 1.0)) {
      throw DataError("resolutions must lie in (0, 1]");
    }
    if (i > 0 && resolutions[i] > resolutions[i - 1]) {
      throw DataError("resolutions must be sorted in descending order");
    }
  }
  validate_indices(mesh);
  Hierarchy h;
  h.resolutions = resolutions;
  h.meshes.push_back(mesh);
  std::vector<uint32_t> identity(mesh.num_vertices());
  for (uint32_t v = 0; v < identity.size(); ++v) identity[v] = v;
  h.maps.push_back(std::move(identity));

  for (size_t i = 1; i < resolutions.size(); ++i) {
    const Mesh& prev = h.meshes.back();
    size_t target = std::max<size_t>(3, target_vertex_count(resolutions[i], mesh.num_vertices()));
    target = std::min(target, prev.num_vertices());
    SimplifyResult level = simplify_to_count(prev, target);
    if (level.stalled) {
      std::cerr << "warning: decimation stalled at " << level.mesh.num_vertices()
                << " vertices (target " << target << ")\n";
    }
    std::vector<uint32_t> map(mesh.num_vertices());
    const auto& prev_map = h.maps.back();
    for (size_t v = 0; v < map.size(); ++v) map[v] = level.map[prev_map[v]];
    h.meshes.push_back(std::move(level.mesh));
    h.maps.push_back(std::move(map));
  }
  return h;
}

}  // namespace meshfeat
