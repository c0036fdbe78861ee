#include "meshfeat/bvh.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace meshfeat {

namespace {

constexpr int kBins = 12;
constexpr uint32_t kLeafSize = 4;
constexpr int kMaxDepth = 64;

struct RayBoxData {
  Vec3 inv;
  Vec3 origin;
};

RayBoxData make_box_data(const Ray& ray) {
  RayBoxData d;
  d.origin = ray.origin;
  for (int k = 0; k < 3; ++k) {
    // A zero component would turn (lo - o) * inf into NaN when lo == o.
    const double c = ray.dir[k] == 0.0 ? 1e-300 : ray.dir[k];
    d.inv[k] = 1.0 / c;
  }
  return d;
}

bool hit_box(const Aabb& b, const RayBoxData& d, double t_max, double* t_near) {
  double lo = 0.0, hi = t_max;
  for (int k = 0; k < 3; ++k) {
    double t0 = (b.lo[k] - d.origin[k]) * d.inv[k];
    double t1 = (b.hi[k] - d.origin[k]) * d.inv[k];
    if (t0 > t1) std::swap(t0, t1);
    lo = std::max(lo, t0);
    hi = std::min(hi, t1);
  }
  *t_near = lo;
  return lo <= hi;
}

}  // namespace

double Aabb::surface_area() const {
  const Vec3 e = (hi - lo).cwiseMax(0.0);
  return 2.0 * (e.x() * e.y() + e.y() * e.z() + e.z() * e.x());
}

std::optional<std::array<double, 3>> intersect_triangle(const Ray& ray, const Vec3& p0, const Vec3& p1,
                                                        const Vec3& p2) {
  const Vec3 e1 = p1 - p0;
  const Vec3 e2 = p2 - p0;
  const Vec3 pvec = ray.dir.cross(e2);
  const double det = e1.dot(pvec);
  if (std::abs(det) <= 1e-15 * e1.norm() * e2.norm()) return std::nullopt;
  const double inv_det = 1.0 / det;
  const Vec3 tvec = ray.origin - p0;
  const double u = tvec.dot(pvec) * inv_det;
  if (u < 0.0 || u > 1.0) return std::nullopt;
  const Vec3 qvec = tvec.cross(e1);
  const double v = ray.dir.dot(qvec) * inv_det;
  if (v < 0.0 || u + v > 1.0) return std::nullopt;
  const double t = e2.dot(qvec) * inv_det;
  if (!(t > kMinHitDistance)) return std::nullopt;
  return std::array<double, 3>{t, u, v};
}

namespace {

Hit make_hit(uint32_t face, const std::array<double, 3>& tuv) {
  Hit h;
  h.t = tuv[0];
  h.sample.face = face;
  h.sample.bary = clamp_barycentric({1.0 - tuv[1] - tuv[2], tuv[1], tuv[2]});
  return h;
}

bool closer(double t, uint32_t face, const std::optional<Hit>& best) {
  return !best || t < best->t || (t == best->t && face < best->sample.face);
}

}  // namespace

std::optional<Hit> intersect_brute_force(const Mesh& mesh, const Ray& ray) {
  std::optional<Hit> best;
  for (uint32_t f = 0; f < mesh.num_faces(); ++f) {
    const Face& tri = mesh.faces[f];
    const auto tuv = intersect_triangle(ray, mesh.vertices[tri[0]], mesh.vertices[tri[1]], mesh.vertices[tri[2]]);
    if (tuv && closer((*tuv)[0], f, best)) best = make_hit(f, *tuv);
  }
  return best;
}

Bvh::Bvh(const Mesh& mesh) : mesh_(&mesh) {
  const size_t nf = mesh.num_faces();
  order_.resize(nf);
  face_boxes_.resize(nf);
  centroids_.resize(nf);
  const double pad = 1e-9 * std::max(bounding_diagonal(mesh), 1e-30);
  for (uint32_t f = 0; f < nf; ++f) {
    order_[f] = f;
    Aabb b;
    for (uint32_t v : mesh.faces[f]) b.extend(mesh.vertices[v]);
    b.lo.array() -= pad;
    b.hi.array() += pad;
    face_boxes_[f] = b;
    centroids_[f] = 0.5 * (b.lo + b.hi);
  }
  nodes_.reserve(2 * nf);
  if (nf > 0) build(0, static_cast<uint32_t>(nf), 0);
  // Only needed during construction.
  centroids_.clear();
  centroids_.shrink_to_fit();
}

uint32_t Bvh::build(uint32_t first, uint32_t count, int depth) {
  const uint32_t index = static_cast<uint32_t>(nodes_.size());
  nodes_.emplace_back();
  Aabb box, cbox;
  for (uint32_t i = first; i < first + count; ++i) {
    box.extend(face_boxes_[order_[i]]);
    cbox.extend(centroids_[order_[i]]);
  }
  nodes_[index].box = box;
  if (count <= kLeafSize || depth >= kMaxDepth) {
    nodes_[index].first = first;
    nodes_[index].count = count;
    return index;
  }

  int best_axis = -1;
  int best_split = 0;
  double best_cost = std::numeric_limits<double>::infinity();
  for (int axis = 0; axis < 3; ++axis) {
    const double lo = cbox.lo[axis], extent = cbox.hi[axis] - cbox.lo[axis];
    if (!(extent > 0)) continue;
    Aabb bins[kBins];
    uint32_t counts[kBins] = {};
    for (uint32_t i = first; i < first + count; ++i) {
      const uint32_t f = order_[i];
      int b = static_cast<int>(kBins * (centroids_[f][axis] - lo) / extent);
      b = std::clamp(b, 0, kBins - 1);
      bins[b].extend(face_boxes_[f]);
      ++counts[b];
    }
    double right_area[kBins];
    uint32_t right_count[kBins];
    Aabb acc;
    uint32_t n = 0;
    for (int b = kBins - 1; b > 0; --b) {
      acc.extend(bins[b]);
      n += counts[b];
      right_area[b] = acc.surface_area();
      right_count[b] = n;
    }
    acc = Aabb{};
    n = 0;
    for (int b = 0; b < kBins - 1; ++b) {
      acc.extend(bins[b]);
      n += counts[b];
      if (n == 0 || right_count[b + 1] == 0) continue;
      const double cost = n * acc.surface_area() + right_count[b + 1] * right_area[b + 1];
      if (cost < best_cost) {
        best_cost = cost;
        best_axis = axis;
        best_split = b;
      }
    }
  }

  uint32_t mid;
  if (best_axis < 0) {
    // All centroids coincide: split the range in half.
    mid = first + count / 2;
  } else {
    const double lo = cbox.lo[best_axis], extent = cbox.hi[best_axis] - cbox.lo[best_axis];
    auto it = std::partition(order_.begin() + first, order_.begin() + first + count, [&](uint32_t f) {
      int b = static_cast<int>(kBins * (centroids_[f][best_axis] - lo) / extent);
      return std::clamp(b, 0, kBins - 1) <= best_split;
    });
    mid = static_cast<uint32_t>(it - order_.begin());
    if (mid == first || mid == first + count) mid = first + count / 2;
  }
  const uint32_t left = build(first, mid - first, depth + 1);
  const uint32_t right = build(mid, first + count - mid, depth + 1);
  nodes_[index].first = left;
  nodes_[index].count = 0;
  nodes_[index].right = right;
  return index;
}

std::optional<Hit> Bvh::intersect(const Ray& ray) const {
  std::optional<Hit> best;
  if (nodes_.empty()) return best;
  const RayBoxData d = make_box_data(ray);
  uint32_t stack[128];
  int top = 0;
  stack[top++] = 0;
  while (top > 0) {
    const Node& node = nodes_[stack[--top]];
    double t_near;
    const double t_max = best ? best->t : std::numeric_limits<double>::infinity();
    if (!hit_box(node.box, d, t_max, &t_near)) continue;
    if (node.count > 0) {
      for (uint32_t i = node.first; i < node.first + node.count; ++i) {
        const uint32_t f = order_[i];
        const Face& tri = mesh_->faces[f];
        const auto tuv =
            intersect_triangle(ray, mesh_->vertices[tri[0]], mesh_->vertices[tri[1]], mesh_->vertices[tri[2]]);
        if (tuv && closer((*tuv)[0], f, best)) best = make_hit(f, *tuv);
      }
      continue;
    }
    // Visit the nearer child first.
    double tl, tr;
    const bool hl = hit_box(nodes_[node.first].box, d, t_max, &tl);
    const bool hr = hit_box(nodes_[node.right].box, d, t_max, &tr);
    if (hl && hr) {
      if (tl <= tr) {
        stack[top++] = node.right;
        stack[top++] = node.first;
      } else {
        stack[top++] = node.first;
        stack[top++] = node.right;
      }
    } else if (hl) {
      stack[top++] = node.first;
    } else if (hr) {
      stack[top++] = node.right;
    }
  }
  return best;
}

bool Bvh::occluded(const Ray& ray, double t_max) const {
  if (nodes_.empty()) return false;
  const RayBoxData d = make_box_data(ray);
  uint32_t stack[128];
  int top = 0;
  stack[top++] = 0;
  while (top > 0) {
    const Node& node = nodes_[stack[--top]];
    double t_near;
    if (!hit_box(node.box, d, t_max, &t_near)) continue;
    if (node.count == 0) {
      stack[top++] = node.right;
      stack[top++] = node.first;
      continue;
    }
    for (uint32_t i = node.first; i < node.first + node.count; ++i) {
      const Face& tri = mesh_->faces[order_[i]];
      const auto tuv =
          intersect_triangle(ray, mesh_->vertices[tri[0]], mesh_->vertices[tri[1]], mesh_->vertices[tri[2]]);
      if (tuv && (*tuv)[0] < t_max) return true;
    }
  }
  return false;
}

}  // namespace meshfeat
