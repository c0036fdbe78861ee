#pragma once

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <vector>

#include "meshfeat/brdf.hpp"
#include "meshfeat/mesh.hpp"
#include "meshfeat/synth.hpp"
#include "test_support.hpp"

// Independent reference implementations shared by the unit tests and the acceptance suite.
namespace meshfeat::oracle {

// Raised centre with nine rim vertices at uneven radii, so edge costs are distinct.
inline Mesh fan_mesh() {
  Mesh m;
  m.vertices.emplace_back(0.0, 0.0, 0.3);
  const double radii[9] = {1.0, 1.3, 0.8, 1.1, 0.95, 1.45, 0.7, 1.2, 1.05};
  for (int k = 0; k < 9; ++k) {
    const double a = 2 * M_PI * k / 9 + 0.07 * k * k;
    m.vertices.emplace_back(radii[k] * std::cos(a), radii[k] * std::sin(a), 0.02 * ((k * 7) % 5));
  }
  for (uint32_t k = 1; k <= 9; ++k) m.faces.push_back({0, k, k % 9 + 1});
  return m;
}

struct CollapseChoice {
  uint32_t a, b;
  double cost;
};

// Exhaustive minimal-quadric collapse, written from the definitions: squared plane
// distances of incident faces plus a 1e3-weighted plane along each boundary edge.
inline CollapseChoice brute_force_collapse(const Mesh& m) {
  std::vector<Eigen::Matrix4d> q(m.num_vertices(), Eigen::Matrix4d::Zero());
  std::map<std::pair<uint32_t, uint32_t>, std::vector<uint32_t>> edge_faces;
  std::vector<Eigen::Vector4d> planes;
  for (uint32_t f = 0; f < m.num_faces(); ++f) {
    const auto& t = m.faces[f];
    const Vec3 n = (m.vertices[t[1]] - m.vertices[t[0]]).cross(m.vertices[t[2]] - m.vertices[t[0]]).normalized();
    planes.emplace_back(n.x(), n.y(), n.z(), -n.dot(m.vertices[t[1]]));
    for (uint32_t i : t) q[i] += planes.back() * planes.back().transpose();
    for (int e = 0; e < 3; ++e) {
      edge_faces[{std::min(t[e], t[(e + 1) % 3]), std::max(t[e], t[(e + 1) % 3])}].push_back(f);
    }
  }
  for (const auto& [edge, faces] : edge_faces) {
    if (faces.size() != 1) continue;
    const Vec3 d = m.vertices[edge.second] - m.vertices[edge.first];
    const Vec3 fn = planes[faces[0]].head<3>();
    const Vec3 n = d.cross(fn).normalized();
    const Eigen::Vector4d p(n.x(), n.y(), n.z(), -n.dot(m.vertices[edge.second]));
    q[edge.first] += 1e3 * p * p.transpose();
    q[edge.second] += 1e3 * p * p.transpose();
  }
  auto cost_at = [](const Eigen::Matrix4d& k, const Vec3& x) {
    const Eigen::Vector4d h(x.x(), x.y(), x.z(), 1.0);
    return std::max(0.0, double(h.transpose() * k * h));
  };
  CollapseChoice best{0, 0, std::numeric_limits<double>::infinity()};
  for (const auto& [edge, faces] : edge_faces) {
    const Eigen::Matrix4d k = q[edge.first] + q[edge.second];
    const Eigen::Matrix3d A = k.topLeftCorner<3, 3>();
    const Eigen::JacobiSVD<Eigen::Matrix3d> svd(A, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const auto s = svd.singularValues();
    double c;
    if (s(2) > 0 && s(0) / s(2) <= 1e12) {
      c = cost_at(k, svd.solve(-k.topRightCorner<3, 1>()));
    } else {
      const Vec3& pa = m.vertices[edge.first];
      const Vec3& pb = m.vertices[edge.second];
      c = std::min({cost_at(k, pa), cost_at(k, pb), cost_at(k, 0.5 * (pa + pb))});
    }
    if (c < best.cost) best = {edge.first, edge.second, c};
  }
  return best;
}

inline std::vector<Mesh> simplifier_meshes() {
  return {icosphere(3), testkit::bumpy_sphere(3, 0.05, 2), testkit::height_grid(20, 20, 0.05, 4),
          testkit::torus(24, 12), testkit::height_grid(30, 25, 0.2, 9)};
}

// Scalar Disney BRDF written in the tangent-frame (anisotropic) form with ax = ay,
// evaluated one colour channel at a time.

inline double sqr(double x) { return x * x; }
inline double schlick(double u) { return std::pow(std::clamp(1 - u, 0.0, 1.0), 5); }
inline double lerp(double a, double b, double t) { return (1 - t) * a + t * b; }

inline double gtr1(double ndoth, double a) {
  if (a >= 1) return 1 / M_PI;
  const double a2 = a * a;
  return (a2 - 1) / (M_PI * std::log(a2) * (1 + (a2 - 1) * ndoth * ndoth));
}

inline double gtr2_aniso(double ndoth, double hdotx, double hdoty, double ax, double ay) {
  return 1 / (M_PI * ax * ay * sqr(sqr(hdotx / ax) + sqr(hdoty / ay) + ndoth * ndoth));
}

inline double smith_aniso(double ndotv, double vdotx, double vdoty, double ax, double ay) {
  return 1 / (ndotv + std::sqrt(sqr(vdotx * ax) + sqr(vdoty * ay) + sqr(ndotv)));
}

inline double smith_ggx(double ndotv, double alpha) {
  const double a = alpha * alpha, b = ndotv * ndotv;
  return 1 / (ndotv + std::sqrt(a + b - a * b));
}

inline Rgb<double> brdf(const DisneyParams<double>& p, const Vec3& n, const Vec3& l, const Vec3& v) {
  const double ndotl = n.dot(l), ndotv = n.dot(v);
  if (ndotl <= 0 || ndotv <= 0) return {0, 0, 0};
  const Vec3 x = (std::abs(n.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY()).cross(n).normalized();
  const Vec3 y = n.cross(x);
  const Vec3 h = (l + v).normalized();
  const double ndoth = n.dot(h), ldoth = l.dot(h);

  double lin[3];
  for (int c = 0; c < 3; ++c) lin[c] = std::pow(p[c], 2.2);
  const double lum = 0.3 * lin[0] + 0.6 * lin[1] + 0.1 * lin[2];

  const double fl = schlick(ndotl), fv = schlick(ndotv), fh = schlick(ldoth);
  const double rough = p[kRoughness];
  const double fd90 = 0.5 + 2 * ldoth * ldoth * rough;
  const double fd = lerp(1, fd90, fl) * lerp(1, fd90, fv);
  const double fss90 = ldoth * ldoth * rough;
  const double fss = lerp(1, fss90, fl) * lerp(1, fss90, fv);
  const double ss = 1.25 * (fss * (1 / (ndotl + ndotv) - 0.5) + 0.5);

  const double ax = std::max(0.001, sqr(rough)), ay = ax;
  const double ds = gtr2_aniso(ndoth, h.dot(x), h.dot(y), ax, ay);
  const double gs = smith_aniso(ndotl, l.dot(x), l.dot(y), ax, ay) * smith_aniso(ndotv, v.dot(x), v.dot(y), ax, ay);

  const double dr = gtr1(ndoth, lerp(0.1, 0.001, p[kClearcoatGloss]));
  const double fr = lerp(0.04, 1.0, fh);
  const double gr = smith_ggx(ndotl, 0.25) * smith_ggx(ndotv, 0.25);

  Rgb<double> out;
  for (int c = 0; c < 3; ++c) {
    const double tint = lum > 0 ? lin[c] / lum : 1.0;
    const double spec0 = lerp(p[kSpecular] * 0.08 * lerp(1, tint, p[kSpecularTint]), lin[c], p[kMetallic]);
    const double sheen_col = lerp(1, tint, p[kSheenTint]);
    const double diffuse = (1 / M_PI) * lerp(fd, ss, p[kSubsurface]) * lin[c];
    const double sheen = fh * p[kSheen] * sheen_col;
    const double fs = lerp(spec0, 1, fh);
    out[c] = (diffuse + sheen) * (1 - p[kMetallic]) + gs * fs * ds + 0.25 * p[kClearcoat] * gr * fr * dr;
  }
  return out;
}


}  // namespace meshfeat::oracle
