#pragma once

#include <algorithm>
#include <array>
#include <cmath>

#include "meshfeat/dual.hpp"
#include "meshfeat/mesh.hpp"

namespace meshfeat {

inline constexpr int kDisneyParamCount = 12;

/// Parameter order used everywhere (network outputs, files, ground truth).
enum DisneyParam : int {
  kBaseR = 0,
  kBaseG,
  kBaseB,
  kSubsurface,
  kMetallic,
  kSpecular,
  kSpecularTint,
  kRoughness,
  kSheen,
  kSheenTint,
  kClearcoat,
  kClearcoatGloss,
};

template <class T>
using DisneyParams = std::array<T, kDisneyParamCount>;

template <class T>
using Rgb = std::array<T, 3>;

/// Cosines of the shading configuration; independent of the material.
struct BrdfGeometry {
  double n_dot_l = 0.0;
  double n_dot_v = 0.0;
  double n_dot_h = 0.0;
  double l_dot_h = 0.0;

  bool valid() const { return n_dot_l > 0.0 && n_dot_v > 0.0; }
};

inline BrdfGeometry brdf_geometry(const Vec3& n, const Vec3& l, const Vec3& v) {
  BrdfGeometry g;
  g.n_dot_l = n.dot(l);
  g.n_dot_v = n.dot(v);
  if (!g.valid()) return g;
  const Vec3 h = (l + v).normalized();
  g.n_dot_h = n.dot(h);
  g.l_dot_h = l.dot(h);
  return g;
}

namespace disney_detail {

inline double schlick_weight(double u) {
  const double m = std::clamp(1.0 - u, 0.0, 1.0);
  const double m2 = m * m;
  return m2 * m2 * m;
}

template <class T>
T mix(const T& a, const T& b, const T& t) {
  return a * (1.0 - t) + b * t;
}

template <class T>
T gtr1(double n_dot_h, const T& a) {
  using std::log;
  if (value_of(a) >= 1.0) return T(1.0 / M_PI);
  const T a2 = a * a;
  const T t = 1.0 + (a2 - 1.0) * (n_dot_h * n_dot_h);
  return (a2 - 1.0) / (M_PI * log(a2) * t);
}

template <class T>
T gtr2(double n_dot_h, const T& a) {
  const T a2 = a * a;
  const T t = 1.0 + (a2 - 1.0) * (n_dot_h * n_dot_h);
  return a2 / (M_PI * t * t);
}

template <class T>
T smith_g_ggx(double n_dot_v, const T& alpha) {
  using std::sqrt;
  const T a = alpha * alpha;
  const double b = n_dot_v * n_dot_v;
  return 1.0 / (n_dot_v + sqrt(a + b - a * b));
}

}  // namespace disney_detail

/// Isotropic Disney principled BRDF (diffuse with retro-reflection, Hanrahan-Krueger
/// subsurface blend, GGX specular with Smith masking, sheen, GTR1 clearcoat).
/// Returns 0 outside the upper hemisphere of either direction.
template <class T>
Rgb<T> disney_brdf(const DisneyParams<T>& p, const BrdfGeometry& g) {
  using namespace disney_detail;
  using std::pow;
  if (!g.valid()) return {T(0.0), T(0.0), T(0.0)};

  Rgb<T> cdlin;
  for (int c = 0; c < 3; ++c) cdlin[c] = pow(p[kBaseR + c], 2.2);
  const T cdlum = 0.3 * cdlin[0] + 0.6 * cdlin[1] + 0.1 * cdlin[2];
  Rgb<T> ctint;
  for (int c = 0; c < 3; ++c) ctint[c] = value_of(cdlum) > 0.0 ? cdlin[c] / cdlum : T(1.0);

  Rgb<T> cspec0, csheen;
  for (int c = 0; c < 3; ++c) {
    cspec0[c] = mix(p[kSpecular] * 0.08 * mix(T(1.0), ctint[c], p[kSpecularTint]), cdlin[c], p[kMetallic]);
    csheen[c] = mix(T(1.0), ctint[c], p[kSheenTint]);
  }

  const double fl = schlick_weight(g.n_dot_l);
  const double fv = schlick_weight(g.n_dot_v);
  const double fh = schlick_weight(g.l_dot_h);
  const T& roughness = p[kRoughness];

  const T fd90 = 0.5 + 2.0 * g.l_dot_h * g.l_dot_h * roughness;
  const T fd = mix(T(1.0), fd90, T(fl)) * mix(T(1.0), fd90, T(fv));

  const T fss90 = g.l_dot_h * g.l_dot_h * roughness;
  const T fss = mix(T(1.0), fss90, T(fl)) * mix(T(1.0), fss90, T(fv));
  const T ss = 1.25 * (fss * (1.0 / (g.n_dot_l + g.n_dot_v) - 0.5) + 0.5);

  T a = roughness * roughness;
  if (value_of(a) < 0.001) a = T(0.001);
  const T ds = gtr2(g.n_dot_h, a);
  const T gs = smith_g_ggx(g.n_dot_l, a) * smith_g_ggx(g.n_dot_v, a);

  const T dr = gtr1(g.n_dot_h, mix(T(0.1), T(0.001), p[kClearcoatGloss]));
  const double fr = 0.04 * (1.0 - fh) + fh;
  const double gr = value_of(smith_g_ggx(g.n_dot_l, 0.25)) * value_of(smith_g_ggx(g.n_dot_v, 0.25));

  const T diffuse_weight = (1.0 / M_PI) * mix(fd, ss, p[kSubsurface]);
  const T clearcoat = 0.25 * p[kClearcoat] * (gr * fr) * dr;
  Rgb<T> out;
  for (int c = 0; c < 3; ++c) {
    const T fs = mix(cspec0[c], T(1.0), T(fh));
    const T fsheen = fh * p[kSheen] * csheen[c];
    out[c] = (diffuse_weight * cdlin[c] + fsheen) * (1.0 - p[kMetallic]) + gs * fs * ds + clearcoat;
  }
  return out;
}

template <class T>
Rgb<T> disney_brdf(const DisneyParams<T>& p, const Vec3& n, const Vec3& l, const Vec3& v) {
  return disney_brdf(p, brdf_geometry(n, l, v));
}

/// Outgoing radiance under one directional light: f * L_i * visibility * max(n.l, 0).
template <class T>
Rgb<T> shade_directional(const DisneyParams<T>& p, const Vec3& n, const Vec3& v, const Vec3& l,
                         double intensity, bool occluded) {
  if (occluded || intensity == 0.0) return {T(0.0), T(0.0), T(0.0)};
  const BrdfGeometry g = brdf_geometry(n, l, v);
  if (!g.valid()) return {T(0.0), T(0.0), T(0.0)};
  Rgb<T> f = disney_brdf(p, g);
  const double k = intensity * g.n_dot_l;
  for (auto& c : f) c = c * k;
  return f;
}

inline constexpr double kGammaThreshold = 0.0031308;

/// Linear-to-sRGB transfer with the input clamped to [0,1].
inline double gamma_map(double c) {
  c = std::clamp(c, 0.0, 1.0);
  if (c <= kGammaThreshold) return 323.0 / 25.0 * c;
  // Exact at c = 1.
  return (211.0 * std::pow(c, 5.0 / 12.0) - 11.0) / 200.0;
}

/// Derivative of gamma_map(clamp(c)) with respect to c; zero where the clamp is active.
inline double gamma_map_derivative(double c) {
  if (c < 0.0 || c > 1.0) return 0.0;
  if (c <= kGammaThreshold) return 323.0 / 25.0;
  return 211.0 / 200.0 * (5.0 / 12.0) * std::pow(c, -7.0 / 12.0);
}

}  // namespace meshfeat
