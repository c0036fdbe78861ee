#include "meshfeat/synth.hpp"

#include <cmath>
#include <cstdio>
#include <map>
#include <random>

#include "meshfeat/bvh.hpp"
#include "meshfeat/errors.hpp"
#include "meshfeat/image.hpp"
#include "meshfeat/render.hpp"

namespace meshfeat {

Mesh icosphere(int subdivisions, double radius) {
  if (subdivisions < 0) throw DataError("negative subdivision level");
  const double t = (1.0 + std::sqrt(5.0)) / 2.0;
  Mesh m;
  m.vertices = {{-1, t, 0}, {1, t, 0}, {-1, -t, 0}, {1, -t, 0}, {0, -1, t}, {0, 1, t},
                {0, -1, -t}, {0, 1, -t}, {t, 0, -1}, {t, 0, 1}, {-t, 0, -1}, {-t, 0, 1}};
  for (auto& v : m.vertices) v.normalize();
  m.faces = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11}, {1, 5, 9}, {5, 11, 4},
             {11, 10, 2}, {10, 7, 6}, {7, 1, 8},  {3, 9, 4},  {3, 4, 2},   {3, 2, 6}, {3, 6, 8},
             {3, 8, 9},  {4, 9, 5},  {2, 4, 11}, {6, 2, 10}, {8, 6, 7},   {9, 8, 1}};
  for (int s = 0; s < subdivisions; ++s) {
    std::map<std::pair<uint32_t, uint32_t>, uint32_t> midpoints;
    auto midpoint = [&](uint32_t a, uint32_t b) {
      const auto key = std::minmax(a, b);
      auto it = midpoints.find(key);
      if (it != midpoints.end()) return it->second;
      const uint32_t idx = static_cast<uint32_t>(m.vertices.size());
      m.vertices.push_back((m.vertices[a] + m.vertices[b]).normalized());
      midpoints.emplace(key, idx);
      return idx;
    };
    std::vector<Face> faces;
    faces.reserve(m.faces.size() * 4);
    for (const Face& f : m.faces) {
      const uint32_t ab = midpoint(f[0], f[1]), bc = midpoint(f[1], f[2]), ca = midpoint(f[2], f[0]);
      faces.push_back({f[0], ab, ca});
      faces.push_back({f[1], bc, ab});
      faces.push_back({f[2], ca, bc});
      faces.push_back({ab, bc, ca});
    }
    m.faces = std::move(faces);
  }
  for (auto& v : m.vertices) v *= radius;
  return m;
}

Rgb<float> CheckerPattern::operator()(const Vec3& p) const {
  // Near a zero crossing sin(pi x / cell) ~ pi dx / cell, so this tanh ramps over ~edge.
  const double k = cell / (M_PI * edge);
  double w = 1.0;
  for (int axis = 0; axis < 3; ++axis) w *= std::tanh(k * std::sin(M_PI * p[axis] / cell));
  const double s = 0.5 + 0.5 * w;
  Rgb<float> c;
  for (int k = 0; k < 3; ++k) c[k] = static_cast<float>(a[k] + (b[k] - a[k]) * s);
  return c;
}

std::vector<View> ring_views(int count, double distance, const std::vector<double>& elevations_deg,
                             double azimuth_offset_deg, double fov_deg, int resolution) {
  std::vector<View> views;
  for (int i = 0; i < count; ++i) {
    const double az = (azimuth_offset_deg + 360.0 * i / count) * M_PI / 180.0;
    const double el = elevations_deg[i % elevations_deg.size()] * M_PI / 180.0;
    const Vec3 eye = distance * Vec3(std::cos(el) * std::cos(az), std::cos(el) * std::sin(az), std::sin(el));
    views.push_back(look_at(eye, Vec3::Zero(), Vec3::UnitZ(), fov_deg, resolution, resolution));
  }
  return views;
}

namespace {

void prepare_dirs(const std::filesystem::path& out) {
  std::filesystem::create_directories(out / "views");
  std::filesystem::create_directories(out / "images");
}

std::string numbered(const char* prefix, int i) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s%03d", prefix, i);
  return buf;
}

}  // namespace

void synth_checker_sphere(const std::filesystem::path& out, const CheckerSceneOptions& o) {
  if (o.train_views < 1) throw DataError("checker scene needs at least one training view");
  if (o.test_views < 0 || o.resolution < 16) throw DataError("bad checker scene options");
  prepare_dirs(out);
  const Mesh mesh = icosphere(o.subdivisions);
  save_obj(mesh, out / "mesh.obj");
  const Bvh bvh(mesh);

  auto write = [&](std::vector<View> views, const std::string& split, const char* prefix) {
    for (size_t i = 0; i < views.size(); ++i) {
      View& v = views[i];
      v.split = split;
      v.name = numbered(prefix, int(i));
      const Image img = render_field(
          bvh, v, [&](const SurfaceSample& s) { return o.pattern(point_from_barycentric(mesh, s)); },
          {0.0f, 0.0f, 0.0f});
      write_png(img, out / "images" / (v.name + ".png"));
      save_view(v, out / "views" / (v.name + ".json"), "images/" + v.name + ".png");
    }
  };
  write(ring_views(o.train_views, o.distance, {20.0, -20.0}, 0.0, o.fov_deg, o.resolution), "train", "train_");
  if (o.test_views > 0) {
    write(ring_views(o.test_views, o.distance, {5.0, -5.0}, 180.0 / o.train_views, o.fov_deg, o.resolution),
          "test", "test_");
  }
}

Mesh deform_sinusoidal(const Mesh& mesh, double amplitude, double frequency) {
  Mesh out = mesh;
  for (Vec3& v : out.vertices) {
    const double r = v.norm();
    if (r == 0) continue;
    const double scale = 1.0 + amplitude * std::sin(frequency * v.z()) * std::cos(frequency * std::atan2(v.y(), v.x()));
    v *= scale;
  }
  return out;
}

void synth_deform_pair(const std::filesystem::path& out, const CheckerSceneOptions& options, double amplitude,
                       double frequency) {
  synth_checker_sphere(out, options);
  const Mesh mesh = load_obj(out / "mesh.obj");
  save_obj(deform_sinusoidal(mesh, amplitude, frequency), out / "deformed.obj");
}

DisneyParams<double> material_a() {
  // baseColor rgb, subsurface, metallic, specular, specularTint, roughness, sheen, sheenTint, clearcoat, gloss
  return {0.80, 0.30, 0.20, 0.20, 0.0, 0.50, 0.10, 0.35, 0.10, 0.50, 0.10, 0.60};
}

DisneyParams<double> material_b() {
  return {0.20, 0.45, 0.75, 0.05, 0.0, 0.60, 0.20, 0.65, 0.30, 0.50, 0.30, 0.80};
}

int material_label(const Vec3& p) { return p.z() > 0.15 * std::sin(3.0 * p.x()) ? 1 : 0; }

std::vector<DisneyParams<double>> two_material_vertex_params(const Mesh& mesh) {
  std::vector<DisneyParams<double>> params(mesh.num_vertices());
  for (size_t v = 0; v < params.size(); ++v) {
    params[v] = material_label(mesh.vertices[v]) ? material_b() : material_a();
  }
  return params;
}

Image render_brdf_ground_truth(const Bvh& bvh, const View& view,
                               const std::vector<DisneyParams<double>>& vertex_params, bool smooth_normals) {
  if (!view.light_dir) throw DataError("BRDF view needs a light direction");
  const Mesh& mesh = bvh.mesh();
  const ViewHits hits = trace_view(bvh, view);
  const ShadingInputs shading = shading_inputs(bvh, view, hits, smooth_normals);
  std::vector<Rgb<float>> colours(hits.size());
  for (size_t k = 0; k < hits.size(); ++k) {
    const SurfaceSample& s = hits.samples[k];
    const Face& f = mesh.faces[s.face];
    DisneyParams<double> p{};
    for (int c = 0; c < 3; ++c) {
      for (int i = 0; i < kDisneyParamCount; ++i) p[i] += s.bary[c] * vertex_params[f[c]][i];
    }
    const Rgb<double> rad = shade_directional(p, shading.normals[k], shading.to_view[k], *view.light_dir,
                                              view.light_intensity, shading.shadowed[k] != 0);
    colours[k] = {float(rad[0]), float(rad[1]), float(rad[2])};
  }
  return assemble_image(hits, colours, {0.0f, 0.0f, 0.0f});
}

void synth_two_material_sphere(const std::filesystem::path& out, const BrdfSceneOptions& o) {
  if (o.train_views < 1 || o.train_lights < 1) throw DataError("BRDF scene needs training views and lights");
  prepare_dirs(out);
  const Mesh mesh = icosphere(o.subdivisions);
  save_obj(mesh, out / "mesh.obj");
  const Bvh bvh(mesh);
  const auto params = two_material_vertex_params(mesh);
  std::mt19937_64 rng(o.seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  // Lights come from the camera's side, at most ~60 degrees away from the view axis.
  auto random_light = [&](const Vec3& towards_camera) {
    for (;;) {
      const Vec3 r(normal(rng), normal(rng), normal(rng));
      const Vec3 l = (towards_camera + 0.9 * r.normalized()).normalized();
      if (l.dot(towards_camera) > 0.5) return l;
    }
  };
  auto write = [&](const std::vector<View>& cams, int lights, const std::string& split, const char* prefix) {
    for (size_t i = 0; i < cams.size(); ++i) {
      const Vec3 towards_camera = cams[i].center().normalized();
      for (int j = 0; j < lights; ++j) {
        View v = cams[i];
        v.split = split;
        v.light_dir = random_light(towards_camera);
        v.light_intensity = o.light_intensity;
        v.name = numbered(prefix, int(i)) + numbered("_l", j);
        const Image img = render_brdf_ground_truth(bvh, v, params);
        write_pfm(img, out / "images" / (v.name + ".pfm"));
        save_view(v, out / "views" / (v.name + ".json"), "images/" + v.name + ".pfm");
      }
    }
  };
  write(ring_views(o.train_views, o.distance, {25.0, -10.0}, 0.0, o.fov_deg, o.resolution), o.train_lights,
        "train", "train_");
  if (o.test_views > 0) {
    write(ring_views(o.test_views, o.distance, {10.0, -5.0}, 17.0, o.fov_deg, o.resolution), o.test_lights, "test",
          "test_");
  }
}

}  // namespace meshfeat
