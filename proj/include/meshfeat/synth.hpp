#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "meshfeat/brdf.hpp"
#include "meshfeat/bvh.hpp"
#include "meshfeat/camera.hpp"
#include "meshfeat/image.hpp"
#include "meshfeat/mesh.hpp"

namespace meshfeat {

/// Unit-radius icosphere; subdivision s gives 10 * 4^s + 2 vertices.
Mesh icosphere(int subdivisions, double radius = 1.0);

/// Solid 3D checker evaluated at surface points. Each axis contributes a square wave
/// whose jumps are smoothed over roughly `edge` world units.
struct CheckerPattern {
  double cell = 0.5;
  double edge = 0.005;
  Rgb<float> a{0.85f, 0.75f, 0.35f};
  Rgb<float> b{0.25f, 0.40f, 0.65f};

  Rgb<float> operator()(const Vec3& p) const;
};

/// Ring of cameras around the origin at the given elevations (degrees), looking at it.
std::vector<View> ring_views(int count, double distance, const std::vector<double>& elevations_deg,
                             double azimuth_offset_deg, double fov_deg, int resolution);

struct CheckerSceneOptions {
  int train_views = 5;
  int test_views = 2;
  int resolution = 256;
  int subdivisions = 5;
  double distance = 3.0;
  double fov_deg = 45.0;
  CheckerPattern pattern;
};

/// mesh.obj, images/*.png, views/*.json (with "split": train/test).
void synth_checker_sphere(const std::filesystem::path& out, const CheckerSceneOptions& options);

/// Same vertex count and faces; vertices pushed along their radius by a sinusoid.
Mesh deform_sinusoidal(const Mesh& mesh, double amplitude, double frequency);

/// Checker scene plus deformed.obj next to mesh.obj.
void synth_deform_pair(const std::filesystem::path& out, const CheckerSceneOptions& options,
                       double amplitude = 0.08, double frequency = 4.0);

struct BrdfSceneOptions {
  int train_views = 10;
  int train_lights = 8;
  int test_views = 4;
  int test_lights = 4;
  int resolution = 128;
  int subdivisions = 5;
  double distance = 3.0;
  double fov_deg = 45.0;
  double light_intensity = 2.5;
  uint64_t seed = 7;
};

/// The two ground-truth materials of the synthetic BRDF scene.
DisneyParams<double> material_a();
DisneyParams<double> material_b();
/// 0 for material A, 1 for B: the surface is split by z > 0.15 sin(3x).
int material_label(const Vec3& p);
std::vector<DisneyParams<double>> two_material_vertex_params(const Mesh& mesh);

/// Linear radiance rendered from per-vertex parameters (interpolated barycentrically).
Image render_brdf_ground_truth(const Bvh& bvh, const View& view,
                               const std::vector<DisneyParams<double>>& vertex_params, bool smooth_normals = false);

/// mesh.obj, images/*.pfm, views/*.json (one file per camera/light pair).
void synth_two_material_sphere(const std::filesystem::path& out, const BrdfSceneOptions& options);

}  // namespace meshfeat
