#pragma once

#include <functional>
#include <span>
#include <vector>

#include "meshfeat/brdf.hpp"
#include "meshfeat/bvh.hpp"
#include "meshfeat/camera.hpp"
#include "meshfeat/image.hpp"

namespace meshfeat {

inline constexpr double kShadowOffset = 1e-4;  // times the bounding-box diagonal

/// Ray-hit pixels of one view, in row-major pixel order.
struct ViewHits {
  int width = 0;
  int height = 0;
  std::vector<uint32_t> pixels;  // y * width + x
  std::vector<SurfaceSample> samples;
  std::vector<double> distances;

  size_t size() const { return samples.size(); }
  Mask mask() const;
};

ViewHits trace_view(const Bvh& bvh, const View& view);

/// Per-hit quantities for directional shading. Normals are flipped towards the viewer.
struct ShadingInputs {
  std::vector<Vec3> normals;
  std::vector<Vec3> to_view;
  std::vector<uint8_t> shadowed;
};

ShadingInputs shading_inputs(const Bvh& bvh, const View& view, const ViewHits& hits,
                             bool smooth_normals = false);

/// True if the ray from x (offset along n) towards the light at direction l hits the mesh.
bool shadow_test(const Bvh& bvh, const Vec3& x, const Vec3& n, const Vec3& l);

/// Writes colours[k] to hits.pixels[k]; every other pixel gets the background.
Image assemble_image(const ViewHits& hits, std::span<const Rgb<float>> colours, const Rgb<float>& background);

using SurfaceField = std::function<Rgb<float>(const SurfaceSample&)>;

/// Per-pixel: nearest hit -> field(sample), miss -> background.
Image render_field(const Bvh& bvh, const View& view, const SurfaceField& field, const Rgb<float>& background,
                   Mask* mask = nullptr);

}  // namespace meshfeat
