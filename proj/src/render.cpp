#include "meshfeat/render.hpp"

#include "meshfeat/errors.hpp"

namespace meshfeat {

Mask ViewHits::mask() const {
  Mask m(size_t(width) * height, 0);
  for (uint32_t p : pixels) m[p] = 1;
  return m;
}

ViewHits trace_view(const Bvh& bvh, const View& view) {
  const std::vector<Ray> rays = generate_rays(view);
  std::vector<std::optional<Hit>> hits(rays.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (int y = 0; y < view.height; ++y) {
    for (int x = 0; x < view.width; ++x) {
      const size_t p = size_t(y) * view.width + x;
      hits[p] = bvh.intersect(rays[p]);
    }
  }
  ViewHits out;
  out.width = view.width;
  out.height = view.height;
  for (size_t p = 0; p < hits.size(); ++p) {
    if (!hits[p]) continue;
    out.pixels.push_back(static_cast<uint32_t>(p));
    out.samples.push_back(hits[p]->sample);
    out.distances.push_back(hits[p]->t);
  }
  return out;
}

bool shadow_test(const Bvh& bvh, const Vec3& x, const Vec3& n, const Vec3& l) {
  const double offset = kShadowOffset * bounding_diagonal(bvh.mesh());
  return bvh.occluded({x + offset * n, l});
}

ShadingInputs shading_inputs(const Bvh& bvh, const View& view, const ViewHits& hits, bool smooth_normals) {
  const Mesh& mesh = bvh.mesh();
  const size_t n = hits.size();
  ShadingInputs out;
  out.normals.resize(n);
  out.to_view.resize(n);
  out.shadowed.assign(n, 0);
  std::vector<Vec3> vnormals;
  if (smooth_normals) vnormals = vertex_normals(mesh);
  const double offset = kShadowOffset * bounding_diagonal(mesh);
  const Vec3 eye = view.center();
#pragma omp parallel for schedule(dynamic, 256)
  for (long long k = 0; k < static_cast<long long>(n); ++k) {
    const SurfaceSample& s = hits.samples[k];
    const Vec3 x = point_from_barycentric(mesh, s);
    const Vec3 v = (eye - x).normalized();
    Vec3 nrm = face_normal(mesh, s.face);
    const bool flip = nrm.dot(v) < 0;
    if (smooth_normals) {
      const Face& f = mesh.faces[s.face];
      nrm = (s.bary[0] * vnormals[f[0]] + s.bary[1] * vnormals[f[1]] + s.bary[2] * vnormals[f[2]]).normalized();
      if (flip) nrm = -nrm;
    } else if (flip) {
      nrm = -nrm;
    }
    out.normals[k] = nrm;
    out.to_view[k] = v;
    if (view.light_dir && nrm.dot(*view.light_dir) > 0) {
      out.shadowed[k] = bvh.occluded({x + offset * nrm, *view.light_dir}) ? 1 : 0;
    }
  }
  return out;
}

Image assemble_image(const ViewHits& hits, std::span<const Rgb<float>> colours, const Rgb<float>& background) {
  if (colours.size() != hits.size()) throw DataError("colour count does not match hit count");
  Image img(hits.width, hits.height);
  for (size_t p = 0; p < img.pixel_count(); ++p) {
    for (int c = 0; c < 3; ++c) img.data[p * 3 + c] = background[c];
  }
  for (size_t k = 0; k < hits.size(); ++k) {
    for (int c = 0; c < 3; ++c) img.data[size_t(hits.pixels[k]) * 3 + c] = colours[k][c];
  }
  return img;
}

Image render_field(const Bvh& bvh, const View& view, const SurfaceField& field, const Rgb<float>& background,
                   Mask* mask) {
  const ViewHits hits = trace_view(bvh, view);
  std::vector<Rgb<float>> colours(hits.size());
  for (size_t k = 0; k < hits.size(); ++k) colours[k] = field(hits.samples[k]);
  if (mask) *mask = hits.mask();
  return assemble_image(hits, colours, background);
}

}  // namespace meshfeat
