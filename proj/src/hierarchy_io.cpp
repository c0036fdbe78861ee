#include <fstream>

#include "meshfeat/binary_io.hpp"
#include "meshfeat/errors.hpp"
#include "meshfeat/simplify.hpp"

namespace meshfeat {

uint64_t Hierarchy::hash() const {
  io::Fnv1a h;
  h.update_pod(static_cast<uint64_t>(num_levels()));
  for (size_t i = 0; i < num_levels(); ++i) {
    h.update_pod(static_cast<uint64_t>(meshes[i].num_vertices()));
    h.update_pod(static_cast<uint64_t>(meshes[i].num_faces()));
    h.update(maps[i].data(), maps[i].size() * sizeof(uint32_t));
  }
  return h.digest();
}

// Layout: "MFH1", u32 level count, f64 resolution * levels, then per level: u32 |V_i|, u32 |F_i|,
// f32 xyz * |V_i|, u32 ijk * |F_i|, u32 map * |V|.
void write_hierarchy(const Hierarchy& h, std::ostream& out) {
  out.write("MFH1", 4);
  io::write_pod<uint32_t>(out, static_cast<uint32_t>(h.num_levels()));
  for (size_t i = 0; i < h.num_levels(); ++i) {
    io::write_pod<double>(out, i < h.resolutions.size() ? h.resolutions[i] : 1.0);
  }
  for (size_t i = 0; i < h.num_levels(); ++i) {
    const Mesh& m = h.meshes[i];
    io::write_pod<uint32_t>(out, static_cast<uint32_t>(m.num_vertices()));
    io::write_pod<uint32_t>(out, static_cast<uint32_t>(m.num_faces()));
    std::vector<float> xyz;
    xyz.reserve(m.num_vertices() * 3);
    for (const Vec3& v : m.vertices) {
      xyz.push_back(static_cast<float>(v.x()));
      xyz.push_back(static_cast<float>(v.y()));
      xyz.push_back(static_cast<float>(v.z()));
    }
    io::write_array<float>(out, xyz);
    for (const Face& f : m.faces) io::write_array<uint32_t>(out, f);
    io::write_array<uint32_t>(out, h.maps[i]);
  }
}

void save_hierarchy(const Hierarchy& h, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  write_hierarchy(h, out);
  if (!out) throw DataError("write failed: " + path.string());
}

Hierarchy read_hierarchy(std::istream& in) {
  io::expect_magic(in, "MFH1");
  const uint32_t levels = io::read_pod<uint32_t>(in);
  if (levels == 0) throw DataError("hierarchy has no levels");
  if (levels > 64) throw DataError("hierarchy level count implausible");
  Hierarchy h;
  for (uint32_t i = 0; i < levels; ++i) {
    const double r = io::read_pod<double>(in);
    if (!(r > 0.0 && r <= 1.0)) throw DataError("hierarchy resolution out of range");
    h.resolutions.push_back(r);
  }
  for (uint32_t i = 0; i < levels; ++i) {
    Mesh m;
    const uint32_t nv = io::read_pod<uint32_t>(in);
    const uint32_t nf = io::read_pod<uint32_t>(in);
    std::vector<float> xyz(size_t(nv) * 3);
    io::read_array<float>(in, xyz);
    m.vertices.resize(nv);
    for (uint32_t v = 0; v < nv; ++v) m.vertices[v] = Vec3(xyz[3 * v], xyz[3 * v + 1], xyz[3 * v + 2]);
    m.faces.resize(nf);
    for (Face& f : m.faces) {
      io::read_array<uint32_t>(in, f);
      if (f[0] >= nv || f[1] >= nv || f[2] >= nv) throw DataError("hierarchy face index out of range");
    }
    const size_t original = i == 0 ? nv : h.maps[0].size();
    std::vector<uint32_t> map(original);
    io::read_array<uint32_t>(in, map);
    for (uint32_t target : map) {
      if (target >= nv) throw DataError("hierarchy map entry out of range");
    }
    h.meshes.push_back(std::move(m));
    h.maps.push_back(std::move(map));
  }
  return h;
}

Hierarchy load_hierarchy(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  return read_hierarchy(in);
}

}  // namespace meshfeat
