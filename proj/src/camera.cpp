#include "meshfeat/camera.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <Eigen/LU>
#include <json.hpp>

#include "meshfeat/errors.hpp"

namespace meshfeat {

using nlohmann::json;

void validate(const View& view) {
  if (view.width <= 0 || view.height <= 0) throw DataError("view '" + view.name + "': bad image size");
  if (!view.K.allFinite() || !view.R.allFinite() || !view.t.allFinite()) {
    throw DataError("view '" + view.name + "': non-finite camera parameters");
  }
  if (std::abs(view.K.determinant()) < 1e-12) throw DataError("view '" + view.name + "': singular K");
  const double ortho = (view.R.transpose() * view.R - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
  if (ortho > 1e-6) throw DataError("view '" + view.name + "': R is not orthonormal");
  if (view.light_dir && std::abs(view.light_dir->norm() - 1.0) > 1e-9) {
    throw DataError("view '" + view.name + "': light_dir is not unit length");
  }
  if (view.light_intensity < 0) throw DataError("view '" + view.name + "': negative light intensity");
}

namespace {

Eigen::Matrix3d read_mat3(const json& j, const char* key) {
  const json& m = j.at(key);
  Eigen::Matrix3d out;
  if (m.size() == 9) {
    for (int i = 0; i < 9; ++i) out(i / 3, i % 3) = m.at(i).get<double>();
  } else if (m.size() == 3) {
    for (int r = 0; r < 3; ++r) {
      if (m.at(r).size() != 3) throw DataError(std::string(key) + " must be 3x3");
      for (int c = 0; c < 3; ++c) out(r, c) = m.at(r).at(c).get<double>();
    }
  } else {
    throw DataError(std::string(key) + " must be 3x3");
  }
  return out;
}

Vec3 read_vec3(const json& j, const char* key) {
  const json& v = j.at(key);
  if (v.size() != 3) throw DataError(std::string(key) + " must have 3 entries");
  return {v.at(0).get<double>(), v.at(1).get<double>(), v.at(2).get<double>()};
}

json mat3_json(const Eigen::Matrix3d& m) {
  json out = json::array();
  for (int r = 0; r < 3; ++r) out.push_back({m(r, 0), m(r, 1), m(r, 2)});
  return out;
}

}  // namespace

View load_view(const std::filesystem::path& json_path, const std::filesystem::path& scene_dir) {
  std::ifstream in(json_path);
  if (!in) throw DataError("cannot open " + json_path.string());
  View view;
  view.name = json_path.stem().string();
  try {
    const json j = json::parse(in);
    view.K = read_mat3(j, "K");
    view.R = read_mat3(j, "R");
    view.t = read_vec3(j, "t");
    view.width = j.at("width").get<int>();
    view.height = j.at("height").get<int>();
    view.image = scene_dir / j.at("image").get<std::string>();
    if (j.contains("light_dir")) {
      const Vec3 l = read_vec3(j, "light_dir");
      if (l.norm() == 0) throw DataError("zero light_dir");
      view.light_dir = std::abs(l.norm() - 1.0) < 1e-12 ? l : l.normalized();
    }
    if (j.contains("light_intensity")) view.light_intensity = j.at("light_intensity").get<double>();
    if (j.contains("split")) view.split = j.at("split").get<std::string>();
  } catch (const json::exception& e) {
    throw DataError(json_path.string() + ": " + e.what());
  }
  validate(view);
  return view;
}

void save_view(const View& view, const std::filesystem::path& json_path, const std::string& image_ref) {
  json j;
  j["K"] = mat3_json(view.K);
  j["R"] = mat3_json(view.R);
  j["t"] = {view.t.x(), view.t.y(), view.t.z()};
  j["width"] = view.width;
  j["height"] = view.height;
  j["image"] = image_ref;
  if (view.light_dir) {
    j["light_dir"] = {view.light_dir->x(), view.light_dir->y(), view.light_dir->z()};
    j["light_intensity"] = view.light_intensity;
  }
  if (!view.split.empty()) j["split"] = view.split;
  std::ofstream out(json_path);
  if (!out) throw DataError("cannot write " + json_path.string());
  out << j.dump(2) << "\n";
}

std::vector<View> load_views(const std::filesystem::path& scene_dir) {
  const auto dir = scene_dir / "views";
  if (!std::filesystem::is_directory(dir)) throw DataError("missing directory " + dir.string());
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.path().extension() == ".json") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<View> views;
  for (const auto& f : files) views.push_back(load_view(f, scene_dir));
  return views;
}

Ray pixel_ray(const View& view, int x, int y) {
  const Eigen::Vector3d pix(x + 0.5, y + 0.5, 1.0);
  const Eigen::Vector3d cam = view.K.partialPivLu().solve(pix);
  return {view.center(), (view.R.transpose() * cam).normalized()};
}

std::vector<Ray> generate_rays(const View& view) {
  validate(view);
  const Eigen::Matrix3d kinv = view.K.inverse();
  const Eigen::Matrix3d rt = view.R.transpose();
  const Vec3 origin = view.center();
  std::vector<Ray> rays;
  rays.reserve(size_t(view.width) * view.height);
  for (int y = 0; y < view.height; ++y) {
    for (int x = 0; x < view.width; ++x) {
      const Eigen::Vector3d cam = kinv * Eigen::Vector3d(x + 0.5, y + 0.5, 1.0);
      rays.push_back({origin, (rt * cam).normalized()});
    }
  }
  return rays;
}

View look_at(const Vec3& eye, const Vec3& target, const Vec3& up, double fov_y_deg, int width, int height) {
  const Vec3 forward = (target - eye).normalized();
  Vec3 right = forward.cross(up);
  if (right.norm() < 1e-9) right = forward.cross(Vec3::UnitX());
  right.normalize();
  const Vec3 down = forward.cross(right);
  View view;
  view.R.row(0) = right.transpose();
  view.R.row(1) = down.transpose();
  view.R.row(2) = forward.transpose();
  view.t = -view.R * eye;
  const double f = 0.5 * height / std::tan(0.5 * fov_y_deg * M_PI / 180.0);
  view.K << f, 0, 0.5 * width, 0, f, 0.5 * height, 0, 0, 1;
  view.width = width;
  view.height = height;
  return view;
}

}  // namespace meshfeat
