#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "meshfeat/mesh.hpp"

namespace meshfeat {

/// Pinhole view in the OpenCV convention: x_cam = R * x_world + t, pixel = K * x_cam / z.
/// For the BRDF task a view also carries one directional light (direction towards the light).
struct View {
  Eigen::Matrix3d K = Eigen::Matrix3d::Identity();
  Eigen::Matrix3d R = Eigen::Matrix3d::Identity();
  Eigen::Vector3d t = Eigen::Vector3d::Zero();
  int width = 0;
  int height = 0;
  std::filesystem::path image;  // resolved against the scene directory on load
  std::optional<Vec3> light_dir;
  double light_intensity = 1.0;
  std::string split;  // "train", "test" or empty
  std::string name;

  Vec3 center() const { return -R.transpose() * t; }
};

void validate(const View& view);

View load_view(const std::filesystem::path& json_path, const std::filesystem::path& scene_dir);
/// `image_ref` is written verbatim as the "image" field.
void save_view(const View& view, const std::filesystem::path& json_path, const std::string& image_ref);

/// All views/*.json of a scene, sorted by file name.
std::vector<View> load_views(const std::filesystem::path& scene_dir);

struct Ray {
  Vec3 origin;
  Vec3 dir;  // unit length
};

/// Ray through the centre of pixel (x, y).
Ray pixel_ray(const View& view, int x, int y);
/// Row-major, one ray per pixel.
std::vector<Ray> generate_rays(const View& view);

/// Camera looking from `eye` at `target`; image y grows downwards.
View look_at(const Vec3& eye, const Vec3& target, const Vec3& up, double fov_y_deg, int width, int height);

}  // namespace meshfeat
