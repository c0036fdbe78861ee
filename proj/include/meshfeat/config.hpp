#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace meshfeat {

enum class Task { Texture, Brdf };

std::string to_string(Task t);
Task task_from_string(const std::string& s);

struct TrainConfig {
  Task task = Task::Texture;
  std::vector<double> resolutions{1.0, 0.1, 0.05, 0.01};
  int feature_dim = 4;
  int hidden_width = 32;
  int hidden_layers = 2;
  double lr_mlp = 2e-4;
  double lr_features = 5e-3;
  double l2_mlp = 1e-5;
  double lambda_reg = 1.5e-6;
  int batch_size = 8000;
  int epochs = 1000;
  uint64_t seed = 0;
  bool smooth_normals = false;

  /// Defaults for a task: texture uses batch 8000 / 1000 epochs, BRDF 16384 / 500.
  static TrainConfig for_task(Task task);

  int output_dim() const { return task == Task::Texture ? 3 : 12; }
  std::vector<int> layer_sizes() const;
  void validate() const;
};

/// JSON keys: task, resolutions, d, mlp {hidden, layers}, lr_theta, lr_feat, l2_mlp,
/// lambda_reg, batch, epochs, seed, smooth_normals.
std::string config_to_json(const TrainConfig& c);
/// Keys present in `text` override `base`; unknown keys are a DataError. A "task" key
/// switches the task defaults before the remaining keys are applied.
TrainConfig config_from_json(const std::string& text, const TrainConfig& base = {});

}  // namespace meshfeat
