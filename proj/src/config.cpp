#include "meshfeat/config.hpp"

#include <json.hpp>

#include "meshfeat/errors.hpp"

namespace meshfeat {

using nlohmann::json;

std::string to_string(Task t) { return t == Task::Texture ? "texture" : "brdf"; }

Task task_from_string(const std::string& s) {
  if (s == "texture") return Task::Texture;
  if (s == "brdf") return Task::Brdf;
  throw DataError("unknown task '" + s + "' (expected texture or brdf)");
}

TrainConfig TrainConfig::for_task(Task task) {
  TrainConfig c;
  c.task = task;
  if (task == Task::Brdf) {
    c.batch_size = 16384;
    c.epochs = 500;
  }
  return c;
}

std::vector<int> TrainConfig::layer_sizes() const {
  std::vector<int> sizes{feature_dim};
  for (int i = 0; i < hidden_layers; ++i) sizes.push_back(hidden_width);
  sizes.push_back(output_dim());
  return sizes;
}

void TrainConfig::validate() const {
  if (resolutions.empty() || resolutions.front() != 1.0) throw DataError("resolutions must start at 1");
  for (size_t i = 0; i < resolutions.size(); ++i) {
    if (!(resolutions[i] > 0.0 && resolutions[i] <= 1.0)) throw DataError("resolutions must lie in (0, 1]");
    if (i > 0 && resolutions[i] > resolutions[i - 1]) throw DataError("resolutions must not increase");
  }
  if (feature_dim < 1) throw DataError("d must be positive");
  if (hidden_width < 1 || hidden_layers < 0) throw DataError("invalid MLP shape");
  if (!(lr_mlp > 0)) throw DataError("lr_mlp must be positive");
  if (!(lr_features >= 0)) throw DataError("lr_feat must be non-negative");
  if (l2_mlp < 0 || lambda_reg < 0) throw DataError("l2_mlp and lambda_reg must be non-negative");
  if (batch_size < 1) throw DataError("batch must be positive");
  if (epochs < 0) throw DataError("epochs must be non-negative");
}

std::string config_to_json(const TrainConfig& c) {
  json j;
  j["task"] = to_string(c.task);
  j["resolutions"] = c.resolutions;
  j["d"] = c.feature_dim;
  j["mlp"] = {{"hidden", c.hidden_width}, {"layers", c.hidden_layers}};
  j["lr_theta"] = c.lr_mlp;
  j["lr_feat"] = c.lr_features;
  j["l2_mlp"] = c.l2_mlp;
  j["lambda_reg"] = c.lambda_reg;
  j["batch"] = c.batch_size;
  j["epochs"] = c.epochs;
  j["seed"] = c.seed;
  j["smooth_normals"] = c.smooth_normals;
  return j.dump(2);
}

TrainConfig config_from_json(const std::string& text, const TrainConfig& base) {
  TrainConfig c = base;
  try {
    const json j = json::parse(text);
    if (!j.is_object()) throw DataError("config must be a JSON object");
    if (j.contains("task")) {
      const Task t = task_from_string(j.at("task").get<std::string>());
      if (t != c.task) {
        const uint64_t seed = c.seed;
        c = TrainConfig::for_task(t);
        c.seed = seed;
      }
    }
    for (const auto& [key, value] : j.items()) {
      if (key == "task") continue;
      if (key == "resolutions") c.resolutions = value.get<std::vector<double>>();
      else if (key == "d") c.feature_dim = value.get<int>();
      else if (key == "mlp") {
        for (const auto& [k, v] : value.items()) {
          if (k == "hidden") c.hidden_width = v.get<int>();
          else if (k == "layers") c.hidden_layers = v.get<int>();
          else throw DataError("unknown config key mlp." + k);
        }
      }
      else if (key == "lr_theta") c.lr_mlp = value.get<double>();
      else if (key == "lr_feat") c.lr_features = value.get<double>();
      else if (key == "l2_mlp") c.l2_mlp = value.get<double>();
      else if (key == "lambda_reg") c.lambda_reg = value.get<double>();
      else if (key == "batch") c.batch_size = value.get<int>();
      else if (key == "epochs") c.epochs = value.get<int>();
      else if (key == "seed") c.seed = value.get<uint64_t>();
      else if (key == "smooth_normals") c.smooth_normals = value.get<bool>();
      else throw DataError("unknown config key '" + key + "'");
    }
  } catch (const json::exception& e) {
    throw DataError(std::string("bad config: ") + e.what());
  }
  c.validate();
  return c;
}

}  // namespace meshfeat
