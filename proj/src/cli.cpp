#include "meshfeat/cli.hpp"

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "meshfeat/errors.hpp"
#include "meshfeat/parallel.hpp"
#include "meshfeat/pipeline.hpp"
#include "meshfeat/simplify.hpp"
#include "meshfeat/synth.hpp"

namespace meshfeat {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string read_text(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

/// "train" selects train-tagged and untagged views, "test" the test-tagged ones
/// (all views if nothing is tagged), "all" everything.
std::vector<View> select_views(const std::vector<View>& views, const std::string& split) {
  if (split == "all") return views;
  bool any_tagged = false;
  for (const auto& v : views) any_tagged = any_tagged || !v.split.empty();
  std::vector<View> out;
  for (const auto& v : views) {
    if (split == "train" && v.split != "test") out.push_back(v);
    if (split == "test" && (v.split == "test" || !any_tagged)) out.push_back(v);
  }
  return out;
}

bool has_split(const std::vector<View>& views, const std::string& split) {
  for (const auto& v : views) {
    if (v.split == split) return true;
  }
  return false;
}

json metrics_json(const MetricReport& r) {
  auto num = [](double v) { return std::isfinite(v) ? json(v) : json(format_metric(v)); };
  return {{"name", r.name}, {"psnr", num(r.psnr)}, {"dssim", r.dssim}, {"dssim_x100", 100.0 * r.dssim},
          {"pixels", r.pixels}, {"masked", r.masked}};
}

json eval_json(const EvalResult& e) {
  json views = json::array();
  for (const auto& r : e.views) views.push_back(metrics_json(r));
  return {{"views", views}, {"mean", metrics_json(e.total)}};
}

void write_json(const json& j, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << j.dump(2) << "\n";
}

std::vector<double> parse_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      out.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw UsageError("bad number '" + item + "' in list");
    }
  }
  return out;
}

Model<float> load_model(const fs::path& checkpoint) { return load_checkpoint<float>(checkpoint).model; }

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Multi-resolution mesh feature fields: simplify, train, render, evaluate, benchmark"};
  app.require_subcommand(1, 1);
  app.fallthrough();
  int threads = 0;
  app.add_option("--threads", threads, "Worker threads (default: MESHFEAT_THREADS or all cores)");

  // simplify
  auto* simplify = app.add_subcommand("simplify", "Build the decimation hierarchy of a mesh");
  std::string s_mesh, s_out, s_res = "1,0.1,0.05,0.01", s_obj_dir;
  simplify->add_option("--mesh", s_mesh, "Input OBJ")->required();
  simplify->add_option("--resolutions", s_res, "Comma-separated vertex ratios, first = 1");
  simplify->add_option("--out", s_out, "Output hierarchy (.mfh)")->required();
  simplify->add_option("--obj-dir", s_obj_dir, "Also write each level as OBJ here");

  // synth
  auto* synth = app.add_subcommand("synth", "Generate a synthetic scene");
  std::string y_scene, y_out;
  int y_views = -1, y_test_views = -1, y_res = -1, y_subdiv = -1, y_lights = -1, y_test_lights = -1;
  uint64_t y_seed = 7;
  synth->add_option("--scene", y_scene, "checker-sphere | two-material-sphere | deform-pair")
      ->required()
      ->check(CLI::IsMember({"checker-sphere", "two-material-sphere", "deform-pair"}));
  synth->add_option("--out", y_out, "Output scene directory")->required();
  synth->add_option("--views", y_views, "Training cameras");
  synth->add_option("--test-views", y_test_views, "Held-out cameras");
  synth->add_option("--res", y_res, "Image width and height");
  synth->add_option("--subdiv", y_subdiv, "Icosphere subdivision level");
  synth->add_option("--lights", y_lights, "Lights per training camera (BRDF scene)");
  synth->add_option("--test-lights", y_test_lights, "Lights per held-out camera (BRDF scene)");
  synth->add_option("--seed", y_seed, "Light sampling seed (BRDF scene)");

  // train
  auto* train_cmd = app.add_subcommand("train", "Fit features and decoder to a scene");
  std::string t_scene, t_out, t_config, t_task, t_res, t_resume;
  int t_epochs = -1, t_batch = -1, t_d = -1;
  double t_lambda = -1.0;
  int64_t t_seed = -1;
  train_cmd->add_option("--scene", t_scene, "Scene directory (mesh.obj, views/, images/)")->required();
  train_cmd->add_option("--out", t_out, "Run directory")->required();
  train_cmd->add_option("--task", t_task, "texture | brdf")->check(CLI::IsMember({"texture", "brdf"}));
  train_cmd->add_option("--config", t_config, "JSON config");
  train_cmd->add_option("--epochs", t_epochs);
  train_cmd->add_option("--batch", t_batch);
  train_cmd->add_option("--d", t_d, "Feature dimension");
  train_cmd->add_option("--lambda-reg", t_lambda);
  train_cmd->add_option("--resolutions", t_res, "Comma-separated vertex ratios");
  train_cmd->add_option("--seed", t_seed);
  train_cmd->add_option("--resume", t_resume, "Continue from this checkpoint");

  // render
  auto* render = app.add_subcommand("render", "Render a trained model");
  std::string r_ckpt, r_scene, r_mesh, r_out, r_view, r_split = "all";
  int r_only_level = -1;
  render->add_option("--checkpoint", r_ckpt)->required();
  render->add_option("--scene", r_scene, "Scene directory providing views")->required();
  render->add_option("--mesh", r_mesh, "Mesh to render on (same topology); default scene mesh.obj");
  render->add_option("--view", r_view, "Single view name");
  render->add_option("--split", r_split, "train | test | all")->check(CLI::IsMember({"train", "test", "all"}));
  render->add_option("--only-level", r_only_level, "Keep only this hierarchy level's features");
  render->add_option("--out", r_out, "Output directory")->required();

  // eval
  auto* eval = app.add_subcommand("eval", "Score a trained model against scene images");
  std::string e_ckpt, e_scene, e_mesh, e_out, e_images, e_split = "test";
  eval->add_option("--checkpoint", e_ckpt)->required();
  eval->add_option("--scene", e_scene)->required();
  eval->add_option("--mesh", e_mesh, "Mesh to render on (same topology)");
  eval->add_option("--split", e_split, "train | test | all")->check(CLI::IsMember({"train", "test", "all"}));
  eval->add_option("--out", e_out, "Write the report as JSON here");
  eval->add_option("--images", e_images, "Write rendered predictions here");

  // bench
  auto* bench = app.add_subcommand("bench", "Time inference against the random-Fourier-feature baseline");
  std::string b_ckpt, b_out;
  BenchmarkOptions b_opts;
  bench->add_option("--checkpoint", b_ckpt)->required();
  bench->add_option("--batch", b_opts.batch);
  bench->add_option("--warmup", b_opts.warmup);
  bench->add_option("--reps", b_opts.reps);
  bench->add_option("--seed", b_opts.seed);
  bench->add_option("--out", b_out, "Write the timings as JSON here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }

  try {
    if (threads <= 0) {
      if (const char* env = std::getenv("MESHFEAT_THREADS")) threads = std::atoi(env);
    }
    if (threads > 0) set_num_threads(threads);

    if (*simplify) {
      const Mesh mesh = load_obj(s_mesh);
      validate(mesh);
      const Hierarchy h = build_hierarchy(mesh, parse_list(s_res));
      save_hierarchy(h, s_out);
      for (size_t i = 0; i < h.num_levels(); ++i) {
        out << "level " << i << ": " << h.meshes[i].num_vertices() << " vertices, " << h.meshes[i].num_faces()
            << " faces\n";
        if (!s_obj_dir.empty()) {
          fs::create_directories(s_obj_dir);
          save_obj(h.meshes[i], fs::path(s_obj_dir) / ("level" + std::to_string(i) + ".obj"));
        }
      }
      return kExitOk;
    }

    if (*synth) {
      if (y_scene == "two-material-sphere") {
        BrdfSceneOptions o;
        if (y_views >= 0) o.train_views = y_views;
        if (y_test_views >= 0) o.test_views = y_test_views;
        if (y_res > 0) o.resolution = y_res;
        if (y_subdiv >= 0) o.subdivisions = y_subdiv;
        if (y_lights >= 0) o.train_lights = y_lights;
        if (y_test_lights >= 0) o.test_lights = y_test_lights;
        o.seed = y_seed;
        synth_two_material_sphere(y_out, o);
      } else {
        CheckerSceneOptions o;
        if (y_views >= 0) o.train_views = y_views;
        if (y_test_views >= 0) o.test_views = y_test_views;
        if (y_res > 0) o.resolution = y_res;
        if (y_subdiv >= 0) o.subdivisions = y_subdiv;
        if (y_scene == "deform-pair") {
          synth_deform_pair(y_out, o);
        } else {
          synth_checker_sphere(y_out, o);
        }
      }
      out << "wrote " << y_scene << " scene to " << y_out << "\n";
      return kExitOk;
    }

    if (*train_cmd) {
      TrainState<float> state;
      TrainConfig config;
      if (!t_resume.empty()) {
        state = load_checkpoint<float>(t_resume);
        config = state.model.config;
      } else {
        config = TrainConfig::for_task(t_task.empty() ? Task::Texture : task_from_string(t_task));
        if (!t_config.empty()) config = config_from_json(read_text(t_config), config);
        if (!t_task.empty() && task_from_string(t_task) != config.task) {
          throw UsageError("--task conflicts with the config file");
        }
        if (t_batch > 0) config.batch_size = t_batch;
        if (t_d > 0) config.feature_dim = t_d;
        if (t_lambda >= 0) config.lambda_reg = t_lambda;
        if (!t_res.empty()) config.resolutions = parse_list(t_res);
        if (t_seed >= 0) config.seed = static_cast<uint64_t>(t_seed);
      }
      if (t_epochs >= 0) config.epochs = t_epochs;
      config.validate();

      const fs::path scene(t_scene), run_dir(t_out);
      fs::create_directories(run_dir);
      const Mesh mesh = load_obj(scene / "mesh.obj");
      validate(mesh);
      const std::vector<View> all_views = load_views(scene);
      const std::vector<View> train_views = select_views(all_views, "train");

      std::shared_ptr<const Hierarchy> hierarchy;
      if (t_resume.empty()) {
        hierarchy = std::make_shared<const Hierarchy>(build_hierarchy(mesh, config.resolutions));
        state = start_training<float>(config, hierarchy);
      } else {
        hierarchy = state.model.hierarchy;
        state.model.config.epochs = config.epochs;
        check_topology(state.model, mesh);
      }
      save_hierarchy(*hierarchy, run_dir / "hierarchy.mfh");

      const Bvh bvh(mesh);
      const Dataset data = prepare_samples(bvh, train_views, config.task, config.smooth_normals, &err);
      const SparseLaplacian laplacian = build_laplacian(mesh);
      out << "training " << to_string(config.task) << ": " << data.size() << " samples from "
          << train_views.size() << " views, " << mesh.num_vertices() << " vertices, "
          << state.model.parameter_count() << " parameters\n";

      TrainOptions options;
      options.on_epoch = [&](const EpochLog& e) {
        if (e.epoch % 10 == 0 || e.epoch == static_cast<uint64_t>(config.epochs)) {
          out << "epoch " << e.epoch << "  data " << e.data_loss << "  reg " << e.reg_loss << "  "
              << e.wall_time << " s\n";
          out.flush();
        }
      };
      const auto t0 = std::chrono::steady_clock::now();
      const std::vector<EpochLog> log = train(state, data, laplacian, options);
      const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      save_checkpoint(state, run_dir / "checkpoint.mfc");
      write_log_csv(log, run_dir / "log.csv");

      json report;
      report["config"] = json::parse(config_to_json(config));
      report["parameters"] = {{"mlp", state.model.mlp.parameter_count()},
                              {"features", state.model.features.parameter_count()},
                              {"total", state.model.parameter_count()}};
      report["samples"] = data.size();
      report["train_seconds"] = seconds;
      if (!log.empty()) report["final_data_loss"] = log.back().data_loss;
      if (has_split(all_views, "test")) {
        const EvalResult e = evaluate(state.model, bvh, select_views(all_views, "test"));
        report["eval"] = eval_json(e);
        out << format_report_table(e.views, e.total);
      }
      write_json(report, run_dir / "report.json");
      return kExitOk;
    }

    if (*render) {
      Model<float> model = load_model(r_ckpt);
      const fs::path scene(r_scene);
      const Mesh mesh = load_obj(r_mesh.empty() ? scene / "mesh.obj" : fs::path(r_mesh));
      const Bvh bvh(mesh);
      if (r_only_level >= 0) {
        if (static_cast<size_t>(r_only_level) >= model.features.num_levels()) {
          throw UsageError("--only-level out of range");
        }
        for (size_t i = 0; i < model.features.num_levels(); ++i) model.features.active[i] = int(i) == r_only_level;
      }
      std::vector<View> views = select_views(load_views(scene), r_split);
      if (!r_view.empty()) {
        std::erase_if(views, [&](const View& v) { return v.name != r_view; });
        if (views.empty()) throw DataError("no view named '" + r_view + "'");
      }
      fs::create_directories(r_out);
      for (const View& v : views) {
        const Image img = render_prediction(model, bvh, v);
        if (model.config.task == Task::Texture) {
          write_png(img, fs::path(r_out) / (v.name + ".png"));
        } else {
          write_pfm(img, fs::path(r_out) / (v.name + ".pfm"));
          write_png(gamma_image(img), fs::path(r_out) / (v.name + ".png"));
        }
      }
      out << "rendered " << views.size() << " views to " << r_out << "\n";
      return kExitOk;
    }

    if (*eval) {
      const Model<float> model = load_model(e_ckpt);
      const fs::path scene(e_scene);
      const Mesh mesh = load_obj(e_mesh.empty() ? scene / "mesh.obj" : fs::path(e_mesh));
      const Bvh bvh(mesh);
      const std::vector<View> views = select_views(load_views(scene), e_split);
      if (views.empty()) throw DataError("no views selected for evaluation");
      const EvalResult e = evaluate(model, bvh, views, e_images);
      out << format_report_table(e.views, e.total);
      if (!e_out.empty()) write_json(eval_json(e), e_out);
      return kExitOk;
    }

    if (*bench) {
      const Model<float> model = load_model(b_ckpt);
      const Mesh& mesh = model.hierarchy->meshes.at(0);
      const auto baseline = RffBaseline<float>::make(model.config.output_dim(), b_opts.seed);
      const BenchmarkReport r = benchmark_inference(model, mesh, baseline, b_opts);
      out << format_benchmark(r);
      if (!b_out.empty()) {
        auto stats = [](const TimingStats& s) {
          return json{{"median_ms", s.median_ms}, {"mean_ms", s.mean_ms}, {"reps", s.reps}};
        };
        write_json({{"batch", r.batch}, {"warmup", r.warmup}, {"ours", stats(r.ours)},
                    {"baseline", stats(r.baseline)}, {"speedup", r.speedup}, {"ours_params", r.ours_params},
                    {"baseline_params", r.baseline_params}},
                   b_out);
      }
      return kExitOk;
    }
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}

}  // namespace meshfeat
