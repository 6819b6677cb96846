#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "flowmno/commands.hpp"
#include "flowmno/config.hpp"

namespace fs = std::filesystem;
using namespace flowmno;

int main(int argc, char** argv) {
  CLI::App app{"flowmno: flow estimation, flow operator training and trajectory prediction"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out;
  app.add_option("--config", config_path, "key=value configuration file")->check(CLI::ExistingFile);
  app.add_option("--seed", seed, "seed for data generation, initialisation and shuffling");
  app.add_option("--out", out, "output file or directory");

  auto* gen = app.add_subcommand("gen-data", "generate a synthetic crowd dataset");

  auto* flow = app.add_subcommand("flow", "estimate dense flow between two PGM frames");
  std::string prev, next, viz_out;
  flow->add_option("prev", prev)->required();
  flow->add_option("next", next)->required();
  flow->add_option("--viz", viz_out, "also write a colour-coded PPM");

  auto* train = app.add_subcommand("train", "train the flow operator on a generated dataset");
  std::string data_dir;
  train->add_option("data_dir", data_dir)->required();

  auto* predict = app.add_subcommand("predict", "roll out tracks from detections and a flow field");
  std::string ckpt, flow_file, dets;
  std::optional<int> horizon;
  std::optional<std::int64_t> frame;
  predict->add_option("checkpoint", ckpt)->required();
  predict->add_option("flow", flow_file)->required();
  predict->add_option("detections", dets)->required();
  predict->add_option("--horizon", horizon, "prediction steps (default from config, 12)");
  predict->add_option("--frame", frame, "frame id of the start detections (default: latest)");

  auto* eval = app.add_subcommand("eval", "ADE / FDE of predicted tracks against ground truth");
  std::string pred_tracks, gt_tracks;
  eval->add_option("pred", pred_tracks)->required();
  eval->add_option("gt", gt_tracks)->required();

  auto* nav = app.add_subcommand("navigate", "closed-loop navigation through a scenario");
  std::string scenario_file, nav_ckpt;
  bool oracle = false;
  nav->add_option("scenario", scenario_file)->required();
  auto* ckpt_opt = nav->add_option("--checkpoint", nav_ckpt, "flow operator for predictions");
  auto* oracle_flag = nav->add_flag("--oracle", oracle, "constant-velocity ground-truth predictions");
  ckpt_opt->excludes(oracle_flag);

  auto* viz = app.add_subcommand("viz", "draw boxes and mean-flow arrows over a frame");
  std::string viz_frame, viz_flow, viz_dets;
  double arrow_scale = 4.0;
  viz->add_option("frame", viz_frame)->required();
  viz->add_option("flow", viz_flow)->required();
  viz->add_option("detections", viz_dets);
  viz->add_option("--scale", arrow_scale, "arrow length per pixel of flow");

  CLI11_PARSE(app, argc, argv);

  auto need_out = [&](const char* what) {
    if (out.empty()) throw commands::CommandError(std::string("--out <") + what + "> is required");
    return fs::path(out);
  };

  try {
    config::RunConfig cfg =
        config_path.empty() ? config::RunConfig{} : config::load_run_config_file(config_path);
    if (seed) cfg.set_seed(*seed);

    if (gen->parsed()) {
      commands::gen_data(cfg, need_out("dir"), std::cout);
    } else if (flow->parsed()) {
      std::optional<fs::path> v;
      if (!viz_out.empty()) v = viz_out;
      commands::flow(cfg, prev, next, need_out("file.flo"), v, std::cout);
    } else if (train->parsed()) {
      commands::train(cfg, data_dir, need_out("checkpoint"), std::cout);
    } else if (predict->parsed()) {
      if (horizon) cfg.horizon = *horizon;
      commands::predict(cfg, ckpt, flow_file, dets, need_out("tracks.tsv"), frame, std::cout);
    } else if (eval->parsed()) {
      std::optional<fs::path> csv;
      if (!out.empty()) csv = out;
      std::cout << commands::eval(pred_tracks, gt_tracks, csv);
    } else if (nav->parsed()) {
      if (!oracle && nav_ckpt.empty()) {
        throw commands::CommandError("navigate needs --checkpoint <file> or --oracle");
      }
      std::optional<fs::path> c;
      if (!nav_ckpt.empty()) c = nav_ckpt;
      commands::navigate(scenario_file, c, seed.value_or(0), need_out("trace.tsv"), std::cout);
    } else if (viz->parsed()) {
      std::optional<fs::path> d;
      if (!viz_dets.empty()) d = viz_dets;
      commands::viz(viz_frame, viz_flow, d, arrow_scale, need_out("image.ppm"));
    }
  } catch (const config::ConfigError& e) {
    std::cerr << "error: invalid config: " << e.what() << "\n";
    return 2;
  } catch (const commands::CommandError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
