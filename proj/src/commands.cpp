#include "flowmno/commands.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <ostream>
#include <sstream>

#include "flowmno/detect.hpp"
#include "flowmno/farneback.hpp"
#include "flowmno/io.hpp"
#include "flowmno/mno/checkpoint.hpp"
#include "flowmno/mno/train.hpp"
#include "flowmno/scenario.hpp"
#include "flowmno/trajectory.hpp"

namespace flowmno::commands {

namespace {

std::string fixed2(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

void require_readable(const fs::path& p, const char* what) {
  std::error_code ec;
  if (!fs::is_regular_file(p, ec)) {
    throw CommandError(std::string("cannot read ") + what + ": " + p.string());
  }
}

// Writes every file under a temporary name first, then renames them all, so a
// failure never leaves a partial set of outputs behind.
void write_all(const std::vector<std::pair<fs::path, std::string>>& files) {
  std::vector<fs::path> staged;
  try {
    for (const auto& [path, bytes] : files) {
      fs::path tmp = path;
      tmp += ".partial";
      staged.push_back(tmp);
      io::write_file(tmp, bytes);
    }
  } catch (const std::exception& e) {
    for (const auto& t : staged) {
      std::error_code ec;
      fs::remove(t, ec);
    }
    throw CommandError(e.what());
  }
  for (std::size_t i = 0; i < files.size(); ++i) fs::rename(staged[i], files[i].first);
}

template <typename Fn>
auto reading(const fs::path& p, const char* what, Fn&& fn) {
  require_readable(p, what);
  try {
    return fn();
  } catch (const io::FormatError& e) {
    throw CommandError(std::string(what) + " " + p.string() + ": " + e.what());
  } catch (const mno::CheckpointError& e) {
    throw CommandError(std::string(what) + " " + p.string() + ": " + e.what());
  }
}

const char* split_of(const synth::Dataset& ds, std::size_t i) {
  if (std::find(ds.train.begin(), ds.train.end(), i) != ds.train.end()) return "train";
  if (std::find(ds.val.begin(), ds.val.end(), i) != ds.val.end()) return "val";
  return "test";
}

}  // namespace

std::string DataLayout::scene_name(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "scene_%03zu", index);
  return buf;
}

fs::path DataLayout::frame(const fs::path& scene_dir, std::size_t t) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "frame_%04zu.pgm", t);
  return scene_dir / buf;
}

fs::path DataLayout::flow(const fs::path& scene_dir, std::size_t t) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "flow_%04zu.flo", t);
  return scene_dir / buf;
}

std::vector<ManifestRow> read_manifest(const fs::path& root) {
  const fs::path path = DataLayout::manifest(root);
  require_readable(path, "manifest");
  std::istringstream in(io::read_file(path));
  std::string line;
  std::getline(in, line);  // header
  std::vector<ManifestRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream fields(line);
    ManifestRow r;
    if (!(fields >> r.scene >> r.split >> r.seed) ||
        (r.split != "train" && r.split != "val" && r.split != "test")) {
      throw CommandError("malformed manifest line: '" + line + "'");
    }
    rows.push_back(r);
  }
  return rows;
}

void gen_data(const config::RunConfig& cfg, const fs::path& out_dir, std::ostream& log) {
  try {
    cfg.validate();
  } catch (const config::ConfigError& e) {
    throw CommandError(std::string("invalid config: ") + e.what());
  }
  std::error_code ec;
  if (fs::exists(out_dir, ec) && !(fs::is_directory(out_dir) && fs::is_empty(out_dir))) {
    throw CommandError("output directory exists and is not empty: " + out_dir.string());
  }
  const auto ds = synth::make_dataset(cfg.scene, static_cast<std::size_t>(cfg.n_scenes));

  fs::path staging = out_dir;
  staging += ".partial";
  try {
    fs::remove_all(staging);
    fs::create_directories(staging);
  } catch (const fs::filesystem_error& e) {
    throw CommandError("cannot write output directory " + out_dir.string() + ": " +
                       e.code().message());
  }
  try {
    std::string manifest = "scene\tsplit\tseed\n";
    for (std::size_t i = 0; i < ds.scenes.size(); ++i) {
      const auto& s = ds.scenes[i];
      const std::string name = DataLayout::scene_name(i);
      manifest += name + "\t" + split_of(ds, i) + "\t" + std::to_string(s.seed) + "\n";
      const fs::path dir = staging / name;
      fs::create_directories(dir);
      for (std::size_t t = 0; t < s.frames.size(); ++t) io::write_pgm(DataLayout::frame(dir, t), s.frames[t]);
      for (std::size_t t = 0; t < s.flows.size(); ++t) io::write_flo(DataLayout::flow(dir, t), s.flows[t]);
      io::write_tracks(DataLayout::tracks(dir), s.tracks);
      std::vector<detect::Detection> dets;
      for (const auto& d : s.detections) dets.insert(dets.end(), d.begin(), d.end());
      io::write_detections(DataLayout::detections(dir), dets);
    }
    io::write_file(DataLayout::manifest(staging), manifest);
    io::write_file(DataLayout::config(staging), config::to_text(cfg));
    if (fs::exists(out_dir)) fs::remove(out_dir);
    fs::rename(staging, out_dir);
  } catch (const std::exception& e) {
    fs::remove_all(staging, ec);
    throw CommandError("cannot write output directory " + out_dir.string() + ": " + e.what());
  }
  log << "wrote " << ds.scenes.size() << " scenes (train " << ds.train.size() << ", val "
      << ds.val.size() << ", test " << ds.test.size() << ") to " << out_dir.string() << "\n";
}

void flow(const config::RunConfig& cfg, const fs::path& prev, const fs::path& next,
          const fs::path& out_flo, const std::optional<fs::path>& viz_ppm, std::ostream& log) {
  const GrayFrame a = reading(prev, "frame", [&] { return io::read_pgm(prev); });
  const GrayFrame b = reading(next, "frame", [&] { return io::read_pgm(next); });
  if (a.width() != b.width() || a.height() != b.height()) {
    throw CommandError("frame dimensions differ: " + shape_string(a.width(), a.height()) + " vs " +
                       shape_string(b.width(), b.height()));
  }
  const FlowField f = farneback::estimate_flow(a, b, cfg.flow);
  std::vector<std::pair<fs::path, std::string>> files{{out_flo, io::encode_flo(f)}};
  if (viz_ppm) files.emplace_back(*viz_ppm, io::encode_ppm(io::flow_to_color(f)));
  write_all(files);
  log << "wrote " << out_flo.string() << " (" << shape_string(f.width(), f.height()) << ")\n";
}

std::vector<std::pair<FlowField, FlowField>> load_pairs(const fs::path& data_dir,
                                                        const std::string& split) {
  std::vector<std::pair<FlowField, FlowField>> pairs;
  for (const auto& row : read_manifest(data_dir)) {
    if (row.split != split) continue;
    const fs::path dir = data_dir / row.scene;
    std::vector<FlowField> flows;
    for (std::size_t t = 0; fs::exists(DataLayout::flow(dir, t)); ++t) {
      const fs::path p = DataLayout::flow(dir, t);
      flows.push_back(reading(p, "flow", [&] { return io::read_flo(p); }));
    }
    for (std::size_t t = 0; t + 1 < flows.size(); ++t) pairs.emplace_back(flows[t], flows[t + 1]);
  }
  return pairs;
}

fs::path history_path(const fs::path& checkpoint) {
  fs::path p = checkpoint;
  p.replace_extension();
  p += ".history.csv";
  return p;
}

std::string run_header(const config::RunConfig& cfg) {
  const auto& t = cfg.train;
  auto g = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%g", v);
    return std::string(buf);
  };
  return "epochs=" + std::to_string(t.epochs) + " batch=" + std::to_string(t.batch_size) +
         " lr=" + g(t.learning_rate) + " step=" + std::to_string(t.scheduler_step) +
         " gamma=" + g(t.scheduler_gamma) +
         " loss=" + (cfg.loss.kind == mno::LossKind::mse ? "mse" : "sobolev") +
         " k=" + std::to_string(cfg.loss.k) + " seed=" + std::to_string(t.seed);
}

void train(const config::RunConfig& cfg, const fs::path& data_dir, const fs::path& out_checkpoint,
           std::ostream& log) {
  try {
    cfg.validate();
  } catch (const config::ConfigError& e) {
    throw CommandError(std::string("invalid config: ") + e.what());
  }
  if (!fs::exists(DataLayout::manifest(data_dir))) {
    throw CommandError("missing data: no manifest in " + data_dir.string());
  }
  const auto train_set = load_pairs(data_dir, "train");
  const auto val_set = load_pairs(data_dir, "val");
  if (train_set.empty()) throw CommandError("missing data: no training pairs in " + data_dir.string());
  const auto& mc = cfg.model;
  const FlowField& sample = train_set.front().first;
  if (sample.width() != mc.grid_w || sample.height() != mc.grid_h) {
    throw CommandError("model grid " + shape_string(mc.grid_w, mc.grid_h) +
                       " does not match data grid " + shape_string(sample.width(), sample.height()));
  }
  if (train_set.size() < static_cast<std::size_t>(cfg.train.batch_size)) {
    throw CommandError("batch size " + std::to_string(cfg.train.batch_size) +
                       " larger than train split (" + std::to_string(train_set.size()) + " pairs)");
  }

  log << run_header(cfg) << "\n";
  log << "train_pairs=" << train_set.size() << " val_pairs=" << val_set.size() << "\n";
  const auto result = mno::train(mno::MnoModel::initialized(mc), train_set, val_set, cfg.train,
                                 cfg.loss, [&](const mno::EpochRecord& r) {
                                   log << "epoch " << r.epoch << " lr " << r.lr << " train "
                                       << r.train_loss << " val " << r.val_loss << "\n";
                                   log.flush();
                                 });
  std::string csv = "epoch,lr,train_loss,val_loss\n";
  for (const auto& r : result.history) {
    csv += std::to_string(r.epoch) + "," + io::format_double(r.lr) + "," +
           io::format_double(r.train_loss) + "," + io::format_double(r.val_loss) + "\n";
  }
  write_all({{out_checkpoint, mno::encode_checkpoint(result.model)},
             {history_path(out_checkpoint), csv}});
  log << "best epoch " << result.best_epoch << "; wrote " << out_checkpoint.string() << "\n";
}

void predict(const config::RunConfig& cfg, const fs::path& checkpoint, const fs::path& flow_file,
             const fs::path& detections_file, const fs::path& out_tracks,
             std::optional<std::int64_t> frame, std::ostream& log) {
  if (cfg.horizon < 1) throw CommandError("horizon must be >= 1");
  const auto model = reading(checkpoint, "checkpoint", [&] { return mno::load_checkpoint(checkpoint); });
  const FlowField f = reading(flow_file, "flow", [&] { return io::read_flo(flow_file); });
  const auto dets = reading(detections_file, "detections",
                            [&] { return io::read_detections(detections_file); });
  const auto& mc = model.config();
  if (f.width() != mc.grid_w || f.height() != mc.grid_h) {
    throw CommandError("grid mismatch: checkpoint grid " + shape_string(mc.grid_w, mc.grid_h) +
                       " vs flow grid " + shape_string(f.width(), f.height()));
  }
  std::int64_t start_frame = 0;
  if (frame) {
    start_frame = *frame;
  } else {
    for (const auto& d : dets) start_frame = std::max(start_frame, d.frame_id);
  }
  std::vector<trajectory::StartState> starts;
  std::int64_t next_id = 0;
  for (const auto& d : dets) {
    if (d.frame_id != start_frame) continue;
    starts.push_back({d.ped_id ? *d.ped_id : next_id, detect::centroid(d)});
    ++next_id;
  }
  std::vector<trajectory::Track> tracks;
  if (!starts.empty()) tracks = trajectory::predict_tracks(model, f, starts, cfg.horizon, start_frame);
  write_all({{out_tracks, io::encode_tracks(tracks)}});
  log << "predicted " << tracks.size() << " tracks over " << cfg.horizon << " steps from frame "
      << start_frame << "\n";
}

std::string eval(const fs::path& pred, const fs::path& gt, const std::optional<fs::path>& out_csv) {
  const auto p = reading(pred, "tracks", [&] { return io::read_tracks(pred); });
  const auto g = reading(gt, "tracks", [&] { return io::read_tracks(gt); });
  trajectory::Evaluation ev;
  try {
    ev = trajectory::evaluate(p, g);
  } catch (const std::invalid_argument& e) {
    throw CommandError(std::string("misaligned tracks: ") + e.what());
  }
  std::string text = "ped\tADE / FDE\n";
  std::string csv = "ped_id,ade,fde\n";
  for (const auto& m : ev.per_ped) {
    text += std::to_string(m.ped_id) + "\t" + fixed2(m.ade) + " / " + fixed2(m.fde) + "\n";
    csv += std::to_string(m.ped_id) + "," + io::format_double(m.ade) + "," +
           io::format_double(m.fde) + "\n";
  }
  text += "mean\t" + fixed2(ev.mean_ade) + " / " + fixed2(ev.mean_fde) + "\n";
  csv += "mean," + io::format_double(ev.mean_ade) + "," + io::format_double(ev.mean_fde) + "\n";
  if (out_csv) write_all({{*out_csv, csv}});
  return text;
}

void navigate(const fs::path& scenario_file, const std::optional<fs::path>& checkpoint,
              std::uint64_t seed, const fs::path& out_trace, std::ostream& log) {
  require_readable(scenario_file, "scenario");
  scenario::Scenario sc;
  try {
    sc = scenario::realize(scenario::parse_scenario(io::read_file(scenario_file)), seed);
  } catch (const config::ConfigError& e) {
    throw CommandError(std::string("invalid scenario: ") + e.what());
  }
  std::optional<mno::MnoModel> model;
  if (checkpoint) {
    model = reading(*checkpoint, "checkpoint", [&] { return mno::load_checkpoint(*checkpoint); });
  }
  gvo::Predictor predictor;
  try {
    predictor = model ? scenario::model_predictor(sc, *model) : scenario::oracle_predictor(sc);
  } catch (const std::invalid_argument& e) {
    throw CommandError(e.what());
  }
  const auto result = scenario::run(sc, predictor);
  write_all({{out_trace, scenario::encode_trace(result)}});
  log << (result.reached_goal ? "goal reached" : "goal not reached") << " after "
      << result.trace.size() << " steps; clearance "
      << io::format_double(scenario::actual_clearance(sc, result)) << "\n";
}

void viz(const fs::path& frame, const fs::path& flow_file,
         const std::optional<fs::path>& detections_file, double arrow_scale, const fs::path& out_ppm) {
  const GrayFrame img = reading(frame, "frame", [&] { return io::read_pgm(frame); });
  const FlowField f = reading(flow_file, "flow", [&] { return io::read_flo(flow_file); });
  if (img.width() != f.width() || img.height() != f.height()) {
    throw CommandError("frame " + shape_string(img.width(), img.height()) + " and flow " +
                       shape_string(f.width(), f.height()) + " differ in size");
  }
  std::vector<detect::Detection> dets;
  if (detections_file) {
    dets = reading(*detections_file, "detections",
                   [&] { return io::read_detections(*detections_file); });
  }
  write_all({{out_ppm, io::encode_ppm(io::draw_box_flow(img, f, dets, arrow_scale))}});
}

}  // namespace flowmno::commands
