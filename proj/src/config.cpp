#include "flowmno/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <iterator>
#include <map>
#include <set>
#include <sstream>

#include "flowmno/io.hpp"

namespace flowmno::config {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void bad_value(const Entry& e, const char* expected) {
  throw ConfigError("line " + std::to_string(e.line) + ": key '" + e.key + "' expects " + expected +
                    ", got '" + e.value + "'");
}

template <typename T>
T parse_number(const Entry& e, const char* expected) {
  T v{};
  const auto* first = e.value.data();
  const auto* last = first + e.value.size();
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last) bad_value(e, expected);
  return v;
}

struct Field {
  std::string key;
  std::function<void(RunConfig&, const Entry&)> set;
  std::function<std::string(const RunConfig&)> get;
};

template <typename T>
Field int_field(std::string key, T RunConfig::*section, int T::*member) {
  return {std::move(key),
          [=](RunConfig& c, const Entry& e) { c.*section.*member = to_int(e); },
          [=](const RunConfig& c) { return std::to_string(c.*section.*member); }};
}

template <typename T>
Field double_field(std::string key, T RunConfig::*section, double T::*member) {
  return {std::move(key),
          [=](RunConfig& c, const Entry& e) { c.*section.*member = to_double(e); },
          [=](const RunConfig& c) { return io::format_double(c.*section.*member); }};
}

template <typename T>
Field u64_field(std::string key, T RunConfig::*section, std::uint64_t T::*member) {
  return {std::move(key),
          [=](RunConfig& c, const Entry& e) { c.*section.*member = to_u64(e); },
          [=](const RunConfig& c) { return std::to_string(c.*section.*member); }};
}

const std::vector<Field>& fields() {
  using F = farneback::Params;
  using M = mno::ModelConfig;
  using T = mno::TrainConfig;
  using G = gvo::GvoConfig;
  using S = synth::SceneConfig;
  static const std::vector<Field> table = {
      {"seed", [](RunConfig& c, const Entry& e) { c.set_seed(to_u64(e)); },
       [](const RunConfig& c) { return std::to_string(c.scene.seed); }},
      double_field("flow.pyramid_scale", &RunConfig::flow, &F::pyramid_scale),
      int_field("flow.levels", &RunConfig::flow, &F::levels),
      int_field("flow.window_size", &RunConfig::flow, &F::window_size),
      int_field("flow.iterations_per_level", &RunConfig::flow, &F::iterations_per_level),
      int_field("flow.poly_n", &RunConfig::flow, &F::poly_n),
      double_field("flow.poly_sigma", &RunConfig::flow, &F::poly_sigma),
      int_field("model.grid_h", &RunConfig::model, &M::grid_h),
      int_field("model.grid_w", &RunConfig::model, &M::grid_w),
      int_field("model.modes_x", &RunConfig::model, &M::modes_x),
      int_field("model.modes_y", &RunConfig::model, &M::modes_y),
      int_field("model.width", &RunConfig::model, &M::width),
      int_field("model.num_blocks", &RunConfig::model, &M::num_blocks),
      int_field("model.projection_hidden", &RunConfig::model, &M::projection_hidden),
      u64_field("model.seed", &RunConfig::model, &M::seed),
      int_field("train.epochs", &RunConfig::train, &T::epochs),
      int_field("train.batch_size", &RunConfig::train, &T::batch_size),
      double_field("train.learning_rate", &RunConfig::train, &T::learning_rate),
      int_field("train.scheduler_step", &RunConfig::train, &T::scheduler_step),
      double_field("train.scheduler_gamma", &RunConfig::train, &T::scheduler_gamma),
      double_field("train.split_train", &RunConfig::train, &T::split_train),
      double_field("train.split_val", &RunConfig::train, &T::split_val),
      double_field("train.split_test", &RunConfig::train, &T::split_test),
      u64_field("train.seed", &RunConfig::train, &T::seed),
      {"loss.kind",
       [](RunConfig& c, const Entry& e) {
         if (e.value == "mse") {
           c.loss.kind = mno::LossKind::mse;
         } else if (e.value == "sobolev") {
           c.loss.kind = mno::LossKind::sobolev;
         } else {
           bad_value(e, "'mse' or 'sobolev'");
         }
       },
       [](const RunConfig& c) {
         return std::string(c.loss.kind == mno::LossKind::mse ? "mse" : "sobolev");
       }},
      {"loss.k", [](RunConfig& c, const Entry& e) { c.loss.k = to_int(e); },
       [](const RunConfig& c) { return std::to_string(c.loss.k); }},
      double_field("gvo.horizon", &RunConfig::gvo, &G::horizon),
      double_field("gvo.dt", &RunConfig::gvo, &G::dt),
      int_field("gvo.n_phi_samples", &RunConfig::gvo, &G::n_phi_samples),
      int_field("gvo.n_speed_samples", &RunConfig::gvo, &G::n_speed_samples),
      double_field("gvo.phi_max", &RunConfig::gvo, &G::phi_max),
      double_field("gvo.v_max", &RunConfig::gvo, &G::v_max),
      double_field("gvo.safety_margin", &RunConfig::gvo, &G::safety_margin),
      double_field("gvo.goal_weight", &RunConfig::gvo, &G::goal_weight),
      double_field("gvo.steering_weight", &RunConfig::gvo, &G::steering_weight),
      int_field("scene.width", &RunConfig::scene, &S::width),
      int_field("scene.height", &RunConfig::scene, &S::height),
      int_field("scene.n_agents", &RunConfig::scene, &S::n_agents),
      double_field("scene.agent_radius", &RunConfig::scene, &S::agent_radius),
      double_field("scene.speed_min", &RunConfig::scene, &S::speed_min),
      double_field("scene.speed_max", &RunConfig::scene, &S::speed_max),
      double_field("scene.direction_noise_sigma", &RunConfig::scene, &S::direction_noise_sigma),
      int_field("scene.n_frames", &RunConfig::scene, &S::n_frames),
      u64_field("scene.seed", &RunConfig::scene, &S::seed),
      double_field("scene.background_texture_amplitude", &RunConfig::scene,
                   &S::background_texture_amplitude),
      {"data.n_scenes", [](RunConfig& c, const Entry& e) { c.n_scenes = to_int(e); },
       [](const RunConfig& c) { return std::to_string(c.n_scenes); }},
      {"predict.horizon", [](RunConfig& c, const Entry& e) { c.horizon = to_int(e); },
       [](const RunConfig& c) { return std::to_string(c.horizon); }},
      {"detect.iou_threshold", [](RunConfig& c, const Entry& e) { c.iou_threshold = to_double(e); },
       [](const RunConfig& c) { return io::format_double(c.iou_threshold); }},
      {"detect.conf_threshold",
       [](RunConfig& c, const Entry& e) { c.conf_threshold = to_double(e); },
       [](const RunConfig& c) { return io::format_double(c.conf_threshold); }},
      {"path.data", [](RunConfig& c, const Entry& e) { c.data_dir = e.value; },
       [](const RunConfig& c) { return c.data_dir.string(); }},
      {"path.checkpoint", [](RunConfig& c, const Entry& e) { c.checkpoint = e.value; },
       [](const RunConfig& c) { return c.checkpoint.string(); }},
  };
  return table;
}

template <typename Fn>
void check(const char* section, Fn&& fn) {
  try {
    fn();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string(section) + ": " + e.what());
  }
}

}  // namespace

std::vector<Entry> parse_key_values(const std::string& text) {
  std::vector<Entry> out;
  std::set<std::string> seen;
  std::istringstream in(text);
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const auto hash = raw.find('#');
    const std::string body = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(line) + ": expected key=value, got '" + body + "'");
    }
    Entry e{trim(body.substr(0, eq)), trim(body.substr(eq + 1)), line};
    if (e.key.empty()) throw ConfigError("line " + std::to_string(line) + ": empty key");
    if (!seen.insert(e.key).second) {
      throw ConfigError("line " + std::to_string(line) + ": duplicate key '" + e.key + "'");
    }
    out.push_back(std::move(e));
  }
  return out;
}

double to_double(const Entry& e) {
  if (e.value == "inf") return std::numeric_limits<double>::infinity();
  return parse_number<double>(e, "a number");
}

int to_int(const Entry& e) { return parse_number<int>(e, "an integer"); }

std::uint64_t to_u64(const Entry& e) {
  return parse_number<std::uint64_t>(e, "an unsigned 64-bit integer");
}

RunConfig::RunConfig() { set_seed(scene.seed); }

void RunConfig::set_seed(std::uint64_t seed) {
  scene.seed = seed;
  model.seed = seed;
  train.seed = seed;
}

void RunConfig::validate() const {
  check("flow", [&] { flow.validate(); });
  check("model", [&] { model.validate(); });
  check("train", [&] { train.validate(); });
  check("loss", [&] { loss.validate(); });
  check("gvo", [&] { gvo.validate(); });
  check("scene", [&] { scene.validate(); });
  if (n_scenes < 10) throw ConfigError("data: n_scenes must be >= 10");
  if (horizon < 1) throw ConfigError("predict: horizon must be >= 1");
  if (!(iou_threshold >= 0.0 && iou_threshold <= 1.0) ||
      !(conf_threshold >= 0.0 && conf_threshold <= 1.0)) {
    throw ConfigError("detect: thresholds must lie in [0, 1]");
  }
}

RunConfig load_run_config(const std::string& text) {
  std::map<std::string, const Field*> by_key;
  for (const auto& f : fields()) by_key[f.key] = &f;
  RunConfig cfg;
  for (const auto& e : parse_key_values(text)) {
    const auto it = by_key.find(e.key);
    if (it == by_key.end()) {
      throw ConfigError("line " + std::to_string(e.line) + ": unknown key '" + e.key + "'");
    }
    it->second->set(cfg, e);
  }
  cfg.validate();
  return cfg;
}

RunConfig load_run_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  return load_run_config({std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()});
}

std::vector<std::string> run_config_keys() {
  std::vector<std::string> keys;
  for (const auto& f : fields()) keys.push_back(f.key);
  return keys;
}

std::string to_text(const RunConfig& cfg) {
  std::string out;
  for (const auto& f : fields()) out += f.key + "=" + f.get(cfg) + "\n";
  return out;
}

}  // namespace flowmno::config
