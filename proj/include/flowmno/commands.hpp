#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "flowmno/config.hpp"
#include "flowmno/synth_crowd.hpp"

namespace flowmno::commands {

namespace fs = std::filesystem;

/// Input or environment problem reported to the user; the CLI maps it to a
/// nonzero exit status.
class CommandError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Layout of a generated dataset directory.
struct DataLayout {
  static fs::path manifest(const fs::path& root) { return root / "manifest.tsv"; }
  static fs::path config(const fs::path& root) { return root / "config.txt"; }
  static std::string scene_name(std::size_t index);
  static fs::path frame(const fs::path& scene_dir, std::size_t t);
  static fs::path flow(const fs::path& scene_dir, std::size_t t);
  static fs::path tracks(const fs::path& scene_dir) { return scene_dir / "tracks.tsv"; }
  static fs::path detections(const fs::path& scene_dir) { return scene_dir / "detections.tsv"; }
};

struct ManifestRow {
  std::string scene;
  std::string split;  // train, val or test
  std::uint64_t seed = 0;
};

std::vector<ManifestRow> read_manifest(const fs::path& root);

/// Writes frames, flows, tracks, detections and the split manifest. Output is
/// staged next to `out_dir` and moved into place only when complete.
void gen_data(const config::RunConfig& cfg, const fs::path& out_dir, std::ostream& log);

void flow(const config::RunConfig& cfg, const fs::path& prev, const fs::path& next,
          const fs::path& out_flo, const std::optional<fs::path>& viz_ppm, std::ostream& log);

/// Flow pairs of every scene in `split` read back from disk.
std::vector<std::pair<FlowField, FlowField>> load_pairs(const fs::path& data_dir,
                                                        const std::string& split);

fs::path history_path(const fs::path& checkpoint);

/// One-line echo of the optimisation settings.
std::string run_header(const config::RunConfig& cfg);

void train(const config::RunConfig& cfg, const fs::path& data_dir, const fs::path& out_checkpoint,
           std::ostream& log);

/// Detections of frame `frame` (or of the latest frame when unset) become the
/// start centroids.
void predict(const config::RunConfig& cfg, const fs::path& checkpoint, const fs::path& flow_file,
             const fs::path& detections_file, const fs::path& out_tracks,
             std::optional<std::int64_t> frame, std::ostream& log);

/// Returns the text report; writes per-pedestrian CSV when `out_csv` is set.
std::string eval(const fs::path& pred, const fs::path& gt, const std::optional<fs::path>& out_csv);

/// Uses the constant-velocity oracle when `checkpoint` is empty.
void navigate(const fs::path& scenario_file, const std::optional<fs::path>& checkpoint,
              std::uint64_t seed, const fs::path& out_trace, std::ostream& log);

void viz(const fs::path& frame, const fs::path& flow_file,
         const std::optional<fs::path>& detections_file, double arrow_scale, const fs::path& out_ppm);

}  // namespace flowmno::commands
