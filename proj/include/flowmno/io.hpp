#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "flowmno/core/grid.hpp"
#include "flowmno/detect.hpp"
#include "flowmno/trajectory.hpp"

namespace flowmno::io {

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// 202021.25 as a little-endian float reads as the ASCII bytes "PIEH".
inline constexpr float kFloSentinel = 202021.25f;

// Binary PGM (P5), maxval 255.
std::string encode_pgm(const GrayFrame& frame);
GrayFrame decode_pgm(const std::string& bytes);
void write_pgm(const std::filesystem::path& path, const GrayFrame& frame);
GrayFrame read_pgm(const std::filesystem::path& path);

// Middlebury .flo: sentinel, i32 width, i32 height, row-major f32 (u, v) pairs.
// Components are stored in single precision.
std::string encode_flo(const FlowField& flow);
FlowField decode_flo(const std::string& bytes);
void write_flo(const std::filesystem::path& path, const FlowField& flow);
FlowField read_flo(const std::filesystem::path& path);

/// 8-bit RGB image, row-major, 3 bytes per pixel.
struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<unsigned char> pixels;

  void set(int x, int y, unsigned char r, unsigned char g, unsigned char b);
};

std::string encode_ppm(const RgbImage& img);
void write_ppm(const std::filesystem::path& path, const RgbImage& img);

/// Hue from atan2(v, u), full saturation, value = magnitude / max magnitude.
RgbImage flow_to_color(const FlowField& flow);

/// Greyscale backdrop with box outlines and per-box mean-flow arrows.
RgbImage draw_box_flow(const GrayFrame& frame, const FlowField& flow,
                       const std::vector<detect::Detection>& dets, double arrow_scale);

// TSV tables. Readers skip a header line starting with a non-numeric token and
// accept any whitespace as separator.
std::string encode_tracks(const std::vector<trajectory::Track>& tracks);
std::vector<trajectory::Track> decode_tracks(const std::string& text);
void write_tracks(const std::filesystem::path& path, const std::vector<trajectory::Track>& tracks);
std::vector<trajectory::Track> read_tracks(const std::filesystem::path& path);

std::string encode_detections(const std::vector<detect::Detection>& dets);
std::vector<detect::Detection> decode_detections(const std::string& text);
void write_detections(const std::filesystem::path& path,
                      const std::vector<detect::Detection>& dets);
std::vector<detect::Detection> read_detections(const std::filesystem::path& path);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& bytes);

/// Shortest round-trip decimal for a double ("inf" for infinity).
std::string format_double(double v);

}  // namespace flowmno::io
