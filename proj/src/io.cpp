#include "flowmno/io.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <map>
#include <numbers>
#include <sstream>

namespace flowmno::io {

namespace {

template <typename T>
void put_le(std::string& out, T value) {
  unsigned char b[sizeof(T)];
  std::memcpy(b, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(b, b + sizeof(T));
  out.append(reinterpret_cast<const char*>(b), sizeof(T));
}

template <typename T>
T get_le(const std::string& in, std::size_t& pos) {
  if (in.size() - pos < sizeof(T)) throw FormatError("flo: truncated file");
  unsigned char b[sizeof(T)];
  std::memcpy(b, in.data() + pos, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(b, b + sizeof(T));
  pos += sizeof(T);
  T v;
  std::memcpy(&v, b, sizeof(T));
  return v;
}

// Reads the next whitespace-delimited token of a PNM header, skipping comments.
std::string pnm_token(const std::string& in, std::size_t& pos) {
  while (pos < in.size()) {
    if (in[pos] == '#') {
      while (pos < in.size() && in[pos] != '\n') ++pos;
    } else if (std::isspace(static_cast<unsigned char>(in[pos]))) {
      ++pos;
    } else {
      break;
    }
  }
  const std::size_t start = pos;
  while (pos < in.size() && !std::isspace(static_cast<unsigned char>(in[pos]))) ++pos;
  if (start == pos) throw FormatError("pgm: truncated header");
  return in.substr(start, pos - start);
}

int parse_int(const std::string& s, const char* what) {
  int v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw FormatError(std::string("invalid ") + what + ": '" + s + "'");
  }
  return v;
}

double parse_double(const std::string& s, const char* what) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw FormatError(std::string("invalid ") + what + ": '" + s + "'");
  }
  return v;
}

std::int64_t parse_i64(const std::string& s, const char* what) {
  std::int64_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw FormatError(std::string("invalid ") + what + ": '" + s + "'");
  }
  return v;
}

// Splits text into rows of whitespace-separated fields, dropping blank lines and
// a leading header row.
std::vector<std::vector<std::string>> table_rows(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream lines(text);
  std::string line;
  bool first = true;
  while (std::getline(lines, line)) {
    std::istringstream fields(line);
    std::vector<std::string> row;
    for (std::string f; fields >> f;) row.push_back(f);
    if (row.empty()) continue;
    const bool header = first && !(std::isdigit(static_cast<unsigned char>(row[0][0])) ||
                                   row[0][0] == '-' || row[0][0] == '+');
    first = false;
    if (!header) rows.push_back(std::move(row));
  }
  return rows;
}

void draw_line(RgbImage& img, Vec2 a, Vec2 b, unsigned char r, unsigned char g, unsigned char bl) {
  const int steps = std::max(1, static_cast<int>(std::ceil((b - a).cwiseAbs().maxCoeff())));
  for (int i = 0; i <= steps; ++i) {
    const Vec2 p = a + (b - a) * (static_cast<double>(i) / steps);
    const int x = static_cast<int>(std::lround(p.x()));
    const int y = static_cast<int>(std::lround(p.y()));
    if (x >= 0 && y >= 0 && x < img.width && y < img.height) img.set(x, y, r, g, bl);
  }
}

}  // namespace

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot read " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw FormatError("write failed: " + path.string());
}

std::string format_double(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

std::string encode_pgm(const GrayFrame& frame) {
  std::string out = "P5\n" + std::to_string(frame.width()) + " " +
                    std::to_string(frame.height()) + "\n255\n";
  for (Eigen::Index y = 0; y < frame.height(); ++y) {
    for (Eigen::Index x = 0; x < frame.width(); ++x) {
      out.push_back(static_cast<char>(std::lround(frame(x, y) * 255.0)));
    }
  }
  return out;
}

GrayFrame decode_pgm(const std::string& bytes) {
  std::size_t pos = 0;
  if (pnm_token(bytes, pos) != "P5") throw FormatError("pgm: expected binary P5 magic");
  const int w = parse_int(pnm_token(bytes, pos), "pgm width");
  const int h = parse_int(pnm_token(bytes, pos), "pgm height");
  const int maxval = parse_int(pnm_token(bytes, pos), "pgm maxval");
  if (w <= 0 || h <= 0) throw FormatError("pgm: non-positive dimensions");
  if (maxval <= 0 || maxval > 255) throw FormatError("pgm: only 8-bit maxval supported");
  ++pos;  // single whitespace after maxval
  if (bytes.size() < pos + static_cast<std::size_t>(w) * h) throw FormatError("pgm: truncated data");
  Plane p(h, w);
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    p.data()[i] = static_cast<unsigned char>(bytes[pos + static_cast<std::size_t>(i)]) /
                  static_cast<double>(maxval);
  }
  return GrayFrame(std::move(p));
}

void write_pgm(const std::filesystem::path& path, const GrayFrame& frame) {
  write_file(path, encode_pgm(frame));
}

GrayFrame read_pgm(const std::filesystem::path& path) { return decode_pgm(read_file(path)); }

std::string encode_flo(const FlowField& flow) {
  std::string out;
  out.reserve(12 + static_cast<std::size_t>(flow.size()) * 8);
  put_le<float>(out, kFloSentinel);
  put_le<std::int32_t>(out, static_cast<std::int32_t>(flow.width()));
  put_le<std::int32_t>(out, static_cast<std::int32_t>(flow.height()));
  for (Eigen::Index y = 0; y < flow.height(); ++y) {
    for (Eigen::Index x = 0; x < flow.width(); ++x) {
      put_le<float>(out, static_cast<float>(flow.u()(y, x)));
      put_le<float>(out, static_cast<float>(flow.v()(y, x)));
    }
  }
  return out;
}

FlowField decode_flo(const std::string& bytes) {
  std::size_t pos = 0;
  if (get_le<float>(bytes, pos) != kFloSentinel) throw FormatError("flo: bad sentinel");
  const auto w = get_le<std::int32_t>(bytes, pos);
  const auto h = get_le<std::int32_t>(bytes, pos);
  if (w <= 0 || h <= 0) throw FormatError("flo: non-positive dimensions");
  if ((bytes.size() - pos) / 8 < static_cast<std::size_t>(w) * static_cast<std::size_t>(h)) {
    throw FormatError("flo: truncated data");
  }
  Plane u(h, w), v(h, w);
  for (Eigen::Index y = 0; y < h; ++y) {
    for (Eigen::Index x = 0; x < w; ++x) {
      u(y, x) = get_le<float>(bytes, pos);
      v(y, x) = get_le<float>(bytes, pos);
    }
  }
  if (pos != bytes.size()) throw FormatError("flo: trailing bytes");
  if (!u.allFinite() || !v.allFinite()) throw FormatError("flo: non-finite flow component");
  return FlowField(std::move(u), std::move(v));
}

void write_flo(const std::filesystem::path& path, const FlowField& flow) {
  write_file(path, encode_flo(flow));
}

FlowField read_flo(const std::filesystem::path& path) { return decode_flo(read_file(path)); }

void RgbImage::set(int x, int y, unsigned char r, unsigned char g, unsigned char b) {
  const auto i = 3 * (static_cast<std::size_t>(y) * width + x);
  pixels[i] = r;
  pixels[i + 1] = g;
  pixels[i + 2] = b;
}

std::string encode_ppm(const RgbImage& img) {
  std::string out = "P6\n" + std::to_string(img.width) + " " + std::to_string(img.height) + "\n255\n";
  out.append(reinterpret_cast<const char*>(img.pixels.data()), img.pixels.size());
  return out;
}

void write_ppm(const std::filesystem::path& path, const RgbImage& img) {
  write_file(path, encode_ppm(img));
}

RgbImage flow_to_color(const FlowField& flow) {
  RgbImage img{static_cast<int>(flow.width()), static_cast<int>(flow.height()), {}};
  img.pixels.assign(static_cast<std::size_t>(img.width) * img.height * 3, 0);
  const Plane mag = (flow.u().square() + flow.v().square()).sqrt();
  const double peak = mag.maxCoeff();
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      const double value = peak > 0.0 ? std::min(1.0, mag(y, x) / peak) : 0.0;
      double hue = std::atan2(flow.v()(y, x), flow.u()(y, x)) / (2.0 * std::numbers::pi);
      if (hue < 0.0) hue += 1.0;
      const double h6 = hue * 6.0;
      const int sector = static_cast<int>(h6) % 6;
      const double f = h6 - std::floor(h6);
      const double q = value * (1.0 - f);
      const double t = value * f;
      double r = 0, g = 0, b = 0;
      switch (sector) {
        case 0: r = value, g = t, b = 0; break;
        case 1: r = q, g = value, b = 0; break;
        case 2: r = 0, g = value, b = t; break;
        case 3: r = 0, g = q, b = value; break;
        case 4: r = t, g = 0, b = value; break;
        default: r = value, g = 0, b = q; break;
      }
      img.set(x, y, static_cast<unsigned char>(std::lround(r * 255)),
              static_cast<unsigned char>(std::lround(g * 255)),
              static_cast<unsigned char>(std::lround(b * 255)));
    }
  }
  return img;
}

RgbImage draw_box_flow(const GrayFrame& frame, const FlowField& flow,
                       const std::vector<detect::Detection>& dets, double arrow_scale) {
  require_same_shape(flow, FlowField(frame.width(), frame.height()), "draw_box_flow");
  RgbImage img{static_cast<int>(frame.width()), static_cast<int>(frame.height()), {}};
  img.pixels.resize(static_cast<std::size_t>(img.width) * img.height * 3);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      const auto g = static_cast<unsigned char>(std::lround(frame(x, y) * 255.0));
      img.set(x, y, g, g, g);
    }
  }
  for (const auto& d : dets) {
    const Vec2 tl(d.box.x, d.box.y);
    const Vec2 br(d.box.x + d.box.w - 1, d.box.y + d.box.h - 1);
    draw_line(img, tl, {br.x(), tl.y()}, 0, 255, 0);
    draw_line(img, {br.x(), tl.y()}, br, 0, 255, 0);
    draw_line(img, br, {tl.x(), br.y()}, 0, 255, 0);
    draw_line(img, {tl.x(), br.y()}, tl, 0, 255, 0);

    Vec2 mean = Vec2::Zero();
    int count = 0;
    for (int y = std::max(0, static_cast<int>(std::ceil(tl.y())));
         y <= std::min(img.height - 1, static_cast<int>(std::floor(br.y()))); ++y) {
      for (int x = std::max(0, static_cast<int>(std::ceil(tl.x())));
           x <= std::min(img.width - 1, static_cast<int>(std::floor(br.x()))); ++x) {
        mean += flow.at(x, y);
        ++count;
      }
    }
    if (count == 0) continue;
    mean /= count;
    const Vec2 c = detect::centroid(d);
    draw_line(img, c, c + arrow_scale * mean, 255, 0, 0);
  }
  return img;
}

std::string encode_tracks(const std::vector<trajectory::Track>& tracks) {
  std::string out = "frame_id\tped_id\tx\ty\n";
  for (const auto& t : tracks) {
    for (const auto& p : t.points) {
      out += std::to_string(p.frame_id) + "\t" + std::to_string(t.ped_id) + "\t" +
             format_double(p.position.x()) + "\t" + format_double(p.position.y()) + "\n";
    }
  }
  return out;
}

std::vector<trajectory::Track> decode_tracks(const std::string& text) {
  std::map<std::int64_t, trajectory::Track> by_id;
  std::vector<std::int64_t> order;
  for (const auto& row : table_rows(text)) {
    if (row.size() < 4) throw FormatError("tracks: expected frame_id ped_id x y");
    const auto frame = parse_i64(row[0], "frame_id");
    const auto ped = parse_i64(row[1], "ped_id");
    const Vec2 p(parse_double(row[2], "x"), parse_double(row[3], "y"));
    auto [it, inserted] = by_id.try_emplace(ped, trajectory::Track{ped, {}});
    if (inserted) order.push_back(ped);
    it->second.points.push_back({frame, p});
  }
  std::vector<trajectory::Track> out;
  for (auto id : order) {
    auto& t = by_id[id];
    std::stable_sort(t.points.begin(), t.points.end(),
                     [](const auto& a, const auto& b) { return a.frame_id < b.frame_id; });
    try {
      t.validate();
    } catch (const std::invalid_argument& e) {
      throw FormatError(std::string("tracks: ") + e.what());
    }
    out.push_back(std::move(t));
  }
  return out;
}

void write_tracks(const std::filesystem::path& path, const std::vector<trajectory::Track>& tracks) {
  write_file(path, encode_tracks(tracks));
}

std::vector<trajectory::Track> read_tracks(const std::filesystem::path& path) {
  return decode_tracks(read_file(path));
}

std::string encode_detections(const std::vector<detect::Detection>& dets) {
  std::string out = "frame_id\tped_id\tx\ty\tw\th\tconfidence\n";
  for (const auto& d : dets) {
    out += std::to_string(d.frame_id) + "\t" + (d.ped_id ? std::to_string(*d.ped_id) : "-1") +
           "\t" + format_double(d.box.x) + "\t" + format_double(d.box.y) + "\t" +
           format_double(d.box.w) + "\t" + format_double(d.box.h) + "\t" +
           format_double(d.confidence) + "\n";
  }
  return out;
}

std::vector<detect::Detection> decode_detections(const std::string& text) {
  std::vector<detect::Detection> out;
  for (const auto& row : table_rows(text)) {
    if (row.size() < 7) throw FormatError("detections: expected 7 columns");
    detect::Detection d;
    d.frame_id = parse_i64(row[0], "frame_id");
    const auto ped = parse_i64(row[1], "ped_id");
    if (ped >= 0) d.ped_id = ped;
    d.box = {parse_double(row[2], "x"), parse_double(row[3], "y"), parse_double(row[4], "w"),
             parse_double(row[5], "h")};
    d.confidence = parse_double(row[6], "confidence");
    try {
      d.validate();
    } catch (const std::invalid_argument& e) {
      throw FormatError(std::string("detections: ") + e.what());
    }
    out.push_back(d);
  }
  return out;
}

void write_detections(const std::filesystem::path& path,
                      const std::vector<detect::Detection>& dets) {
  write_file(path, encode_detections(dets));
}

std::vector<detect::Detection> read_detections(const std::filesystem::path& path) {
  return decode_detections(read_file(path));
}

}  // namespace flowmno::io
