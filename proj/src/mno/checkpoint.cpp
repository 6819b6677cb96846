#include "flowmno/mno/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

namespace flowmno::mno {

namespace {

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

template <typename T>
void put(std::string& out, T value) {
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  out.append(reinterpret_cast<const char*>(bytes), sizeof(T));
}

class Reader {
 public:
  explicit Reader(const std::string& data) : data_(data) {}

  template <typename T>
  T get(const char* what) {
    if (data_.size() - pos_ < sizeof(T)) {
      throw CheckpointError(CheckpointError::Kind::truncated,
                            std::string("checkpoint truncated while reading ") + what);
    }
    unsigned char bytes[sizeof(T)];
    std::memcpy(bytes, data_.data() + pos_, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
    pos_ += sizeof(T);
    T value;
    std::memcpy(&value, bytes, sizeof(T));
    return value;
  }

  std::string bytes(std::size_t n, const char* what) {
    if (data_.size() - pos_ < n) {
      throw CheckpointError(CheckpointError::Kind::truncated,
                            std::string("checkpoint truncated while reading ") + what);
    }
    std::string s = data_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  bool at_end() const { return pos_ == data_.size(); }

 private:
  const std::string& data_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string encode_checkpoint(const MnoModel& model) {
  const auto& cfg = model.config();
  std::string out(kCheckpointMagic, 4);
  put<std::uint32_t>(out, kCheckpointVersion);
  for (int v : {cfg.grid_h, cfg.grid_w, cfg.modes_x, cfg.modes_y, cfg.width, cfg.num_blocks,
                cfg.projection_hidden}) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(v));
  }
  const auto& params = model.parameters();
  for (const auto& t : model.layout().tensors()) {
    put<std::uint16_t>(out, static_cast<std::uint16_t>(t.name.size()));
    out += t.name;
    put<std::uint8_t>(out, static_cast<std::uint8_t>(t.dims.size()));
    for (auto d : t.dims) put<std::uint32_t>(out, d);
    for (Eigen::Index i = 0; i < t.size(); ++i) put<double>(out, params[t.offset + i]);
  }
  return out;
}

MnoModel decode_checkpoint(const std::string& bytes) {
  Reader in(bytes);
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kCheckpointMagic, 4) != 0) {
    throw CheckpointError(CheckpointError::Kind::bad_magic, "checkpoint: bad magic bytes");
  }
  in.bytes(4, "magic");
  const auto version = in.get<std::uint32_t>("version");
  if (version != kCheckpointVersion) {
    throw CheckpointError(CheckpointError::Kind::unsupported_version,
                          "checkpoint: unsupported version " + std::to_string(version));
  }
  ModelConfig cfg;
  for (int* field : {&cfg.grid_h, &cfg.grid_w, &cfg.modes_x, &cfg.modes_y, &cfg.width,
                     &cfg.num_blocks, &cfg.projection_hidden}) {
    *field = static_cast<int>(in.get<std::uint32_t>("config"));
  }
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw CheckpointError(CheckpointError::Kind::shape_mismatch,
                          std::string("checkpoint: invalid config: ") + e.what());
  }

  MnoModel model(cfg);
  for (const auto& t : model.layout().tensors()) {
    const auto name_len = in.get<std::uint16_t>("tensor name length");
    const std::string name = in.bytes(name_len, "tensor name");
    const auto rank = in.get<std::uint8_t>("tensor rank");
    std::vector<std::uint32_t> dims(rank);
    for (auto& d : dims) d = in.get<std::uint32_t>("tensor dims");
    if (name != t.name || dims != t.dims) {
      throw CheckpointError(CheckpointError::Kind::shape_mismatch,
                            "checkpoint: tensor '" + name + "' does not match declared config (expected '" +
                                t.name + "')");
    }
    for (Eigen::Index i = 0; i < t.size(); ++i) {
      model.parameters()[t.offset + i] = in.get<double>("tensor values");
    }
  }
  if (!in.at_end()) {
    throw CheckpointError(CheckpointError::Kind::shape_mismatch,
                          "checkpoint: trailing bytes after tensor table");
  }
  return model;
}

void save_checkpoint(const MnoModel& model, const std::filesystem::path& path) {
  const std::string bytes = encode_checkpoint(model);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CheckpointError(CheckpointError::Kind::io, "cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw CheckpointError(CheckpointError::Kind::io, "write failed: " + path.string());
}

MnoModel load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError(CheckpointError::Kind::io, "cannot read " + path.string());
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_checkpoint(bytes);
}

}  // namespace flowmno::mno
