#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>

#include "flowmno/mno/model.hpp"

namespace flowmno::mno {

/// Little-endian checkpoint: "FMNO", u32 version, seven u32 config fields, then
/// one entry per tensor (u16 name length, name, u8 rank, u32 dims, f64 values).
inline constexpr char kCheckpointMagic[4] = {'F', 'M', 'N', 'O'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

class CheckpointError : public std::runtime_error {
 public:
  enum class Kind { io, bad_magic, unsupported_version, truncated, shape_mismatch };

  CheckpointError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

std::string encode_checkpoint(const MnoModel& model);
MnoModel decode_checkpoint(const std::string& bytes);

void save_checkpoint(const MnoModel& model, const std::filesystem::path& path);
MnoModel load_checkpoint(const std::filesystem::path& path);

}  // namespace flowmno::mno
