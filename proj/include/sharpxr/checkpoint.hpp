#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>

#include "sharpxr/model.hpp"

namespace sharpxr {

class CheckpointError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline constexpr char kCheckpointMagic[4] = {'S', 'X', 'R', '1'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

// Layout (little endian, no padding):
//   "SXR1" | u32 version | u32 meta_len | meta (UTF-8 "key=value\n" lines) |
//   u32 tensor_count | per tensor: u32 name_len, name, u32 rank, u32 dims[rank], f32 data[]
std::string encode_checkpoint(const ParamStore& store);
ParamStore decode_checkpoint(const std::string& bytes);

void save_checkpoint(const ParamStore& store, const std::filesystem::path& path);

/// Reads and audits a checkpoint; throws CheckpointError on any defect.
ParamStore load_checkpoint(const std::filesystem::path& path);

}  // namespace sharpxr
