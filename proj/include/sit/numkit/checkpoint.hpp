#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sit/numkit/params.hpp"

namespace sit::numkit {

inline constexpr char kCheckpointMagic[] = "SITCKPT1";

struct CheckpointEntry {
  std::string name;
  std::vector<std::uint32_t> shape;
  std::vector<float> data;
};

// Binary layout (docs/FORMATS.md): magic, then per parameter until EOF:
// u32 name length, name bytes, u32 rank, u32 dims, f32 values; all
// little-endian.
std::vector<std::uint8_t> encode_checkpoint(const std::vector<CheckpointEntry>& entries);
std::vector<CheckpointEntry> decode_checkpoint(const std::vector<std::uint8_t>& bytes);

template <typename T>
std::vector<CheckpointEntry> snapshot(const ParamStore<T>& store);

// Copies values into matching parameters. Throws FormatError when names or
// shapes disagree.
template <typename T>
void restore(ParamStore<T>& store, const std::vector<CheckpointEntry>& entries);

void save_checkpoint(const std::string& path, const std::vector<CheckpointEntry>& entries);
std::vector<CheckpointEntry> load_checkpoint(const std::string& path);

}  // namespace sit::numkit
