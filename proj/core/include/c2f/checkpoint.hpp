#pragma once

#include <map>
#include <string>
#include <string_view>

#include "c2f/autodiff.hpp"
#include "c2f/optim.hpp"

namespace c2f::nn {

/// Checkpoint byte layout (all integers little-endian, doubles IEEE-754 binary64):
///
///   magic      8 bytes  "C2FCKPT\0"
///   version    u32      kCheckpointVersion
///   n_meta     u32      then n_meta x (u32 len, key bytes, u32 len, value bytes)
///   n_blocks   u32      then per block:
///                         u32 len, name bytes, u32 rows, u32 cols,
///                         u8 dtype (1 = f64), u8 is_bias, rows*cols f64 row-major
///   n_slots    u32      then per optimizer slot:
///                         u32 len, name bytes, i64 step, u32 rows, u32 cols,
///                         first moments (row-major f64), second moments (row-major f64)
///   checksum   u64      FNV-1a over every preceding byte
inline constexpr std::uint32_t kCheckpointVersion = 1;

using Metadata = std::map<std::string, std::string>;

std::string EncodeCheckpoint(const ParameterStore& store, const Adam* optimizer,
                             const Metadata& meta);

/// Loads into an already-shaped store. Every block in the file must exist in
/// the store with the same shape and vice versa.
void DecodeCheckpoint(std::string_view bytes, ParameterStore& store, Adam* optimizer,
                      Metadata* meta);

/// Reads only the metadata section (used to rebuild a model before loading).
Metadata PeekCheckpointMetadata(std::string_view bytes);

void SaveCheckpoint(const std::string& path, const ParameterStore& store, const Adam* optimizer,
                    const Metadata& meta);
void LoadCheckpoint(const std::string& path, ParameterStore& store, Adam* optimizer,
                    Metadata* meta);

}  // namespace c2f::nn
