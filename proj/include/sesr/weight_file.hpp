#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "sesr/network.hpp"

namespace sesr {

enum class WeightForm : std::uint8_t { Training = 0, Collapsed = 1 };

/// "SESR1" container: spec header plus named float32 tensors.
///
/// Layout, little-endian:
///   magic "SESR1\0" (6 bytes), u16 version = 1,
///   u8 scale, u16 f, u16 m, u16 p,
///   u8 variant bits (0 linear blocks, 1 short residuals, 2 input residual,
///                    3 activation: 0 = PReLU / 1 = ReLU),
///   u8 form (0 training, 1 collapsed), u32 tensor count,
///   then per tensor: u16 name length, UTF-8 name, u8 rank, rank x u32 dims,
///   raw float32 payload.
/// Tensors are written in name order, so write/read/write is byte-identical.
struct WeightFile {
  NetworkSpec spec;
  WeightForm form = WeightForm::Training;
  WeightStore store;
};

std::vector<std::uint8_t> serialize_weight_file(const WeightFile& file);
WeightFile parse_weight_file(std::span<const std::uint8_t> bytes);

/// Atomic save: writes a temp file beside `path` and renames on success.
void save_weight_file(const std::string& path, const WeightFile& file);
WeightFile load_weight_file(const std::string& path);

}  // namespace sesr
