#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sesr/network.hpp"

namespace sesr {

struct LayerCost {
  std::string layer;
  std::int64_t params = 0;
  std::int64_t macs = 0;
};

/// Analytical cost of the collapsed network at a given low-resolution input size.
/// MACs count convolution multiplies only; activations, residual adds, and the
/// pixel shuffle contribute zero.
struct CostReport {
  std::int64_t params = 0;
  std::int64_t macs = 0;
  std::vector<LayerCost> per_layer;
  std::int64_t peak_activation_elems = 0;
  int lr_h = 0;
  int lr_w = 0;
};

enum class TileOverlap { None, ReceptiveField };

struct TilePlan {
  int tile_w = 0;
  int tile_h = 0;
  int overlap = 0;  // halo pixels per side baked into per-tile cost
  double tile_count_exact = 0.0;
  std::int64_t tile_count_ceil = 0;
  std::int64_t per_tile_macs = 0;
  std::int64_t total_macs = 0;  // per-tile cost times the scheduled (ceil) tile count
};

/// Conv weight elements of the collapsed network:
/// 5*5*1*f + m * 3*3*f*f + 5*5*f * (4 for x2, 16 for x4).
std::int64_t count_params(const NetworkSpec& spec);

/// H * W * count_params: every convolution runs at low resolution under same padding.
std::int64_t count_macs(const NetworkSpec& spec, int lr_h, int lr_w);

CostReport cost_report(const NetworkSpec& spec, int lr_h, int lr_w);

TilePlan plan_tiles(const NetworkSpec& spec, int frame_h, int frame_w, int tile_h, int tile_w,
                    TileOverlap overlap);

/// Heuristic traffic proxy: elements crossing layer boundaries, counted as the
/// input plane, every convolution output, and the upscaled output. Not a DRAM-byte
/// model; label it as a heuristic wherever it is shown.
std::int64_t estimate_activation_traffic(const NetworkSpec& spec, int lr_h, int lr_w);

/// "28.0G" style rendering, three significant figures.
std::string human_count(std::int64_t value);

}  // namespace sesr
