#include "sesr/cost.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace sesr {

namespace {

std::vector<LayerCost> per_layer_params(const NetworkSpec& spec) {
  std::vector<LayerCost> layers;
  layers.push_back({"head", 25LL * spec.f, 0});
  for (int i = 0; i < spec.m; ++i) {
    layers.push_back({"block" + std::to_string(i), 9LL * spec.f * spec.f, 0});
  }
  layers.push_back({"tail", 25LL * spec.f * spec.pre_shuffle_channels(), 0});
  return layers;
}

void check_resolution(int lr_h, int lr_w) {
  if (lr_h < 1 || lr_w < 1) throw std::invalid_argument("cost: resolution must be >= 1x1");
}

}  // namespace

std::int64_t count_params(const NetworkSpec& spec) {
  spec.validate();
  std::int64_t total = 0;
  for (const LayerCost& l : per_layer_params(spec)) total += l.params;
  return total;
}

std::int64_t count_macs(const NetworkSpec& spec, int lr_h, int lr_w) {
  check_resolution(lr_h, lr_w);
  return static_cast<std::int64_t>(lr_h) * lr_w * count_params(spec);
}

CostReport cost_report(const NetworkSpec& spec, int lr_h, int lr_w) {
  check_resolution(lr_h, lr_w);
  spec.validate();

  CostReport report;
  report.lr_h = lr_h;
  report.lr_w = lr_w;
  report.per_layer = per_layer_params(spec);
  const std::int64_t px = static_cast<std::int64_t>(lr_h) * lr_w;
  for (LayerCost& l : report.per_layer) {
    l.macs = l.params * px;
    report.params += l.params;
    report.macs += l.macs;
  }
  report.peak_activation_elems = px * std::max({1, spec.f, spec.pre_shuffle_channels()});
  return report;
}

TilePlan plan_tiles(const NetworkSpec& spec, int frame_h, int frame_w, int tile_h, int tile_w,
                    TileOverlap overlap) {
  check_resolution(frame_h, frame_w);
  if (tile_h < 1 || tile_w < 1) throw std::invalid_argument("tiles: tile dims must be >= 1");
  if (tile_h > frame_h || tile_w > frame_w) {
    throw std::invalid_argument("tiles: tile larger than the frame");
  }

  TilePlan plan;
  plan.tile_h = tile_h;
  plan.tile_w = tile_w;
  plan.overlap = overlap == TileOverlap::ReceptiveField ? receptive_field_radius(spec) : 0;
  plan.tile_count_exact = (static_cast<double>(frame_w) / tile_w) *
                          (static_cast<double>(frame_h) / tile_h);
  const std::int64_t nx = (frame_w + tile_w - 1) / tile_w;
  const std::int64_t ny = (frame_h + tile_h - 1) / tile_h;
  plan.tile_count_ceil = nx * ny;
  plan.per_tile_macs = count_macs(spec, tile_h + 2 * plan.overlap, tile_w + 2 * plan.overlap);
  plan.total_macs = plan.per_tile_macs * plan.tile_count_ceil;
  return plan;
}

std::int64_t estimate_activation_traffic(const NetworkSpec& spec, int lr_h, int lr_w) {
  check_resolution(lr_h, lr_w);
  spec.validate();
  const std::int64_t px = static_cast<std::int64_t>(lr_h) * lr_w;
  std::int64_t elems = px;  // input plane
  elems += px * spec.f * (spec.m + 1);          // head and each 3x3 output
  elems += px * spec.pre_shuffle_channels();    // tail output
  elems += px * spec.scale * spec.scale;        // upscaled output plane
  return elems;
}

std::string human_count(std::int64_t value) {
  const char* suffix = "";
  double v = static_cast<double>(value);
  if (value >= 1000000000) {
    v /= 1e9;
    suffix = "G";
  } else if (value >= 1000000) {
    v /= 1e6;
    suffix = "M";
  } else if (value >= 1000) {
    v /= 1e3;
    suffix = "K";
  }
  char buf[32];
  if (v >= 100) {
    std::snprintf(buf, sizeof(buf), "%.0f%s", v, suffix);
  } else if (v >= 10) {
    std::snprintf(buf, sizeof(buf), "%.1f%s", v, suffix);
  } else {
    std::snprintf(buf, sizeof(buf), "%.2f%s", v, suffix);
  }
  return buf;
}

}  // namespace sesr
