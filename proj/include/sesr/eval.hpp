#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "sesr/network.hpp"
#include "sesr/tensor.hpp"

namespace sesr {

/// Single luma plane, samples in [0, 255].
struct ImagePlane {
  int height = 0;
  int width = 0;
  std::vector<float> samples;

  ImagePlane() = default;
  ImagePlane(int h, int w) : height(h), width(w), samples(static_cast<std::size_t>(h) * w, 0.0f) {}

  float& at(int y, int x) { return samples[static_cast<std::size_t>(y) * width + x]; }
  float at(int y, int x) const { return samples[static_cast<std::size_t>(y) * width + x]; }
};

struct MetricPair {
  double psnr = 0.0;  // dB, +infinity for identical planes
  double ssim = 0.0;
};

/// BT.601 studio-swing luma from interleaved 8-bit RGB:
/// Y = 16 + (65.481 R + 128.553 G + 24.966 B) / 255.
ImagePlane rgb_to_y(std::span<const std::uint8_t> rgb, int height, int width);

enum class ResizeDir { Up, Down };

/// Catmull-Rom cubic (a = -0.5), center-aligned sampling with edge-clamped taps.
/// Downscaling widens the kernel to the destination rate for antialiasing.
/// Factor must be 2 or 4; Down floors the output extents.
ImagePlane bicubic_resize(const ImagePlane& plane, int factor, ResizeDir dir);

/// 10*log10(255^2 / MSE) after shaving `shave` pixels off every border.
double psnr(const ImagePlane& a, const ImagePlane& b, int shave = 0);

/// Mean local SSIM, 11x11 Gaussian window sigma 1.5, C1=(0.01*255)^2, C2=(0.03*255)^2.
double ssim(const ImagePlane& a, const ImagePlane& b, int shave = 0);

MetricPair compute_metrics(const ImagePlane& a, const ImagePlane& b, int shave = 0);

Tensor plane_to_tensor(const ImagePlane& plane);   // /255 into 1 x H x W x 1
ImagePlane tensor_to_plane(const Tensor& tensor);  // *255, unclamped
ImagePlane clamp_plane(ImagePlane plane);          // clamp samples to [0, 255]

/// Whole-plane inference through a collapsed graph. Output is unclamped.
ImagePlane infer_plane(const LayerGraph& graph, const WeightStore& weights,
                       const ImagePlane& plane);

/// Tile-by-tile inference. Each tile is cropped with a halo of the receptive-field
/// radius clamped to the frame bounds, so interior tile edges see real neighbors
/// while frame edges keep the same zero padding as the whole-frame path; the
/// stitched result matches infer_plane.
ImagePlane tiled_infer(const LayerGraph& graph, const WeightStore& weights,
                       const ImagePlane& plane, int tile_h, int tile_w);

}  // namespace sesr
