#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace sesr {

enum class Padding { Same, Valid };

/// Dense rank-4 tensor, NHWC, row-major. Zero extents are allowed (empty tensor).
template <typename T>
struct TensorT {
  int n = 0, h = 0, w = 0, c = 0;
  std::vector<T> data;

  TensorT() = default;
  TensorT(int n_, int h_, int w_, int c_);

  std::int64_t size() const { return static_cast<std::int64_t>(n) * h * w * c; }

  std::int64_t index(int in, int ih, int iw, int ic) const {
    return ((static_cast<std::int64_t>(in) * h + ih) * w + iw) * c + ic;
  }
  T& at(int in, int ih, int iw, int ic) { return data[index(in, ih, iw, ic)]; }
  const T& at(int in, int ih, int iw, int ic) const { return data[index(in, ih, iw, ic)]; }

  bool same_shape(const TensorT& o) const {
    return n == o.n && h == o.h && w == o.w && c == o.c;
  }
};

/// Convolution kernel, HWIO (kernel height, kernel width, input channels, output channels).
template <typename T>
struct KernelT {
  int kh = 0, kw = 0, ci = 0, co = 0;
  std::vector<T> data;

  KernelT() = default;
  KernelT(int kh_, int kw_, int ci_, int co_);

  std::int64_t size() const { return static_cast<std::int64_t>(kh) * kw * ci * co; }

  std::int64_t index(int ih, int iw, int ic, int io) const {
    return ((static_cast<std::int64_t>(ih) * kw + iw) * ci + ic) * co + io;
  }
  T& at(int ih, int iw, int ic, int io) { return data[index(ih, iw, ic, io)]; }
  const T& at(int ih, int iw, int ic, int io) const { return data[index(ih, iw, ic, io)]; }
};

using Tensor = TensorT<float>;
using Tensor64 = TensorT<double>;
using Kernel = KernelT<float>;
using Kernel64 = KernelT<double>;

/// Direct 2-D convolution, stride 1. Same padding zero-pads (k-1)/2 per side (odd
/// kernels only); Valid requires the kernel to fit inside the input. Accumulation is
/// always in 64-bit floats, the result is cast back to T. Optional per-output-channel
/// bias.
template <typename T>
TensorT<T> conv2d(const TensorT<T>& input, const KernelT<T>& kernel, Padding padding,
                  std::span<const T> bias = {});

template <typename T>
TensorT<T> zero_pad(const TensorT<T>& input, int pad_h, int pad_w);

/// Elementwise x >= 0 ? x : slope[c]*x; one slope per channel.
template <typename T>
TensorT<T> prelu(const TensorT<T>& input, std::span<const T> slopes);

template <typename T>
TensorT<T> relu(const TensorT<T>& input);

/// Pixel shuffle. Output pixel (block*h+i, block*w+j) takes input channel group
/// i*block+j, so C = block^2 * C_out channels fan out to a block x block cell.
template <typename T>
TensorT<T> depth_to_space(const TensorT<T>& input, int block);

/// Exact inverse of depth_to_space.
template <typename T>
TensorT<T> space_to_depth(const TensorT<T>& input, int block);

extern template struct TensorT<float>;
extern template struct TensorT<double>;
extern template struct KernelT<float>;
extern template struct KernelT<double>;

extern template Tensor conv2d<float>(const Tensor&, const Kernel&, Padding, std::span<const float>);
extern template Tensor64 conv2d<double>(const Tensor64&, const Kernel64&, Padding, std::span<const double>);
extern template Tensor zero_pad<float>(const Tensor&, int, int);
extern template Tensor64 zero_pad<double>(const Tensor64&, int, int);
extern template Tensor prelu<float>(const Tensor&, std::span<const float>);
extern template Tensor64 prelu<double>(const Tensor64&, std::span<const double>);
extern template Tensor relu<float>(const Tensor&);
extern template Tensor64 relu<double>(const Tensor64&);
extern template Tensor depth_to_space<float>(const Tensor&, int);
extern template Tensor64 depth_to_space<double>(const Tensor64&, int);
extern template Tensor space_to_depth<float>(const Tensor&, int);
extern template Tensor64 space_to_depth<double>(const Tensor64&, int);

}  // namespace sesr
