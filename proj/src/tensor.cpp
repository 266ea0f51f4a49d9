#include "sesr/tensor.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>
#include <thread>

namespace sesr {

namespace {

void check_extent(int e, const char* what) {
  if (e < 0) throw std::invalid_argument(std::string(what) + " must be non-negative");
}

// Splits [0, count) into contiguous chunks and runs them on up to `max_threads`
// threads. Each index is processed exactly once, so disjoint writes stay
// deterministic regardless of thread count.
template <typename Fn>
void parallel_chunks(std::int64_t count, std::int64_t min_per_thread, Fn&& fn) {
  unsigned hw = std::thread::hardware_concurrency();
  std::int64_t threads = std::min<std::int64_t>(hw == 0 ? 1 : hw, 8);
  threads = std::min(threads, count / std::max<std::int64_t>(min_per_thread, 1));
  if (threads <= 1) {
    fn(0, count);
    return;
  }
  std::vector<std::thread> pool;
  std::int64_t chunk = (count + threads - 1) / threads;
  for (std::int64_t t = 0; t < threads; ++t) {
    std::int64_t lo = t * chunk;
    std::int64_t hi = std::min(count, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([&fn, lo, hi] { fn(lo, hi); });
  }
  for (auto& th : pool) th.join();
}

}  // namespace

template <typename T>
TensorT<T>::TensorT(int n_, int h_, int w_, int c_) : n(n_), h(h_), w(w_), c(c_) {
  check_extent(n, "tensor batch");
  check_extent(h, "tensor height");
  check_extent(w, "tensor width");
  check_extent(c, "tensor channels");
  data.assign(static_cast<std::size_t>(size()), T(0));
}

template <typename T>
KernelT<T>::KernelT(int kh_, int kw_, int ci_, int co_) : kh(kh_), kw(kw_), ci(ci_), co(co_) {
  check_extent(kh, "kernel height");
  check_extent(kw, "kernel width");
  check_extent(ci, "kernel input channels");
  check_extent(co, "kernel output channels");
  data.assign(static_cast<std::size_t>(size()), T(0));
}

template <typename T>
TensorT<T> conv2d(const TensorT<T>& input, const KernelT<T>& kernel, Padding padding,
                  std::span<const T> bias) {
  if (input.c != kernel.ci) {
    throw std::invalid_argument("conv2d: input has " + std::to_string(input.c) +
                                " channels but kernel expects " + std::to_string(kernel.ci));
  }
  if (!bias.empty() && static_cast<int>(bias.size()) != kernel.co) {
    throw std::invalid_argument("conv2d: bias length " + std::to_string(bias.size()) +
                                " does not match " + std::to_string(kernel.co) +
                                " output channels");
  }

  int oh = 0, ow = 0, pad_h = 0, pad_w = 0;
  if (padding == Padding::Same) {
    if (kernel.kh % 2 == 0 || kernel.kw % 2 == 0) {
      throw std::invalid_argument("conv2d: same padding requires odd kernel extents");
    }
    oh = input.h;
    ow = input.w;
    pad_h = (kernel.kh - 1) / 2;
    pad_w = (kernel.kw - 1) / 2;
  } else {
    if (kernel.kh > input.h || kernel.kw > input.w) {
      throw std::invalid_argument("conv2d: valid padding needs kernel <= input extents");
    }
    oh = input.h - kernel.kh + 1;
    ow = input.w - kernel.kw + 1;
  }

  TensorT<T> out(input.n, oh, ow, kernel.co);
  if (out.size() == 0 || kernel.size() == 0) return out;

  const std::int64_t rows = static_cast<std::int64_t>(input.n) * oh;
  const std::int64_t work_per_row =
      static_cast<std::int64_t>(ow) * kernel.kh * kernel.kw * kernel.ci * kernel.co;
  const std::int64_t min_rows_per_thread = std::max<std::int64_t>(1, (1 << 20) / std::max<std::int64_t>(work_per_row, 1));

  parallel_chunks(rows, min_rows_per_thread, [&](std::int64_t lo, std::int64_t hi) {
    std::vector<double> acc(kernel.co);
    for (std::int64_t row = lo; row < hi; ++row) {
      const int in = static_cast<int>(row / oh);
      const int oy = static_cast<int>(row % oh);
      for (int ox = 0; ox < ow; ++ox) {
        if (bias.empty()) {
          std::fill(acc.begin(), acc.end(), 0.0);
        } else {
          for (int co = 0; co < kernel.co; ++co) acc[co] = static_cast<double>(bias[co]);
        }
        for (int ky = 0; ky < kernel.kh; ++ky) {
          const int iy = oy + ky - pad_h;
          if (iy < 0 || iy >= input.h) continue;
          for (int kx = 0; kx < kernel.kw; ++kx) {
            const int ix = ox + kx - pad_w;
            if (ix < 0 || ix >= input.w) continue;
            const T* in_px = &input.data[input.index(in, iy, ix, 0)];
            const T* k_px = &kernel.data[kernel.index(ky, kx, 0, 0)];
            for (int ci = 0; ci < kernel.ci; ++ci) {
              const double v = static_cast<double>(in_px[ci]);
              const T* k_row = k_px + static_cast<std::int64_t>(ci) * kernel.co;
              for (int co = 0; co < kernel.co; ++co) {
                acc[co] += v * static_cast<double>(k_row[co]);
              }
            }
          }
        }
        T* out_px = &out.data[out.index(in, oy, ox, 0)];
        for (int co = 0; co < kernel.co; ++co) out_px[co] = static_cast<T>(acc[co]);
      }
    }
  });
  return out;
}

template <typename T>
TensorT<T> zero_pad(const TensorT<T>& input, int pad_h, int pad_w) {
  if (pad_h < 0 || pad_w < 0) throw std::invalid_argument("zero_pad: negative padding");
  TensorT<T> out(input.n, input.h + 2 * pad_h, input.w + 2 * pad_w, input.c);
  for (int in = 0; in < input.n; ++in) {
    for (int iy = 0; iy < input.h; ++iy) {
      for (int ix = 0; ix < input.w; ++ix) {
        const T* src = &input.data[input.index(in, iy, ix, 0)];
        T* dst = &out.data[out.index(in, iy + pad_h, ix + pad_w, 0)];
        std::copy(src, src + input.c, dst);
      }
    }
  }
  return out;
}

template <typename T>
TensorT<T> prelu(const TensorT<T>& input, std::span<const T> slopes) {
  if (static_cast<int>(slopes.size()) != input.c) {
    throw std::invalid_argument("prelu: slope count " + std::to_string(slopes.size()) +
                                " does not match " + std::to_string(input.c) + " channels");
  }
  TensorT<T> out = input;
  const std::int64_t px = input.size() / std::max(input.c, 1);
  for (std::int64_t i = 0; i < px; ++i) {
    T* v = &out.data[i * input.c];
    for (int ch = 0; ch < input.c; ++ch) {
      if (v[ch] < T(0)) v[ch] *= slopes[ch];
    }
  }
  return out;
}

template <typename T>
TensorT<T> relu(const TensorT<T>& input) {
  TensorT<T> out = input;
  for (T& v : out.data) {
    if (v < T(0)) v = T(0);
  }
  return out;
}

template <typename T>
TensorT<T> depth_to_space(const TensorT<T>& input, int block) {
  if (block < 1) throw std::invalid_argument("depth_to_space: block must be >= 1");
  const int b2 = block * block;
  if (input.c % b2 != 0) {
    throw std::invalid_argument("depth_to_space: channels " + std::to_string(input.c) +
                                " not divisible by block^2 = " + std::to_string(b2));
  }
  const int oc = input.c / b2;
  TensorT<T> out(input.n, input.h * block, input.w * block, oc);
  for (int in = 0; in < input.n; ++in) {
    for (int iy = 0; iy < input.h; ++iy) {
      for (int ix = 0; ix < input.w; ++ix) {
        for (int i = 0; i < block; ++i) {
          for (int j = 0; j < block; ++j) {
            const T* src = &input.data[input.index(in, iy, ix, (i * block + j) * oc)];
            T* dst = &out.data[out.index(in, iy * block + i, ix * block + j, 0)];
            std::copy(src, src + oc, dst);
          }
        }
      }
    }
  }
  return out;
}

template <typename T>
TensorT<T> space_to_depth(const TensorT<T>& input, int block) {
  if (block < 1) throw std::invalid_argument("space_to_depth: block must be >= 1");
  if (input.h % block != 0 || input.w % block != 0) {
    throw std::invalid_argument("space_to_depth: spatial extents not divisible by block");
  }
  TensorT<T> out(input.n, input.h / block, input.w / block, input.c * block * block);
  for (int in = 0; in < out.n; ++in) {
    for (int oy = 0; oy < out.h; ++oy) {
      for (int ox = 0; ox < out.w; ++ox) {
        for (int i = 0; i < block; ++i) {
          for (int j = 0; j < block; ++j) {
            const T* src = &input.data[input.index(in, oy * block + i, ox * block + j, 0)];
            T* dst = &out.data[out.index(in, oy, ox, (i * block + j) * input.c)];
            std::copy(src, src + input.c, dst);
          }
        }
      }
    }
  }
  return out;
}

template struct TensorT<float>;
template struct TensorT<double>;
template struct KernelT<float>;
template struct KernelT<double>;

template Tensor conv2d<float>(const Tensor&, const Kernel&, Padding, std::span<const float>);
template Tensor64 conv2d<double>(const Tensor64&, const Kernel64&, Padding, std::span<const double>);
template Tensor zero_pad<float>(const Tensor&, int, int);
template Tensor64 zero_pad<double>(const Tensor64&, int, int);
template Tensor prelu<float>(const Tensor&, std::span<const float>);
template Tensor64 prelu<double>(const Tensor64&, std::span<const double>);
template Tensor relu<float>(const Tensor&);
template Tensor64 relu<double>(const Tensor64&);
template Tensor depth_to_space<float>(const Tensor&, int);
template Tensor64 depth_to_space<double>(const Tensor64&, int);
template Tensor space_to_depth<float>(const Tensor&, int);
template Tensor64 space_to_depth<double>(const Tensor64&, int);

}  // namespace sesr
