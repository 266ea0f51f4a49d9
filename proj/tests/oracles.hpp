// Independent reference implementations the tests check the library against.
// Everything here is written straight from the operation definitions and must
// not call into the code paths it verifies.
#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include "sesr/eval.hpp"
#include "sesr/rng.hpp"
#include "sesr/tensor.hpp"

namespace oracle {

// Quadruple-loop direct convolution: for every output element walk the whole
// kernel window, summing in long doubles with the kernel-major loop order
// (deliberately different from the library's channel-major accumulation).
template <typename T>
sesr::TensorT<T> conv2d_ref(const sesr::TensorT<T>& in, const sesr::KernelT<T>& k,
                            sesr::Padding padding,
                            const std::vector<T>& bias = {}) {
  const int pad_h = padding == sesr::Padding::Same ? (k.kh - 1) / 2 : 0;
  const int pad_w = padding == sesr::Padding::Same ? (k.kw - 1) / 2 : 0;
  const int oh = padding == sesr::Padding::Same ? in.h : in.h - k.kh + 1;
  const int ow = padding == sesr::Padding::Same ? in.w : in.w - k.kw + 1;
  sesr::TensorT<T> out(in.n, oh, ow, k.co);
  for (int n = 0; n < in.n; ++n)
    for (int oy = 0; oy < oh; ++oy)
      for (int ox = 0; ox < ow; ++ox)
        for (int co = 0; co < k.co; ++co) {
          long double acc = bias.empty() ? 0.0L : static_cast<long double>(bias[co]);
          for (int ky = 0; ky < k.kh; ++ky)
            for (int kx = 0; kx < k.kw; ++kx)
              for (int ci = 0; ci < k.ci; ++ci) {
                const int iy = oy + ky - pad_h;
                const int ix = ox + kx - pad_w;
                if (iy < 0 || iy >= in.h || ix < 0 || ix >= in.w) continue;
                acc += static_cast<long double>(in.at(n, iy, ix, ci)) *
                       static_cast<long double>(k.at(ky, kx, ci, co));
              }
          out.at(n, oy, ox, co) = static_cast<T>(acc);
        }
  return out;
}

// Fused kernel of conv(k1) followed by a 1x1 conv(k2), by channel contraction.
template <typename T>
sesr::KernelT<T> compose_with_1x1_ref(const sesr::KernelT<T>& k1, const sesr::KernelT<T>& k2) {
  sesr::KernelT<T> fused(k1.kh, k1.kw, k1.ci, k2.co);
  for (int i = 0; i < k1.kh; ++i)
    for (int j = 0; j < k1.kw; ++j)
      for (int ci = 0; ci < k1.ci; ++ci)
        for (int co = 0; co < k2.co; ++co) {
          long double acc = 0.0L;
          for (int c = 0; c < k1.co; ++c) {
            acc += static_cast<long double>(k1.at(i, j, ci, c)) *
                   static_cast<long double>(k2.at(0, 0, c, co));
          }
          fused.at(i, j, ci, co) = static_cast<T>(acc);
        }
  return fused;
}

inline double psnr_ref(const sesr::ImagePlane& a, const sesr::ImagePlane& b, int shave) {
  double sum = 0.0;
  std::int64_t count = 0;
  for (int y = shave; y < a.height - shave; ++y)
    for (int x = shave; x < a.width - shave; ++x) {
      const double d = static_cast<double>(a.at(y, x)) - static_cast<double>(b.at(y, x));
      sum += d * d;
      ++count;
    }
  const double mse = sum / static_cast<double>(count);
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(255.0 * 255.0 / mse);
}

// Naive per-window SSIM: recomputes the Gaussian weights and walks every window
// position directly instead of separable filtering.
inline double ssim_ref(const sesr::ImagePlane& a, const sesr::ImagePlane& b, int shave) {
  const int win = 11;
  const double sigma = 1.5;
  std::vector<double> g(static_cast<std::size_t>(win) * win);
  double gsum = 0.0;
  for (int i = 0; i < win; ++i)
    for (int j = 0; j < win; ++j) {
      const double dy = i - win / 2;
      const double dx = j - win / 2;
      g[i * win + j] = std::exp(-(dy * dy + dx * dx) / (2 * sigma * sigma));
      gsum += g[i * win + j];
    }
  for (double& v : g) v /= gsum;

  const double c1 = (0.01 * 255) * (0.01 * 255);
  const double c2 = (0.03 * 255) * (0.03 * 255);
  const int h = a.height - 2 * shave;
  const int w = a.width - 2 * shave;
  double total = 0.0;
  std::int64_t count = 0;
  for (int y = 0; y + win <= h; ++y)
    for (int x = 0; x + win <= w; ++x) {
      double mu_a = 0, mu_b = 0, e_aa = 0, e_bb = 0, e_ab = 0;
      for (int i = 0; i < win; ++i)
        for (int j = 0; j < win; ++j) {
          const double wa = a.at(shave + y + i, shave + x + j);
          const double wb = b.at(shave + y + i, shave + x + j);
          const double wt = g[i * win + j];
          mu_a += wt * wa;
          mu_b += wt * wb;
          e_aa += wt * wa * wa;
          e_bb += wt * wb * wb;
          e_ab += wt * wa * wb;
        }
      const double va = e_aa - mu_a * mu_a;
      const double vb = e_bb - mu_b * mu_b;
      const double cov = e_ab - mu_a * mu_b;
      total += ((2 * mu_a * mu_b + c1) * (2 * cov + c2)) /
               ((mu_a * mu_a + mu_b * mu_b + c1) * (va + vb + c2));
      ++count;
    }
  return total / static_cast<double>(count);
}

inline double l1_ref(const sesr::Tensor& a, const sesr::Tensor& b) {
  long double acc = 0.0L;
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    acc += std::abs(static_cast<long double>(a.data[i]) - static_cast<long double>(b.data[i]));
  }
  return static_cast<double>(acc / static_cast<long double>(a.data.size()));
}

// ---- random fixtures ----

template <typename T>
sesr::TensorT<T> random_tensor(sesr::Rng& rng, int n, int h, int w, int c, double lo = -1.0,
                               double hi = 1.0) {
  sesr::TensorT<T> t(n, h, w, c);
  for (auto& v : t.data) v = static_cast<T>(lo + (hi - lo) * rng.uniform());
  return t;
}

template <typename T>
sesr::KernelT<T> random_kernel(sesr::Rng& rng, int kh, int kw, int ci, int co, double scale = 1.0) {
  sesr::KernelT<T> k(kh, kw, ci, co);
  for (auto& v : k.data) v = static_cast<T>(scale * (2.0 * rng.uniform() - 1.0));
  return k;
}

inline sesr::ImagePlane random_plane(sesr::Rng& rng, int h, int w) {
  sesr::ImagePlane p(h, w);
  for (auto& v : p.samples) v = static_cast<float>(255.0 * rng.uniform());
  return p;
}

template <typename T>
double max_abs_diff(const sesr::TensorT<T>& a, const sesr::TensorT<T>& b) {
  if (!a.same_shape(b)) throw std::runtime_error("max_abs_diff: shape mismatch");
  double m = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    m = std::max(m, std::abs(static_cast<double>(a.data[i]) - static_cast<double>(b.data[i])));
  }
  return m;
}

template <typename T>
double max_abs_diff(const sesr::KernelT<T>& a, const sesr::KernelT<T>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    m = std::max(m, std::abs(static_cast<double>(a.data[i]) - static_cast<double>(b.data[i])));
  }
  return m;
}

}  // namespace oracle
