#include "sesr/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace sesr {

ImagePlane rgb_to_y(std::span<const std::uint8_t> rgb, int height, int width) {
  if (height < 0 || width < 0) throw std::invalid_argument("rgb_to_y: negative dimensions");
  if (rgb.size() != static_cast<std::size_t>(height) * width * 3) {
    throw std::invalid_argument("rgb_to_y: buffer does not hold height*width RGB triples");
  }
  ImagePlane plane(height, width);
  for (std::size_t i = 0; i < plane.samples.size(); ++i) {
    const double r = rgb[3 * i + 0];
    const double g = rgb[3 * i + 1];
    const double b = rgb[3 * i + 2];
    plane.samples[i] = static_cast<float>(16.0 + (65.481 * r + 128.553 * g + 24.966 * b) / 255.0);
  }
  return plane;
}

namespace {

double cubic_kernel(double t) {
  // Catmull-Rom: a = -0.5
  t = std::abs(t);
  if (t <= 1.0) return (1.5 * t - 2.5) * t * t + 1.0;
  if (t < 2.0) return ((-0.5 * t + 2.5) * t - 4.0) * t + 2.0;
  return 0.0;
}

struct TapSet {
  int start = 0;
  std::vector<double> weights;
};

std::vector<TapSet> make_taps(int out_n, double scale) {
  // scale = out/in; below 1 the kernel stretches to the destination rate.
  const double kscale = scale < 1.0 ? scale : 1.0;
  const double radius = 2.0 / kscale;
  std::vector<TapSet> taps(out_n);
  for (int o = 0; o < out_n; ++o) {
    const double src = (o + 0.5) / scale - 0.5;
    const int lo = static_cast<int>(std::ceil(src - radius));
    const int hi = static_cast<int>(std::floor(src + radius));
    TapSet& t = taps[o];
    t.start = lo;
    t.weights.resize(hi - lo + 1);
    double sum = 0.0;
    for (int i = lo; i <= hi; ++i) {
      const double w = cubic_kernel((src - i) * kscale);
      t.weights[i - lo] = w;
      sum += w;
    }
    for (double& w : t.weights) w /= sum;
  }
  return taps;
}

// Resamples along the x axis; callers transpose to reuse it for y.
ImagePlane resample_rows(const ImagePlane& in, int out_w, double scale) {
  const std::vector<TapSet> taps = make_taps(out_w, scale);
  ImagePlane out(in.height, out_w);
  for (int y = 0; y < in.height; ++y) {
    for (int x = 0; x < out_w; ++x) {
      const TapSet& t = taps[x];
      double acc = 0.0;
      for (std::size_t i = 0; i < t.weights.size(); ++i) {
        const int sx = std::clamp(t.start + static_cast<int>(i), 0, in.width - 1);
        acc += t.weights[i] * in.at(y, sx);
      }
      out.at(y, x) = static_cast<float>(acc);
    }
  }
  return out;
}

ImagePlane transpose(const ImagePlane& in) {
  ImagePlane out(in.width, in.height);
  for (int y = 0; y < in.height; ++y)
    for (int x = 0; x < in.width; ++x) out.at(x, y) = in.at(y, x);
  return out;
}

}  // namespace

ImagePlane bicubic_resize(const ImagePlane& plane, int factor, ResizeDir dir) {
  if (factor != 2 && factor != 4) throw std::invalid_argument("bicubic: factor must be 2 or 4");
  if (plane.height < 1 || plane.width < 1) throw std::invalid_argument("bicubic: empty input");
  int out_h, out_w;
  if (dir == ResizeDir::Up) {
    out_h = plane.height * factor;
    out_w = plane.width * factor;
  } else {
    out_h = plane.height / factor;
    out_w = plane.width / factor;
    if (out_h < 1 || out_w < 1) throw std::invalid_argument("bicubic: zero-size output");
  }
  ImagePlane rows = resample_rows(plane, out_w, static_cast<double>(out_w) / plane.width);
  ImagePlane cols = resample_rows(transpose(rows), out_h, static_cast<double>(out_h) / plane.height);
  return transpose(cols);
}

namespace {

void check_metric_pair(const ImagePlane& a, const ImagePlane& b, int shave) {
  if (a.height != b.height || a.width != b.width) {
    throw std::invalid_argument("metrics: plane dimensions differ");
  }
  if (shave < 0) throw std::invalid_argument("metrics: shave must be >= 0");
  if (a.height - 2 * shave < 1 || a.width - 2 * shave < 1) {
    throw std::invalid_argument("metrics: shave removes the whole image");
  }
}

ImagePlane shave_plane(const ImagePlane& p, int shave) {
  if (shave == 0) return p;
  ImagePlane out(p.height - 2 * shave, p.width - 2 * shave);
  for (int y = 0; y < out.height; ++y)
    for (int x = 0; x < out.width; ++x) out.at(y, x) = p.at(y + shave, x + shave);
  return out;
}

// Valid-mode separable filtering with an odd symmetric window.
std::vector<double> gaussian_window(int size, double sigma) {
  std::vector<double> w(size);
  const int mid = size / 2;
  double sum = 0.0;
  for (int i = 0; i < size; ++i) {
    const double d = i - mid;
    w[i] = std::exp(-d * d / (2.0 * sigma * sigma));
    sum += w[i];
  }
  for (double& v : w) v /= sum;
  return w;
}

std::vector<double> filter_valid_rows(const std::vector<double>& in, int h, int w,
                                      const std::vector<double>& win) {
  const int k = static_cast<int>(win.size());
  const int ow = w - k + 1;
  std::vector<double> out(static_cast<std::size_t>(h) * ow);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (int i = 0; i < k; ++i) acc += win[i] * in[static_cast<std::size_t>(y) * w + x + i];
      out[static_cast<std::size_t>(y) * ow + x] = acc;
    }
  return out;
}

std::vector<double> filter_valid_cols(const std::vector<double>& in, int h, int w,
                                      const std::vector<double>& win) {
  const int k = static_cast<int>(win.size());
  const int oh = h - k + 1;
  std::vector<double> out(static_cast<std::size_t>(oh) * w);
  for (int y = 0; y < oh; ++y)
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int i = 0; i < k; ++i) acc += win[i] * in[static_cast<std::size_t>(y + i) * w + x];
      out[static_cast<std::size_t>(y) * w + x] = acc;
    }
  return out;
}

std::vector<double> filter_valid(const std::vector<double>& in, int h, int w,
                                 const std::vector<double>& win) {
  return filter_valid_cols(filter_valid_rows(in, h, w, win), h, w - static_cast<int>(win.size()) + 1,
                           win);
}

}  // namespace

double psnr(const ImagePlane& a, const ImagePlane& b, int shave) {
  check_metric_pair(a, b, shave);
  const ImagePlane pa = shave_plane(a, shave);
  const ImagePlane pb = shave_plane(b, shave);
  double mse = 0.0;
  for (std::size_t i = 0; i < pa.samples.size(); ++i) {
    const double d = static_cast<double>(pa.samples[i]) - static_cast<double>(pb.samples[i]);
    mse += d * d;
  }
  mse /= static_cast<double>(pa.samples.size());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(255.0 * 255.0 / mse);
}

double ssim(const ImagePlane& a, const ImagePlane& b, int shave) {
  check_metric_pair(a, b, shave);
  const ImagePlane pa = shave_plane(a, shave);
  const ImagePlane pb = shave_plane(b, shave);
  constexpr int kWindow = 11;
  constexpr double kSigma = 1.5;
  if (pa.height < kWindow || pa.width < kWindow) {
    throw std::invalid_argument("ssim: image smaller than the 11x11 window after shaving");
  }

  const int h = pa.height, w = pa.width;
  const std::size_t count = static_cast<std::size_t>(h) * w;
  std::vector<double> va(count), vb(count), vaa(count), vbb(count), vab(count);
  for (std::size_t i = 0; i < count; ++i) {
    const double x = pa.samples[i];
    const double y = pb.samples[i];
    va[i] = x;
    vb[i] = y;
    vaa[i] = x * x;
    vbb[i] = y * y;
    vab[i] = x * y;
  }

  const std::vector<double> win = gaussian_window(kWindow, kSigma);
  const std::vector<double> mu_a = filter_valid(va, h, w, win);
  const std::vector<double> mu_b = filter_valid(vb, h, w, win);
  const std::vector<double> e_aa = filter_valid(vaa, h, w, win);
  const std::vector<double> e_bb = filter_valid(vbb, h, w, win);
  const std::vector<double> e_ab = filter_valid(vab, h, w, win);

  constexpr double kC1 = (0.01 * 255.0) * (0.01 * 255.0);
  constexpr double kC2 = (0.03 * 255.0) * (0.03 * 255.0);
  double total = 0.0;
  for (std::size_t i = 0; i < mu_a.size(); ++i) {
    const double ma = mu_a[i];
    const double mb = mu_b[i];
    const double var_a = e_aa[i] - ma * ma;
    const double var_b = e_bb[i] - mb * mb;
    const double cov = e_ab[i] - ma * mb;
    total += ((2 * ma * mb + kC1) * (2 * cov + kC2)) /
             ((ma * ma + mb * mb + kC1) * (var_a + var_b + kC2));
  }
  return total / static_cast<double>(mu_a.size());
}

MetricPair compute_metrics(const ImagePlane& a, const ImagePlane& b, int shave) {
  return {psnr(a, b, shave), ssim(a, b, shave)};
}

Tensor plane_to_tensor(const ImagePlane& plane) {
  Tensor t(1, plane.height, plane.width, 1);
  for (std::size_t i = 0; i < plane.samples.size(); ++i) t.data[i] = plane.samples[i] / 255.0f;
  return t;
}

ImagePlane tensor_to_plane(const Tensor& tensor) {
  if (tensor.n != 1 || tensor.c != 1) {
    throw std::invalid_argument("tensor_to_plane: expected a 1 x H x W x 1 tensor");
  }
  ImagePlane plane(tensor.h, tensor.w);
  for (std::size_t i = 0; i < plane.samples.size(); ++i) plane.samples[i] = tensor.data[i] * 255.0f;
  return plane;
}

ImagePlane clamp_plane(ImagePlane plane) {
  for (float& v : plane.samples) v = std::clamp(v, 0.0f, 255.0f);
  return plane;
}

ImagePlane infer_plane(const LayerGraph& graph, const WeightStore& weights,
                       const ImagePlane& plane) {
  return tensor_to_plane(forward(graph, weights, plane_to_tensor(plane)));
}

ImagePlane tiled_infer(const LayerGraph& graph, const WeightStore& weights,
                       const ImagePlane& plane, int tile_h, int tile_w) {
  if (graph.training_form) {
    throw std::invalid_argument("tiled_infer: graph must be collapsed first");
  }
  const int radius = receptive_field_radius(graph.spec);
  if (tile_h < 2 * radius || tile_w < 2 * radius) {
    throw std::invalid_argument("tiled_infer: tile smaller than twice the receptive radius");
  }
  const int scale = graph.spec.scale;
  const int h = plane.height, w = plane.width;
  ImagePlane out(h * scale, w * scale);

  for (int ty = 0; ty < h; ty += tile_h) {
    const int th = std::min(tile_h, h - ty);
    const int ys = std::max(0, ty - radius);
    const int ye = std::min(h, ty + th + radius);
    for (int tx = 0; tx < w; tx += tile_w) {
      const int tw = std::min(tile_w, w - tx);
      const int xs = std::max(0, tx - radius);
      const int xe = std::min(w, tx + tw + radius);

      Tensor tile(1, ye - ys, xe - xs, 1);
      for (int y = ys; y < ye; ++y)
        for (int x = xs; x < xe; ++x) {
          tile.at(0, y - ys, x - xs, 0) = plane.at(y, x) / 255.0f;
        }

      const Tensor sr = forward(graph, weights, tile);
      const int crop_y = (ty - ys) * scale;
      const int crop_x = (tx - xs) * scale;
      for (int y = 0; y < th * scale; ++y)
        for (int x = 0; x < tw * scale; ++x) {
          out.at(ty * scale + y, tx * scale + x) = sr.at(0, crop_y + y, crop_x + x, 0) * 255.0f;
        }
    }
  }
  return out;
}

}  // namespace sesr
