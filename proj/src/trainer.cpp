#include "sesr/trainer.hpp"

#include <cmath>
#include <map>
#include <stdexcept>
#include <string>

#include "sesr/rng.hpp"

namespace sesr {

void TrainConfig::validate(const NetworkSpec& spec) const {
  if (learning_rate < 0) throw std::invalid_argument("train: learning rate must be >= 0");
  if (batch_size < 1) throw std::invalid_argument("train: batch size must be >= 1");
  if (steps < 0) throw std::invalid_argument("train: steps must be >= 0");
  if (crop < 2 * spec.scale) throw std::invalid_argument("train: crop must be >= 2 * scale");
  if (beta1 < 0 || beta1 >= 1 || beta2 < 0 || beta2 >= 1) {
    throw std::invalid_argument("train: betas must lie in [0, 1)");
  }
  if (epsilon <= 0) throw std::invalid_argument("train: epsilon must be > 0");
}

template <typename T>
double l1_loss(const TensorT<T>& pred, const TensorT<T>& target) {
  if (!pred.same_shape(target)) throw std::invalid_argument("l1: shape mismatch");
  if (pred.size() == 0) return 0.0;
  double acc = 0.0;
  for (std::size_t i = 0; i < pred.data.size(); ++i) {
    acc += std::abs(static_cast<double>(pred.data[i]) - static_cast<double>(target.data[i]));
  }
  return acc / static_cast<double>(pred.size());
}

template <typename T>
TensorT<T> l1_loss_grad(const TensorT<T>& pred, const TensorT<T>& target) {
  if (!pred.same_shape(target)) throw std::invalid_argument("l1: shape mismatch");
  TensorT<T> g(pred.n, pred.h, pred.w, pred.c);
  const T scale = pred.size() == 0 ? T(0) : T(1.0 / static_cast<double>(pred.size()));
  for (std::size_t i = 0; i < g.data.size(); ++i) {
    const T d = pred.data[i] - target.data[i];
    g.data[i] = d > T(0) ? scale : (d < T(0) ? -scale : T(0));
  }
  return g;
}

namespace {

template <typename T>
std::span<const T> bias_of(const WeightStoreT<T>& ws, const std::string& name) {
  const std::vector<T>* b = ws.find_vector(name);
  return b ? std::span<const T>(*b) : std::span<const T>();
}

// Activations cached by one forward pass, enough to replay the graph backwards.
template <typename T>
struct TapeEntry {
  TensorT<T> input;  // conv or activation input
  TensorT<T> mid;    // expanded linear block: output of the first conv
};

template <typename T>
struct ForwardTape {
  std::vector<TapeEntry<T>> entries;
  TensorT<T> output;
};

template <typename T>
ForwardTape<T> forward_with_tape(const LayerGraph& graph, const WeightStoreT<T>& ws,
                                 const TensorT<T>& input) {
  if (input.c != 1) throw std::invalid_argument("forward: expected a single-channel input");
  ForwardTape<T> tape;
  tape.entries.resize(graph.layers.size());
  std::map<std::string, TensorT<T>> saved;
  TensorT<T> x = input;
  for (std::size_t li = 0; li < graph.layers.size(); ++li) {
    const Layer& l = graph.layers[li];
    TapeEntry<T>& entry = tape.entries[li];
    switch (l.kind) {
      case LayerKind::LinearBlock: {
        entry.input = x;
        x = conv2d(x, ws.kernel(l.name + ".w0"), Padding::Same, bias_of(ws, l.name + ".b0"));
        if (l.expanded) {
          entry.mid = x;
          x = conv2d(x, ws.kernel(l.name + ".w1"), Padding::Same, bias_of(ws, l.name + ".b1"));
        }
        break;
      }
      case LayerKind::Conv:
        entry.input = x;
        x = conv2d(x, ws.kernel(l.name + ".w"), Padding::Same, bias_of(ws, l.name + ".b"));
        break;
      case LayerKind::Activation:
        entry.input = x;
        if (l.act == ActKind::PReLU) {
          x = prelu<T>(x, ws.vector(l.name + ".slope"));
        } else {
          x = relu(x);
        }
        break;
      case LayerKind::ShortResidualAdd:
      case LayerKind::LongResidualAdd: {
        const TensorT<T>& src = l.source == "input" ? input : saved.at(l.source);
        if (l.broadcast) {
          for (int n = 0; n < x.n; ++n)
            for (int h = 0; h < x.h; ++h)
              for (int w = 0; w < x.w; ++w) {
                const T v = src.at(n, h, w, 0);
                T* px = &x.data[x.index(n, h, w, 0)];
                for (int c = 0; c < x.c; ++c) px[c] += v;
              }
        } else {
          for (std::size_t i = 0; i < x.data.size(); ++i) x.data[i] += src.data[i];
        }
        break;
      }
      case LayerKind::DepthToSpace:
        x = depth_to_space(x, l.block);
        break;
    }
    if (!l.save_tag.empty()) saved[l.save_tag] = x;
  }
  tape.output = std::move(x);
  return tape;
}

// Gradients of one Same-padded stride-1 convolution. Accumulates in doubles and
// casts once at the end, mirroring the forward accumulation contract.
template <typename T>
struct ConvGrads {
  TensorT<T> input;
  KernelT<T> kernel;
  std::vector<T> bias;
};

template <typename T>
ConvGrads<T> conv2d_backward(const TensorT<T>& input, const KernelT<T>& kernel,
                             const TensorT<T>& out_grad) {
  const int pad_h = (kernel.kh - 1) / 2;
  const int pad_w = (kernel.kw - 1) / 2;
  std::vector<double> din(input.data.size(), 0.0);
  std::vector<double> dk(kernel.data.size(), 0.0);
  std::vector<double> db(kernel.co, 0.0);

  for (int n = 0; n < out_grad.n; ++n) {
    for (int oy = 0; oy < out_grad.h; ++oy) {
      for (int ox = 0; ox < out_grad.w; ++ox) {
        const T* g_px = &out_grad.data[out_grad.index(n, oy, ox, 0)];
        for (int co = 0; co < kernel.co; ++co) db[co] += static_cast<double>(g_px[co]);
        for (int ky = 0; ky < kernel.kh; ++ky) {
          const int iy = oy + ky - pad_h;
          if (iy < 0 || iy >= input.h) continue;
          for (int kx = 0; kx < kernel.kw; ++kx) {
            const int ix = ox + kx - pad_w;
            if (ix < 0 || ix >= input.w) continue;
            const T* in_px = &input.data[input.index(n, iy, ix, 0)];
            double* din_px = &din[input.index(n, iy, ix, 0)];
            for (int ci = 0; ci < kernel.ci; ++ci) {
              const double v = static_cast<double>(in_px[ci]);
              const std::int64_t kbase = kernel.index(ky, kx, ci, 0);
              double dx = 0.0;
              for (int co = 0; co < kernel.co; ++co) {
                const double g = static_cast<double>(g_px[co]);
                dk[kbase + co] += v * g;
                dx += static_cast<double>(kernel.data[kbase + co]) * g;
              }
              din_px[ci] += dx;
            }
          }
        }
      }
    }
  }

  ConvGrads<T> out;
  out.input = TensorT<T>(input.n, input.h, input.w, input.c);
  for (std::size_t i = 0; i < din.size(); ++i) out.input.data[i] = static_cast<T>(din[i]);
  out.kernel = KernelT<T>(kernel.kh, kernel.kw, kernel.ci, kernel.co);
  for (std::size_t i = 0; i < dk.size(); ++i) out.kernel.data[i] = static_cast<T>(dk[i]);
  out.bias.resize(kernel.co);
  for (int i = 0; i < kernel.co; ++i) out.bias[i] = static_cast<T>(db[i]);
  return out;
}

template <typename T>
void accumulate(std::vector<T>& dst, const std::vector<T>& src) {
  if (dst.empty()) {
    dst = src;
    return;
  }
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

template <typename T>
void add_into(TensorT<T>& dst, const TensorT<T>& src) {
  for (std::size_t i = 0; i < dst.data.size(); ++i) dst.data[i] += src.data[i];
}

template <typename T>
TensorT<T> channel_sum(const TensorT<T>& g) {
  TensorT<T> out(g.n, g.h, g.w, 1);
  for (int n = 0; n < g.n; ++n)
    for (int h = 0; h < g.h; ++h)
      for (int w = 0; w < g.w; ++w) {
        double acc = 0.0;
        const T* px = &g.data[g.index(n, h, w, 0)];
        for (int c = 0; c < g.c; ++c) acc += static_cast<double>(px[c]);
        out.at(n, h, w, 0) = static_cast<T>(acc);
      }
  return out;
}

template <typename T>
GradStoreT<T> backward_from_tape(const LayerGraph& graph, const WeightStoreT<T>& weights,
                                 const ForwardTape<T>& tape, const TensorT<T>& upstream_grad) {
  if (!tape.output.same_shape(upstream_grad)) {
    throw std::invalid_argument("backward: upstream gradient shape mismatch");
  }

  GradStoreT<T> grads;
  auto conv_grad = [&](const std::string& w_name, const std::string& b_name,
                       const TensorT<T>& in, const TensorT<T>& g) -> TensorT<T> {
    ConvGrads<T> cg = conv2d_backward(in, weights.kernel(w_name), g);
    auto it = grads.kernels.find(w_name);
    if (it == grads.kernels.end()) {
      grads.kernels.emplace(w_name, std::move(cg.kernel));
    } else {
      for (std::size_t i = 0; i < it->second.data.size(); ++i) {
        it->second.data[i] += cg.kernel.data[i];
      }
    }
    if (weights.find_vector(b_name)) accumulate(grads.vectors[b_name], cg.bias);
    return std::move(cg.input);
  };

  std::map<std::string, TensorT<T>> pending;  // residual gradients awaiting their source
  TensorT<T> g = upstream_grad;
  for (int li = static_cast<int>(graph.layers.size()) - 1; li >= 0; --li) {
    const Layer& l = graph.layers[li];
    if (!l.save_tag.empty()) {
      auto it = pending.find(l.save_tag);
      if (it != pending.end()) {
        add_into(g, it->second);
        pending.erase(it);
      }
    }
    switch (l.kind) {
      case LayerKind::LinearBlock: {
        if (l.expanded) {
          TensorT<T> dmid = conv_grad(l.name + ".w1", l.name + ".b1", tape.entries[li].mid, g);
          g = conv_grad(l.name + ".w0", l.name + ".b0", tape.entries[li].input, dmid);
        } else {
          g = conv_grad(l.name + ".w0", l.name + ".b0", tape.entries[li].input, g);
        }
        break;
      }
      case LayerKind::Conv:
        g = conv_grad(l.name + ".w", l.name + ".b", tape.entries[li].input, g);
        break;
      case LayerKind::Activation: {
        const TensorT<T>& in = tape.entries[li].input;
        if (l.act == ActKind::PReLU) {
          const std::vector<T>& slopes = weights.vector(l.name + ".slope");
          std::vector<double> dslope(slopes.size(), 0.0);
          TensorT<T> dx(in.n, in.h, in.w, in.c);
          const std::int64_t px = in.size() / std::max(in.c, 1);
          for (std::int64_t i = 0; i < px; ++i) {
            const T* xv = &in.data[i * in.c];
            const T* gv = &g.data[i * in.c];
            T* dv = &dx.data[i * in.c];
            for (int c = 0; c < in.c; ++c) {
              if (xv[c] >= T(0)) {
                dv[c] = gv[c];
              } else {
                dv[c] = slopes[c] * gv[c];
                dslope[c] += static_cast<double>(gv[c]) * static_cast<double>(xv[c]);
              }
            }
          }
          std::vector<T> ds(dslope.size());
          for (std::size_t i = 0; i < ds.size(); ++i) ds[i] = static_cast<T>(dslope[i]);
          accumulate(grads.vectors[l.name + ".slope"], ds);
          g = std::move(dx);
        } else {
          for (std::size_t i = 0; i < g.data.size(); ++i) {
            if (in.data[i] < T(0)) g.data[i] = T(0);
          }
        }
        break;
      }
      case LayerKind::ShortResidualAdd:
      case LayerKind::LongResidualAdd: {
        // out = x + src: the main path passes g through; the source gets a copy.
        if (l.source == "input") break;  // input gradients are not part of the store
        TensorT<T> src_grad = l.broadcast ? channel_sum(g) : g;
        auto it = pending.find(l.source);
        if (it == pending.end()) {
          pending.emplace(l.source, std::move(src_grad));
        } else {
          add_into(it->second, src_grad);
        }
        break;
      }
      case LayerKind::DepthToSpace:
        g = space_to_depth(g, l.block);
        break;
    }
  }
  return grads;
}

}  // namespace

template <typename T>
GradStoreT<T> backward(const LayerGraph& graph, const WeightStoreT<T>& weights,
                       const TensorT<T>& input, const TensorT<T>& upstream_grad) {
  ForwardTape<T> tape = forward_with_tape(graph, weights, input);
  return backward_from_tape(graph, weights, tape, upstream_grad);
}

TrainResult train_toy(const NetworkSpec& spec, const TrainConfig& config,
                      const std::vector<TrainSample>& dataset) {
  spec.validate();
  config.validate(spec);
  if (dataset.empty()) throw std::invalid_argument("train: dataset is empty");
  for (const TrainSample& s : dataset) {
    if (s.lr.n != 1 || s.lr.c != 1 || s.hr.n != 1 || s.hr.c != 1) {
      throw std::invalid_argument("train: samples must be 1 x H x W x 1");
    }
    if (s.hr.h != s.lr.h * spec.scale || s.hr.w != s.lr.w * spec.scale) {
      throw std::invalid_argument("train: high-res dims must be scale * low-res dims");
    }
    if (s.lr.h < config.crop || s.lr.w < config.crop) {
      throw std::invalid_argument("train: crop larger than a dataset image");
    }
  }

  auto [graph, ws] = build_training_graph(spec, config.seed);
  Rng crop_rng(config.seed * 0x9E3779B97F4A7C15ULL + 0xD1B54A32D192ED03ULL);

  // ADAM moments, allocated on first touch, keyed like the store.
  std::map<std::string, std::vector<float>> m_state, v_state;
  std::int64_t t = 0;

  auto adam_update = [&](std::span<float> value, std::span<const float> grad,
                         const std::string& name) {
    std::vector<float>& m = m_state[name];
    std::vector<float>& v = v_state[name];
    if (m.size() != grad.size()) m.assign(grad.size(), 0.0f);
    if (v.size() != grad.size()) v.assign(grad.size(), 0.0f);
    const double bc1 = 1.0 - std::pow(config.beta1, static_cast<double>(t));
    const double bc2 = 1.0 - std::pow(config.beta2, static_cast<double>(t));
    for (std::size_t i = 0; i < grad.size(); ++i) {
      const double gi = grad[i];
      const double mi = config.beta1 * m[i] + (1 - config.beta1) * gi;
      const double vi = config.beta2 * v[i] + (1 - config.beta2) * gi * gi;
      m[i] = static_cast<float>(mi);
      v[i] = static_cast<float>(vi);
      const double step = config.learning_rate * (mi / bc1) / (std::sqrt(vi / bc2) + config.epsilon);
      value[i] = static_cast<float>(value[i] - step);
    }
  };

  TrainResult result;
  result.loss_trace.reserve(config.steps);
  const int crop = config.crop;
  const int hr_crop = crop * spec.scale;

  for (int step = 0; step < config.steps; ++step) {
    Tensor batch_lr(config.batch_size, crop, crop, 1);
    Tensor batch_hr(config.batch_size, hr_crop, hr_crop, 1);
    for (int b = 0; b < config.batch_size; ++b) {
      const TrainSample& s =
          dataset[crop_rng.uniform_int(static_cast<std::int64_t>(dataset.size()))];
      const int oy = static_cast<int>(crop_rng.uniform_int(s.lr.h - crop + 1));
      const int ox = static_cast<int>(crop_rng.uniform_int(s.lr.w - crop + 1));
      for (int y = 0; y < crop; ++y)
        for (int x = 0; x < crop; ++x) {
          batch_lr.at(b, y, x, 0) = s.lr.at(0, oy + y, ox + x, 0);
        }
      for (int y = 0; y < hr_crop; ++y)
        for (int x = 0; x < hr_crop; ++x) {
          batch_hr.at(b, y, x, 0) = s.hr.at(0, oy * spec.scale + y, ox * spec.scale + x, 0);
        }
    }

    ForwardTape<float> tape = forward_with_tape(graph, ws, batch_lr);
    result.loss_trace.push_back(l1_loss(tape.output, batch_hr));

    const Tensor up = l1_loss_grad(tape.output, batch_hr);
    const GradStore grads = backward_from_tape(graph, ws, tape, up);

    t += 1;
    for (const auto& [name, gk] : grads.kernels) {
      adam_update(ws.kernels.at(name).data, gk.data, name);
    }
    for (const auto& [name, gv] : grads.vectors) {
      adam_update(ws.vectors.at(name), gv, name);
    }
  }

  result.weights = std::move(ws);
  return result;
}

template double l1_loss<float>(const Tensor&, const Tensor&);
template double l1_loss<double>(const Tensor64&, const Tensor64&);
template Tensor l1_loss_grad<float>(const Tensor&, const Tensor&);
template Tensor64 l1_loss_grad<double>(const Tensor64&, const Tensor64&);
template GradStoreT<float> backward<float>(const LayerGraph&, const WeightStoreT<float>&,
                                           const Tensor&, const Tensor&);
template GradStoreT<double> backward<double>(const LayerGraph&, const WeightStoreT<double>&,
                                             const Tensor64&, const Tensor64&);

}  // namespace sesr
