#include "sesr/network.hpp"

#include <cmath>
#include <stdexcept>

#include "sesr/rng.hpp"

namespace sesr {

void NetworkSpec::validate() const {
  if (f < 1) throw std::invalid_argument("spec: f must be >= 1");
  if (m < 0) throw std::invalid_argument("spec: m must be >= 0");
  if (scale != 2 && scale != 4) throw std::invalid_argument("spec: scale must be 2 or 4");
  if (use_linear_blocks && p < 1) throw std::invalid_argument("spec: p must be >= 1");
}

int LayerGraph::conv_layer_count() const {
  int count = 0;
  for (const auto& l : layers) {
    if (l.kind == LayerKind::LinearBlock || l.kind == LayerKind::Conv) ++count;
  }
  return count;
}

int receptive_field_radius(const NetworkSpec& spec) { return spec.m + 4; }

namespace {

Layer make_block(const std::string& name, int k, int c_in, int c_out, const NetworkSpec& spec) {
  Layer l;
  l.kind = LayerKind::LinearBlock;
  l.name = name;
  l.k = k;
  l.c_in = c_in;
  l.c_out = c_out;
  l.expanded = spec.use_linear_blocks;
  l.p = spec.use_linear_blocks ? spec.p : 0;
  return l;
}

Layer make_activation(const std::string& name, const NetworkSpec& spec) {
  Layer l;
  l.kind = LayerKind::Activation;
  l.name = name;
  l.act = spec.activation;
  l.channels = spec.f;
  return l;
}

Layer make_residual(LayerKind kind, const std::string& source, bool broadcast = false) {
  Layer l;
  l.kind = kind;
  l.source = source;
  l.broadcast = broadcast;
  return l;
}

Layer make_shuffle(int block) {
  Layer l;
  l.kind = LayerKind::DepthToSpace;
  l.block = block;
  return l;
}

void append_tail_of_graph(LayerGraph& g) {
  const NetworkSpec& spec = g.spec;
  if (spec.use_input_residual) {
    g.layers.push_back(make_residual(LayerKind::LongResidualAdd, "input", /*broadcast=*/true));
  }
  // x4 runs one wide conv and shuffles twice instead of repeating upsample blocks.
  g.layers.push_back(make_shuffle(2));
  if (spec.scale == 4) g.layers.push_back(make_shuffle(2));
}

void init_kernel(Kernel& k, Rng& rng) {
  const double stddev = std::sqrt(2.0 / (static_cast<double>(k.kh) * k.kw * k.ci));
  for (auto& v : k.data) v = static_cast<float>(rng.normal() * stddev);
}

}  // namespace

std::pair<LayerGraph, WeightStore> build_training_graph(const NetworkSpec& spec,
                                                        std::uint64_t seed, bool with_bias) {
  spec.validate();

  LayerGraph g;
  g.spec = spec;
  g.training_form = true;
  g.degenerate_blue = (spec.m == 0);

  g.layers.push_back(make_block("head", 5, 1, spec.f, spec));
  {
    Layer act = make_activation("act_head", spec);
    act.save_tag = "feat";  // feature residual source, and block 0's skip source
    g.layers.push_back(act);
  }
  for (int i = 0; i < spec.m; ++i) {
    const std::string prev = i == 0 ? "feat" : "r" + std::to_string(i - 1);
    g.layers.push_back(make_block("block" + std::to_string(i), 3, spec.f, spec.f, spec));
    if (spec.use_short_residuals) {
      g.layers.push_back(make_residual(LayerKind::ShortResidualAdd, prev));
    }
    Layer act = make_activation("act" + std::to_string(i), spec);
    if (i + 1 < spec.m && spec.use_short_residuals) act.save_tag = "r" + std::to_string(i);
    g.layers.push_back(act);
  }
  g.layers.push_back(make_residual(LayerKind::LongResidualAdd, "feat"));
  g.layers.push_back(make_block("tail", 5, spec.f, spec.pre_shuffle_channels(), spec));
  append_tail_of_graph(g);

  WeightStore store;
  Rng rng(seed);
  for (const auto& l : g.layers) {
    if (l.kind == LayerKind::LinearBlock) {
      if (l.expanded) {
        Kernel w0(l.k, l.k, l.c_in, l.p);
        init_kernel(w0, rng);
        Kernel w1(1, 1, l.p, l.c_out);
        init_kernel(w1, rng);
        store.kernels[l.name + ".w0"] = std::move(w0);
        store.kernels[l.name + ".w1"] = std::move(w1);
        if (with_bias) {
          store.vectors[l.name + ".b0"] = std::vector<float>(l.p, 0.0f);
          store.vectors[l.name + ".b1"] = std::vector<float>(l.c_out, 0.0f);
        }
      } else {
        Kernel w0(l.k, l.k, l.c_in, l.c_out);
        init_kernel(w0, rng);
        store.kernels[l.name + ".w0"] = std::move(w0);
        if (with_bias) {
          store.vectors[l.name + ".b0"] = std::vector<float>(l.c_out, 0.0f);
        }
      }
    } else if (l.kind == LayerKind::Activation && l.act == ActKind::PReLU) {
      store.vectors[l.name + ".slope"] = std::vector<float>(l.channels, 0.25f);
    }
  }
  return {std::move(g), std::move(store)};
}

LayerGraph build_inference_graph(const NetworkSpec& spec) {
  spec.validate();

  LayerGraph g;
  g.spec = spec;
  g.training_form = false;
  g.degenerate_blue = (spec.m == 0);

  auto conv = [](const std::string& name, int k, int c_in, int c_out) {
    Layer l;
    l.kind = LayerKind::Conv;
    l.name = name;
    l.k = k;
    l.c_in = c_in;
    l.c_out = c_out;
    return l;
  };

  g.layers.push_back(conv("head", 5, 1, spec.f));
  {
    Layer act = make_activation("act_head", spec);
    act.save_tag = "feat";
    g.layers.push_back(act);
  }
  for (int i = 0; i < spec.m; ++i) {
    g.layers.push_back(conv("block" + std::to_string(i), 3, spec.f, spec.f));
    g.layers.push_back(make_activation("act" + std::to_string(i), spec));
  }
  g.layers.push_back(make_residual(LayerKind::LongResidualAdd, "feat"));
  g.layers.push_back(conv("tail", 5, spec.f, spec.pre_shuffle_channels()));
  append_tail_of_graph(g);
  return g;
}

WeightStore64 widen(const WeightStore& store) {
  WeightStore64 out;
  for (const auto& [name, k] : store.kernels) {
    Kernel64 w(k.kh, k.kw, k.ci, k.co);
    for (std::size_t i = 0; i < k.data.size(); ++i) w.data[i] = k.data[i];
    out.kernels[name] = std::move(w);
  }
  for (const auto& [name, v] : store.vectors) {
    out.vectors[name] = std::vector<double>(v.begin(), v.end());
  }
  return out;
}

WeightStore narrow(const WeightStore64& store) {
  WeightStore out;
  for (const auto& [name, k] : store.kernels) {
    Kernel w(k.kh, k.kw, k.ci, k.co);
    for (std::size_t i = 0; i < k.data.size(); ++i) w.data[i] = static_cast<float>(k.data[i]);
    out.kernels[name] = std::move(w);
  }
  for (const auto& [name, v] : store.vectors) {
    std::vector<float> f(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) f[i] = static_cast<float>(v[i]);
    out.vectors[name] = std::move(f);
  }
  return out;
}

namespace {

template <typename T>
std::span<const T> bias_of(const WeightStoreT<T>& ws, const std::string& name) {
  const std::vector<T>* b = ws.find_vector(name);
  return b ? std::span<const T>(*b) : std::span<const T>();
}

template <typename T>
void add_residual(TensorT<T>& x, const TensorT<T>& src, bool broadcast) {
  if (x.n != src.n || x.h != src.h || x.w != src.w) {
    throw std::invalid_argument("residual add: spatial shape mismatch");
  }
  if (broadcast) {
    if (src.c != 1) throw std::invalid_argument("residual add: broadcast source must have 1 channel");
    for (int n = 0; n < x.n; ++n)
      for (int h = 0; h < x.h; ++h)
        for (int w = 0; w < x.w; ++w) {
          const T v = src.at(n, h, w, 0);
          T* px = &x.data[x.index(n, h, w, 0)];
          for (int c = 0; c < x.c; ++c) px[c] += v;
        }
  } else {
    if (src.c != x.c) throw std::invalid_argument("residual add: channel mismatch");
    for (std::size_t i = 0; i < x.data.size(); ++i) x.data[i] += src.data[i];
  }
}

}  // namespace

template <typename T>
TensorT<T> forward(const LayerGraph& graph, const WeightStoreT<T>& weights,
                   const TensorT<T>& input) {
  if (input.c != 1) {
    throw std::invalid_argument("forward: expected a single-channel (luma) input");
  }
  std::map<std::string, TensorT<T>> saved;
  TensorT<T> x = input;
  for (const auto& l : graph.layers) {
    switch (l.kind) {
      case LayerKind::LinearBlock: {
        x = conv2d(x, weights.kernel(l.name + ".w0"), Padding::Same, bias_of(weights, l.name + ".b0"));
        if (l.expanded) {
          x = conv2d(x, weights.kernel(l.name + ".w1"), Padding::Same, bias_of(weights, l.name + ".b1"));
        }
        break;
      }
      case LayerKind::Conv:
        x = conv2d(x, weights.kernel(l.name + ".w"), Padding::Same, bias_of(weights, l.name + ".b"));
        break;
      case LayerKind::Activation:
        if (l.act == ActKind::PReLU) {
          x = prelu<T>(x, weights.vector(l.name + ".slope"));
        } else {
          x = relu(x);
        }
        break;
      case LayerKind::ShortResidualAdd:
      case LayerKind::LongResidualAdd: {
        const TensorT<T>& src = l.source == "input" ? input : saved.at(l.source);
        add_residual(x, src, l.broadcast);
        break;
      }
      case LayerKind::DepthToSpace:
        x = depth_to_space(x, l.block);
        break;
    }
    if (!l.save_tag.empty()) saved[l.save_tag] = x;
  }
  return x;
}

template TensorT<float> forward<float>(const LayerGraph&, const WeightStoreT<float>&,
                                       const TensorT<float>&);
template TensorT<double> forward<double>(const LayerGraph&, const WeightStoreT<double>&,
                                         const TensorT<double>&);

}  // namespace sesr
