#include "sesr/collapse.hpp"

#include <stdexcept>
#include <string>

namespace sesr {

namespace {

std::vector<double> collapse_bias_chain(const std::vector<Kernel64>& weights,
                                        const std::vector<std::vector<double>>& biases) {
  // A zero input turns the first conv into its bias; each 1x1 then maps the
  // running offset through its weights and adds its own bias.
  std::vector<double> v = biases[0];
  if (v.empty()) v.assign(weights[0].co, 0.0);
  for (std::size_t i = 1; i < weights.size(); ++i) {
    const Kernel64& w = weights[i];
    std::vector<double> next(w.co, 0.0);
    for (int co = 0; co < w.co; ++co) {
      double acc = 0.0;
      for (int ci = 0; ci < w.ci; ++ci) acc += w.at(0, 0, ci, co) * v[ci];
      if (!biases[i].empty()) acc += biases[i][co];
      next[co] = acc;
    }
    v = std::move(next);
  }
  return v;
}

}  // namespace

CollapsedWeight collapse_linear_block(const std::vector<Kernel64>& weights, int k, int n_in,
                                      int n_out, const std::vector<std::vector<double>>& biases) {
  if (weights.empty()) throw std::invalid_argument("collapse: empty weight chain");
  if (weights[0].kh != k || weights[0].kw != k) {
    throw std::invalid_argument("collapse: first kernel must be " + std::to_string(k) + "x" +
                                std::to_string(k));
  }
  if (weights[0].ci != n_in) throw std::invalid_argument("collapse: first kernel input channel mismatch");
  for (std::size_t i = 1; i < weights.size(); ++i) {
    if (weights[i].kh != 1 || weights[i].kw != 1) {
      throw std::invalid_argument("collapse: inner kernels must be 1x1");
    }
    if (weights[i].ci != weights[i - 1].co) {
      throw std::invalid_argument("collapse: channel chain inconsistent at kernel " +
                                  std::to_string(i));
    }
  }
  if (weights.back().co != n_out) throw std::invalid_argument("collapse: output channel mismatch");
  if (!biases.empty()) {
    if (biases.size() != weights.size()) {
      throw std::invalid_argument("collapse: bias list length must match weight list");
    }
    for (std::size_t i = 0; i < biases.size(); ++i) {
      if (!biases[i].empty() && static_cast<int>(biases[i].size()) != weights[i].co) {
        throw std::invalid_argument("collapse: bias " + std::to_string(i) + " length mismatch");
      }
    }
  }

  // Identity probe: one batch entry per input channel, padded so a valid k*k conv
  // leaves a k*k spatial response.
  Tensor64 probe(n_in, 1, 1, n_in);
  for (int i = 0; i < n_in; ++i) probe.at(i, 0, 0, i) = 1.0;
  probe = zero_pad(probe, k - 1, k - 1);

  Tensor64 response = probe;
  for (const Kernel64& w : weights) response = conv2d(response, w, Padding::Valid);

  CollapsedWeight out;
  out.kernel = Kernel64(k, k, n_in, n_out);
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j)
      for (int ci = 0; ci < n_in; ++ci)
        for (int co = 0; co < n_out; ++co) {
          out.kernel.at(i, j, ci, co) = response.at(ci, k - 1 - i, k - 1 - j, co);
        }
  if (!biases.empty()) out.bias = collapse_bias_chain(weights, biases);
  return out;
}

Kernel64 residual_identity_weight(int k, int channels) {
  if (k != 3 && k != 5) {
    throw std::invalid_argument("residual identity: kernel size must be 3 or 5");
  }
  if (channels < 1) throw std::invalid_argument("residual identity: channels must be >= 1");
  const int idx = k == 3 ? 1 : 2;
  Kernel64 w(k, k, channels, channels);
  for (int i = 0; i < channels; ++i) w.at(idx, idx, i, i) = 1.0;
  return w;
}

Kernel64 residual_identity_weight_for(const CollapsedWeight& collapsed) {
  const Kernel64& k = collapsed.kernel;
  if (k.kh != k.kw) throw std::invalid_argument("residual identity: kernel must be square");
  if (k.ci != k.co) {
    throw std::invalid_argument("residual identity: residual needs matching channel counts");
  }
  return residual_identity_weight(k.kh, k.co);
}

namespace {

Kernel64 widen_kernel(const Kernel& k) {
  Kernel64 w(k.kh, k.kw, k.ci, k.co);
  for (std::size_t i = 0; i < k.data.size(); ++i) w.data[i] = k.data[i];
  return w;
}

const Kernel64& widen_kernel(const Kernel64& k) { return k; }

template <typename T>
void store_kernel(WeightStoreT<T>& ws, const std::string& name, const Kernel64& k) {
  KernelT<T> out(k.kh, k.kw, k.ci, k.co);
  for (std::size_t i = 0; i < k.data.size(); ++i) out.data[i] = static_cast<T>(k.data[i]);
  ws.kernels[name] = std::move(out);
}

template <typename T>
void store_vector(WeightStoreT<T>& ws, const std::string& name, const std::vector<double>& v) {
  std::vector<T> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = static_cast<T>(v[i]);
  ws.vectors[name] = std::move(out);
}

}  // namespace

template <typename T>
WeightStoreT<T> collapse_network(const LayerGraph& training_graph,
                                 const WeightStoreT<T>& training_weights) {
  if (!training_graph.training_form) {
    throw std::invalid_argument("collapse: graph is already in collapsed form");
  }

  WeightStoreT<T> out;
  const auto& layers = training_graph.layers;
  for (std::size_t li = 0; li < layers.size(); ++li) {
    const Layer& l = layers[li];
    if (l.kind == LayerKind::LinearBlock) {
      std::vector<Kernel64> chain;
      std::vector<std::vector<double>> biases;
      std::vector<std::string> provenance;
      bool any_bias = false;

      auto push = [&](const std::string& w_name, const std::string& b_name) {
        chain.push_back(widen_kernel(training_weights.kernel(w_name)));
        provenance.push_back(w_name);
        const std::vector<T>* b = training_weights.find_vector(b_name);
        biases.emplace_back(b ? std::vector<double>(b->begin(), b->end())
                              : std::vector<double>());
        any_bias = any_bias || b != nullptr;
      };
      push(l.name + ".w0", l.name + ".b0");
      if (l.expanded) push(l.name + ".w1", l.name + ".b1");

      CollapsedWeight cw = collapse_linear_block(chain, l.k, l.c_in, l.c_out,
                                                 any_bias ? biases : std::vector<std::vector<double>>{});
      cw.provenance = std::move(provenance);

      // A short residual over the block is one more identity convolution.
      if (li + 1 < layers.size() && layers[li + 1].kind == LayerKind::ShortResidualAdd) {
        const Kernel64 id = residual_identity_weight_for(cw);
        for (std::size_t i = 0; i < id.data.size(); ++i) cw.kernel.data[i] += id.data[i];
      }

      store_kernel(out, l.name + ".w", cw.kernel);
      if (!cw.bias.empty()) store_vector(out, l.name + ".b", cw.bias);
    } else if (l.kind == LayerKind::Activation && l.act == ActKind::PReLU) {
      out.vectors[l.name + ".slope"] = training_weights.vector(l.name + ".slope");
    }
  }
  return out;
}

template WeightStoreT<float> collapse_network<float>(const LayerGraph&,
                                                     const WeightStoreT<float>&);
template WeightStoreT<double> collapse_network<double>(const LayerGraph&,
                                                       const WeightStoreT<double>&);

}  // namespace sesr
