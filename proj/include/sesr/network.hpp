#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "sesr/tensor.hpp"

namespace sesr {

enum class ActKind { PReLU, ReLU };

/// Model parameterization: f feature channels, m 3x3 blocks, x2 or x4 upscaling,
/// p expansion channels inside linear blocks, plus the ablation switches.
struct NetworkSpec {
  int f = 16;
  int m = 5;
  int scale = 2;
  int p = 256;
  bool use_linear_blocks = true;    // expanded k*k -> p -> out blocks vs plain convs
  bool use_short_residuals = true;  // skip over each 3x3 block, folded at collapse
  bool use_input_residual = true;   // input image added to all pre-shuffle channels
  ActKind activation = ActKind::PReLU;

  /// Channels entering the pixel shuffle: 4 for x2, 16 for x4 (one conv, shuffle twice).
  int pre_shuffle_channels() const { return scale == 4 ? 16 : 4; }

  void validate() const;
  bool operator==(const NetworkSpec&) const = default;
};

enum class LayerKind {
  LinearBlock,       // k*k conv (optionally expanded through p channels via a 1x1)
  Conv,              // single collapsed conv (inference form)
  Activation,        // PReLU or ReLU
  ShortResidualAdd,  // skip over one 3x3 block, added before the activation
  LongResidualAdd,   // feature-level ("blue") or input-image ("black") skip
  DepthToSpace,
};

struct Layer {
  LayerKind kind{};
  std::string name;  // weight base name ("head", "block3", "tail", "act_head", ...)

  // LinearBlock / Conv
  int k = 0, c_in = 0, c_out = 0, p = 0;
  bool expanded = false;  // two-conv linear block vs single conv

  // Activation
  ActKind act = ActKind::PReLU;
  int channels = 0;

  // Residual adds
  std::string source;      // saved tag, or "input" for the graph input
  bool broadcast = false;  // add a 1-channel source to every channel

  // DepthToSpace
  int block = 0;

  std::string save_tag;  // when set, this layer's output is kept for a later residual
};

/// Ordered, executable layer list in either training or collapsed form.
struct LayerGraph {
  NetworkSpec spec;
  bool training_form = true;
  bool degenerate_blue = false;  // m == 0: the feature residual adds the head output to itself
  std::vector<Layer> layers;

  int conv_layer_count() const;
};

/// Named tensor map backing a LayerGraph: 4-d kernels plus 1-d bias/slope vectors.
template <typename T>
struct WeightStoreT {
  std::map<std::string, KernelT<T>> kernels;
  std::map<std::string, std::vector<T>> vectors;

  const KernelT<T>& kernel(const std::string& name) const {
    auto it = kernels.find(name);
    if (it == kernels.end()) throw std::out_of_range("weight store: missing kernel " + name);
    return it->second;
  }
  const std::vector<T>& vector(const std::string& name) const {
    auto it = vectors.find(name);
    if (it == vectors.end()) throw std::out_of_range("weight store: missing vector " + name);
    return it->second;
  }
  const std::vector<T>* find_vector(const std::string& name) const {
    auto it = vectors.find(name);
    return it == vectors.end() ? nullptr : &it->second;
  }
  std::int64_t kernel_element_count() const {
    std::int64_t total = 0;
    for (const auto& [_, k] : kernels) total += k.size();
    return total;
  }
};

using WeightStore = WeightStoreT<float>;
using WeightStore64 = WeightStoreT<double>;

WeightStore64 widen(const WeightStore& store);
WeightStore narrow(const WeightStore64& store);

/// Builds the overparameterized training graph and freshly initialized weights.
/// Conv weights are He-initialized Gaussians (std = sqrt(2 / (k^2 * c_in))), biases
/// zero, PReLU slopes 0.25; the draw order is fixed so a seed pins every byte.
std::pair<LayerGraph, WeightStore> build_training_graph(const NetworkSpec& spec,
                                                        std::uint64_t seed,
                                                        bool with_bias = true);

/// Builds the narrow inference graph: m+2 convolutions, activations after the first
/// m+1, the two surviving long residuals, and the pixel shuffle. Weight slots carry
/// the names the collapse engine emits.
LayerGraph build_inference_graph(const NetworkSpec& spec);

/// Executes a graph on an N x H x W x 1 input in [0, 1]. Output is
/// N x (scale*H) x (scale*W) x 1 and is not clamped.
template <typename T>
TensorT<T> forward(const LayerGraph& graph, const WeightStoreT<T>& weights,
                   const TensorT<T>& input);

/// Maximum input-pixel distance that can influence an output pixel: two 5x5 and
/// m 3x3 convolutions give m + 4.
int receptive_field_radius(const NetworkSpec& spec);

extern template TensorT<float> forward<float>(const LayerGraph&, const WeightStoreT<float>&,
                                              const TensorT<float>&);
extern template TensorT<double> forward<double>(const LayerGraph&, const WeightStoreT<double>&,
                                                const TensorT<double>&);

}  // namespace sesr
