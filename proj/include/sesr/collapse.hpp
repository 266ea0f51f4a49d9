#pragma once

#include <string>
#include <vector>

#include "sesr/network.hpp"
#include "sesr/tensor.hpp"

namespace sesr {

/// One fused convolution produced from a linear block, with the collapsed bias
/// chain (empty when the block carried no biases) and the source weight names.
struct CollapsedWeight {
  Kernel64 kernel;
  std::vector<double> bias;
  std::vector<std::string> provenance;
};

/// Fuses a chain of convolutions (one k*k followed by any number of 1x1s) into a
/// single k*k kernel by probing with a zero-padded identity: the channel-identity
/// tensor is pushed through the chain with valid padding and the response is
/// spatially flipped, then permuted to HWIO. The flip arises because the probe
/// measures correlation against reversed offsets; see docs/collapse.md.
/// conv2d(x, result, Same) matches running the chain layer by layer.
CollapsedWeight collapse_linear_block(const std::vector<Kernel64>& weights, int k, int n_in,
                                      int n_out,
                                      const std::vector<std::vector<double>>& biases = {});

/// Identity convolution: zeros except a 1 at the spatial center tap (index 1 for
/// k=3, 2 for k=5) on each channel's diagonal. conv2d with it reproduces the input,
/// so adding it to a collapsed kernel folds a residual into the convolution.
Kernel64 residual_identity_weight(int k, int channels);

/// Shape-checked variant taking the collapsed weight the residual wraps.
Kernel64 residual_identity_weight_for(const CollapsedWeight& collapsed);

/// Collapses every linear block of a training-form graph, folds short residuals
/// into the 3x3 kernels, and copies activation slopes through. The result loads
/// into build_inference_graph(spec) and computes the same function. All arithmetic
/// runs in 64-bit floats; values are cast to T only when written.
template <typename T>
WeightStoreT<T> collapse_network(const LayerGraph& training_graph,
                                 const WeightStoreT<T>& training_weights);

extern template WeightStoreT<float> collapse_network<float>(const LayerGraph&,
                                                            const WeightStoreT<float>&);
extern template WeightStoreT<double> collapse_network<double>(const LayerGraph&,
                                                              const WeightStoreT<double>&);

}  // namespace sesr
