#pragma once

#include <cstdint>
#include <vector>

#include "sesr/network.hpp"
#include "sesr/tensor.hpp"

namespace sesr {

struct TrainConfig {
  double learning_rate = 5e-4;
  int batch_size = 32;
  int steps = 0;
  int crop = 64;  // crop edge in low-resolution pixels; the HR window scales with it
  std::uint64_t seed = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  void validate(const NetworkSpec& spec) const;
};

/// Mean absolute error over all elements.
template <typename T>
double l1_loss(const TensorT<T>& pred, const TensorT<T>& target);

/// d(l1)/d(pred) = sign(pred - target) / count, with sign(0) = 0.
template <typename T>
TensorT<T> l1_loss_grad(const TensorT<T>& pred, const TensorT<T>& target);

template <typename T>
using GradStoreT = WeightStoreT<T>;
using GradStore = GradStoreT<float>;

/// Reverse-mode gradients of every conv weight, bias, and activation slope in the
/// graph, given d(loss)/d(output). Residual branches sum their gradients; the
/// pixel-shuffle backward is the inverse rearrangement.
template <typename T>
GradStoreT<T> backward(const LayerGraph& graph, const WeightStoreT<T>& weights,
                       const TensorT<T>& input, const TensorT<T>& upstream_grad);

/// One (low-res, high-res) luma pair, each 1 x H x W x 1 in [0, 1].
struct TrainSample {
  Tensor lr;
  Tensor hr;
};

struct TrainResult {
  WeightStore weights;
  std::vector<double> loss_trace;  // one entry per step, loss of that step's batch
};

/// ADAM over random aligned crops with the l1 objective. Deterministic per seed:
/// the same seed gives bit-identical weights and loss trace.
TrainResult train_toy(const NetworkSpec& spec, const TrainConfig& config,
                      const std::vector<TrainSample>& dataset);

extern template double l1_loss<float>(const Tensor&, const Tensor&);
extern template double l1_loss<double>(const Tensor64&, const Tensor64&);
extern template Tensor l1_loss_grad<float>(const Tensor&, const Tensor&);
extern template Tensor64 l1_loss_grad<double>(const Tensor64&, const Tensor64&);
extern template GradStoreT<float> backward<float>(const LayerGraph&, const WeightStoreT<float>&,
                                                  const Tensor&, const Tensor&);
extern template GradStoreT<double> backward<double>(const LayerGraph&, const WeightStoreT<double>&,
                                                    const Tensor64&, const Tensor64&);

}  // namespace sesr
