#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "sesr/collapse.hpp"
#include "sesr/cost.hpp"
#include "sesr/eval.hpp"
#include "sesr/network.hpp"
#include "sesr/tensor.hpp"
#include "sesr/trainer.hpp"
#include "sesr/weight_file.hpp"

namespace py = pybind11;
using namespace sesr;

namespace {

using Array = py::array_t<float, py::array::c_style | py::array::forcecast>;

Tensor tensor_from_array(const Array& a) {
  if (a.ndim() != 4) throw std::invalid_argument("expected an NHWC rank-4 array");
  Tensor t(static_cast<int>(a.shape(0)), static_cast<int>(a.shape(1)),
           static_cast<int>(a.shape(2)), static_cast<int>(a.shape(3)));
  std::copy(a.data(), a.data() + t.size(), t.data.begin());
  return t;
}

py::array_t<float> array_from_tensor(const Tensor& t) {
  py::array_t<float> a({t.n, t.h, t.w, t.c});
  std::copy(t.data.begin(), t.data.end(), a.mutable_data());
  return a;
}

Kernel kernel_from_array(const Array& a) {
  if (a.ndim() != 4) throw std::invalid_argument("expected an HWIO rank-4 kernel array");
  Kernel k(static_cast<int>(a.shape(0)), static_cast<int>(a.shape(1)),
           static_cast<int>(a.shape(2)), static_cast<int>(a.shape(3)));
  std::copy(a.data(), a.data() + k.size(), k.data.begin());
  return k;
}

py::array_t<float> array_from_kernel(const Kernel& k) {
  py::array_t<float> a({k.kh, k.kw, k.ci, k.co});
  std::copy(k.data.begin(), k.data.end(), a.mutable_data());
  return a;
}

ImagePlane plane_from_array(const Array& a) {
  if (a.ndim() != 2) throw std::invalid_argument("expected a 2-d luma plane");
  ImagePlane p(static_cast<int>(a.shape(0)), static_cast<int>(a.shape(1)));
  std::copy(a.data(), a.data() + p.samples.size(), p.samples.begin());
  return p;
}

py::array_t<float> array_from_plane(const ImagePlane& p) {
  py::array_t<float> a({p.height, p.width});
  std::copy(p.samples.begin(), p.samples.end(), a.mutable_data());
  return a;
}

WeightStore store_from_dict(const py::dict& d) {
  WeightStore ws;
  for (auto item : d) {
    const std::string name = py::cast<std::string>(item.first);
    Array a = py::cast<Array>(item.second);
    if (a.ndim() == 4) {
      ws.kernels[name] = kernel_from_array(a);
    } else if (a.ndim() == 1) {
      std::vector<float> v(a.data(), a.data() + a.shape(0));
      ws.vectors[name] = std::move(v);
    } else {
      throw std::invalid_argument("weight '" + name + "' must be rank 4 (kernel) or 1 (vector)");
    }
  }
  return ws;
}

py::dict dict_from_store(const WeightStore& ws) {
  py::dict d;
  for (const auto& [name, k] : ws.kernels) d[py::str(name)] = array_from_kernel(k);
  for (const auto& [name, v] : ws.vectors) {
    py::array_t<float> a(static_cast<py::ssize_t>(v.size()));
    std::copy(v.begin(), v.end(), a.mutable_data());
    d[py::str(name)] = a;
  }
  return d;
}

ActKind act_from_string(const std::string& s) {
  if (s == "prelu") return ActKind::PReLU;
  if (s == "relu") return ActKind::ReLU;
  throw std::invalid_argument("activation must be 'prelu' or 'relu'");
}

std::string act_to_string(ActKind a) { return a == ActKind::PReLU ? "prelu" : "relu"; }

Padding padding_from_string(const std::string& s) {
  if (s == "same") return Padding::Same;
  if (s == "valid") return Padding::Valid;
  throw std::invalid_argument("padding must be 'same' or 'valid'");
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Collapsible linear-block super-resolution: graphs, collapse, costs, metrics.";

  py::class_<NetworkSpec>(m, "NetworkSpec")
      .def(py::init([](int f, int m_, int scale, int p, bool use_linear_blocks,
                       bool use_short_residuals, bool use_input_residual,
                       const std::string& activation) {
             NetworkSpec s;
             s.f = f;
             s.m = m_;
             s.scale = scale;
             s.p = p;
             s.use_linear_blocks = use_linear_blocks;
             s.use_short_residuals = use_short_residuals;
             s.use_input_residual = use_input_residual;
             s.activation = act_from_string(activation);
             s.validate();
             return s;
           }),
           py::arg("f") = 16, py::arg("m") = 5, py::arg("scale") = 2, py::arg("p") = 256,
           py::arg("use_linear_blocks") = true, py::arg("use_short_residuals") = true,
           py::arg("use_input_residual") = true, py::arg("activation") = "prelu")
      .def_readwrite("f", &NetworkSpec::f)
      .def_readwrite("m", &NetworkSpec::m)
      .def_readwrite("scale", &NetworkSpec::scale)
      .def_readwrite("p", &NetworkSpec::p)
      .def_readwrite("use_linear_blocks", &NetworkSpec::use_linear_blocks)
      .def_readwrite("use_short_residuals", &NetworkSpec::use_short_residuals)
      .def_readwrite("use_input_residual", &NetworkSpec::use_input_residual)
      .def_property(
          "activation", [](const NetworkSpec& s) { return act_to_string(s.activation); },
          [](NetworkSpec& s, const std::string& v) { s.activation = act_from_string(v); })
      .def("__repr__", [](const NetworkSpec& s) {
        return "NetworkSpec(f=" + std::to_string(s.f) + ", m=" + std::to_string(s.m) +
               ", scale=" + std::to_string(s.scale) + ", p=" + std::to_string(s.p) + ")";
      });

  py::class_<LayerGraph>(m, "LayerGraph")
      .def_readonly("training_form", &LayerGraph::training_form)
      .def_readonly("degenerate_blue", &LayerGraph::degenerate_blue)
      .def_property_readonly("num_layers",
                             [](const LayerGraph& g) { return g.layers.size(); })
      .def("conv_layer_count", &LayerGraph::conv_layer_count)
      .def_property_readonly("spec", [](const LayerGraph& g) { return g.spec; });

  m.def(
      "build_training_graph",
      [](const NetworkSpec& spec, std::uint64_t seed, bool with_bias) {
        auto [graph, store] = build_training_graph(spec, seed, with_bias);
        return py::make_tuple(graph, dict_from_store(store));
      },
      py::arg("spec"), py::arg("seed") = 0, py::arg("with_bias") = true);
  m.def("build_inference_graph", &build_inference_graph, py::arg("spec"));
  m.def(
      "forward",
      [](const LayerGraph& g, const py::dict& weights, const Array& x) {
        return array_from_tensor(forward(g, store_from_dict(weights), tensor_from_array(x)));
      },
      py::arg("graph"), py::arg("weights"), py::arg("x"));
  m.def(
      "collapse_network",
      [](const LayerGraph& g, const py::dict& weights) {
        return dict_from_store(collapse_network(g, store_from_dict(weights)));
      },
      py::arg("graph"), py::arg("weights"));
  m.def(
      "collapse_linear_block",
      [](const std::vector<Array>& weights, int k, int n_in, int n_out) {
        std::vector<Kernel64> chain;
        for (const Array& a : weights) {
          Kernel kf = kernel_from_array(a);
          Kernel64 kd(kf.kh, kf.kw, kf.ci, kf.co);
          for (std::size_t i = 0; i < kf.data.size(); ++i) kd.data[i] = kf.data[i];
          chain.push_back(std::move(kd));
        }
        CollapsedWeight cw = collapse_linear_block(chain, k, n_in, n_out);
        Kernel out(cw.kernel.kh, cw.kernel.kw, cw.kernel.ci, cw.kernel.co);
        for (std::size_t i = 0; i < out.data.size(); ++i) {
          out.data[i] = static_cast<float>(cw.kernel.data[i]);
        }
        return array_from_kernel(out);
      },
      py::arg("weights"), py::arg("k"), py::arg("n_in"), py::arg("n_out"));
  m.def(
      "residual_identity_weight",
      [](int k, int channels) {
        Kernel64 kd = residual_identity_weight(k, channels);
        Kernel kf(kd.kh, kd.kw, kd.ci, kd.co);
        for (std::size_t i = 0; i < kd.data.size(); ++i) {
          kf.data[i] = static_cast<float>(kd.data[i]);
        }
        return array_from_kernel(kf);
      },
      py::arg("k"), py::arg("channels"));

  m.def(
      "conv2d",
      [](const Array& x, const Array& k, const std::string& padding, py::object bias) {
        std::vector<float> b;
        if (!bias.is_none()) b = py::cast<std::vector<float>>(bias);
        return array_from_tensor(conv2d<float>(tensor_from_array(x), kernel_from_array(k),
                                               padding_from_string(padding), b));
      },
      py::arg("x"), py::arg("kernel"), py::arg("padding") = "same", py::arg("bias") = py::none());
  m.def(
      "zero_pad",
      [](const Array& x, int pad_h, int pad_w) {
        return array_from_tensor(zero_pad(tensor_from_array(x), pad_h, pad_w));
      },
      py::arg("x"), py::arg("pad_h"), py::arg("pad_w"));
  m.def(
      "prelu",
      [](const Array& x, const std::vector<float>& slopes) {
        return array_from_tensor(prelu<float>(tensor_from_array(x), slopes));
      },
      py::arg("x"), py::arg("slopes"));
  m.def("relu",
        [](const Array& x) { return array_from_tensor(relu(tensor_from_array(x))); },
        py::arg("x"));
  m.def(
      "depth_to_space",
      [](const Array& x, int block) {
        return array_from_tensor(depth_to_space(tensor_from_array(x), block));
      },
      py::arg("x"), py::arg("block"));
  m.def(
      "space_to_depth",
      [](const Array& x, int block) {
        return array_from_tensor(space_to_depth(tensor_from_array(x), block));
      },
      py::arg("x"), py::arg("block"));

  py::class_<LayerCost>(m, "LayerCost")
      .def_readonly("layer", &LayerCost::layer)
      .def_readonly("params", &LayerCost::params)
      .def_readonly("macs", &LayerCost::macs);
  py::class_<CostReport>(m, "CostReport")
      .def_readonly("params", &CostReport::params)
      .def_readonly("macs", &CostReport::macs)
      .def_readonly("per_layer", &CostReport::per_layer)
      .def_readonly("peak_activation_elems", &CostReport::peak_activation_elems)
      .def_readonly("lr_h", &CostReport::lr_h)
      .def_readonly("lr_w", &CostReport::lr_w);
  py::class_<TilePlan>(m, "TilePlan")
      .def_readonly("tile_w", &TilePlan::tile_w)
      .def_readonly("tile_h", &TilePlan::tile_h)
      .def_readonly("overlap", &TilePlan::overlap)
      .def_readonly("tile_count_exact", &TilePlan::tile_count_exact)
      .def_readonly("tile_count_ceil", &TilePlan::tile_count_ceil)
      .def_readonly("per_tile_macs", &TilePlan::per_tile_macs)
      .def_readonly("total_macs", &TilePlan::total_macs);

  m.def("count_params", &count_params, py::arg("spec"));
  m.def("count_macs", &count_macs, py::arg("spec"), py::arg("lr_h"), py::arg("lr_w"));
  m.def("cost_report", &cost_report, py::arg("spec"), py::arg("lr_h"), py::arg("lr_w"));
  m.def(
      "plan_tiles",
      [](const NetworkSpec& spec, int frame_h, int frame_w, int tile_h, int tile_w,
         const std::string& overlap) {
        TileOverlap ov;
        if (overlap == "none") {
          ov = TileOverlap::None;
        } else if (overlap == "rf") {
          ov = TileOverlap::ReceptiveField;
        } else {
          throw std::invalid_argument("overlap must be 'none' or 'rf'");
        }
        return plan_tiles(spec, frame_h, frame_w, tile_h, tile_w, ov);
      },
      py::arg("spec"), py::arg("frame_h"), py::arg("frame_w"), py::arg("tile_h"),
      py::arg("tile_w"), py::arg("overlap") = "none");
  m.def("estimate_activation_traffic", &estimate_activation_traffic, py::arg("spec"),
        py::arg("lr_h"), py::arg("lr_w"));
  m.def("receptive_field_radius", &receptive_field_radius, py::arg("spec"));

  m.def(
      "rgb_to_y",
      [](py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast> rgb) {
        if (rgb.ndim() != 3 || rgb.shape(2) != 3) {
          throw std::invalid_argument("expected an H x W x 3 uint8 array");
        }
        std::span<const std::uint8_t> bytes(rgb.data(), static_cast<std::size_t>(rgb.size()));
        return array_from_plane(rgb_to_y(bytes, static_cast<int>(rgb.shape(0)),
                                         static_cast<int>(rgb.shape(1))));
      },
      py::arg("rgb"));
  m.def(
      "bicubic_resize",
      [](const Array& plane, int factor, const std::string& dir) {
        ResizeDir d;
        if (dir == "up") {
          d = ResizeDir::Up;
        } else if (dir == "down") {
          d = ResizeDir::Down;
        } else {
          throw std::invalid_argument("dir must be 'up' or 'down'");
        }
        return array_from_plane(bicubic_resize(plane_from_array(plane), factor, d));
      },
      py::arg("plane"), py::arg("factor"), py::arg("dir"));
  m.def(
      "psnr",
      [](const Array& a, const Array& b, int shave) {
        return psnr(plane_from_array(a), plane_from_array(b), shave);
      },
      py::arg("a"), py::arg("b"), py::arg("shave") = 0);
  m.def(
      "ssim",
      [](const Array& a, const Array& b, int shave) {
        return ssim(plane_from_array(a), plane_from_array(b), shave);
      },
      py::arg("a"), py::arg("b"), py::arg("shave") = 0);
  m.def(
      "tiled_infer",
      [](const LayerGraph& g, const py::dict& weights, const Array& plane, int tile_h,
         int tile_w) {
        return array_from_plane(
            tiled_infer(g, store_from_dict(weights), plane_from_array(plane), tile_h, tile_w));
      },
      py::arg("graph"), py::arg("weights"), py::arg("plane"), py::arg("tile_h"),
      py::arg("tile_w"));
  m.def(
      "infer_plane",
      [](const LayerGraph& g, const py::dict& weights, const Array& plane) {
        return array_from_plane(infer_plane(g, store_from_dict(weights), plane_from_array(plane)));
      },
      py::arg("graph"), py::arg("weights"), py::arg("plane"));

  py::class_<TrainConfig>(m, "TrainConfig")
      .def(py::init([](double learning_rate, int batch_size, int steps, int crop,
                       std::uint64_t seed, double beta1, double beta2, double epsilon) {
             TrainConfig c;
             c.learning_rate = learning_rate;
             c.batch_size = batch_size;
             c.steps = steps;
             c.crop = crop;
             c.seed = seed;
             c.beta1 = beta1;
             c.beta2 = beta2;
             c.epsilon = epsilon;
             return c;
           }),
           py::arg("learning_rate") = 5e-4, py::arg("batch_size") = 32, py::arg("steps") = 0,
           py::arg("crop") = 64, py::arg("seed") = 0, py::arg("beta1") = 0.9,
           py::arg("beta2") = 0.999, py::arg("epsilon") = 1e-8)
      .def_readwrite("learning_rate", &TrainConfig::learning_rate)
      .def_readwrite("batch_size", &TrainConfig::batch_size)
      .def_readwrite("steps", &TrainConfig::steps)
      .def_readwrite("crop", &TrainConfig::crop)
      .def_readwrite("seed", &TrainConfig::seed)
      .def_readwrite("beta1", &TrainConfig::beta1)
      .def_readwrite("beta2", &TrainConfig::beta2)
      .def_readwrite("epsilon", &TrainConfig::epsilon);

  m.def(
      "l1_loss",
      [](const Array& pred, const Array& target) {
        return l1_loss(tensor_from_array(pred), tensor_from_array(target));
      },
      py::arg("pred"), py::arg("target"));
  m.def(
      "backward",
      [](const LayerGraph& g, const py::dict& weights, const Array& x, const Array& upstream) {
        return dict_from_store(
            backward(g, store_from_dict(weights), tensor_from_array(x),
                     tensor_from_array(upstream)));
      },
      py::arg("graph"), py::arg("weights"), py::arg("x"), py::arg("upstream"));
  m.def(
      "train_toy",
      [](const NetworkSpec& spec, const TrainConfig& config,
         const std::vector<std::pair<Array, Array>>& dataset) {
        std::vector<TrainSample> samples;
        samples.reserve(dataset.size());
        for (const auto& [lr, hr] : dataset) {
          samples.push_back({tensor_from_array(lr), tensor_from_array(hr)});
        }
        TrainResult r = train_toy(spec, config, samples);
        return py::make_tuple(dict_from_store(r.weights), r.loss_trace);
      },
      py::arg("spec"), py::arg("config"), py::arg("dataset"));

  m.def(
      "save_weights",
      [](const std::string& path, const NetworkSpec& spec, const std::string& form,
         const py::dict& weights) {
        WeightFile file;
        file.spec = spec;
        if (form == "training") {
          file.form = WeightForm::Training;
        } else if (form == "collapsed") {
          file.form = WeightForm::Collapsed;
        } else {
          throw std::invalid_argument("form must be 'training' or 'collapsed'");
        }
        file.store = store_from_dict(weights);
        save_weight_file(path, file);
      },
      py::arg("path"), py::arg("spec"), py::arg("form"), py::arg("weights"));
  m.def(
      "load_weights",
      [](const std::string& path) {
        WeightFile file = load_weight_file(path);
        return py::make_tuple(file.spec,
                              file.form == WeightForm::Training ? "training" : "collapsed",
                              dict_from_store(file.store));
      },
      py::arg("path"));
}
