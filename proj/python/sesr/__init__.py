"""Collapsible linear-block super resolution: training/inference graphs, the
analytic collapse, cost accounting, and evaluation metrics.

Everything is implemented in the C++ core; this package re-exports it.
"""

from sesr._core import (  # noqa: F401
    CostReport,
    LayerCost,
    LayerGraph,
    NetworkSpec,
    TilePlan,
    TrainConfig,
    backward,
    bicubic_resize,
    build_inference_graph,
    build_training_graph,
    collapse_linear_block,
    collapse_network,
    conv2d,
    cost_report,
    count_macs,
    count_params,
    depth_to_space,
    estimate_activation_traffic,
    forward,
    infer_plane,
    l1_loss,
    load_weights,
    plan_tiles,
    prelu,
    psnr,
    receptive_field_radius,
    relu,
    rgb_to_y,
    save_weights,
    space_to_depth,
    ssim,
    tiled_infer,
    train_toy,
    zero_pad,
)

__all__ = [
    "CostReport",
    "LayerCost",
    "LayerGraph",
    "NetworkSpec",
    "TilePlan",
    "TrainConfig",
    "backward",
    "bicubic_resize",
    "build_inference_graph",
    "build_training_graph",
    "collapse_linear_block",
    "collapse_network",
    "conv2d",
    "cost_report",
    "count_macs",
    "count_params",
    "depth_to_space",
    "estimate_activation_traffic",
    "forward",
    "infer_plane",
    "l1_loss",
    "load_weights",
    "plan_tiles",
    "prelu",
    "psnr",
    "receptive_field_radius",
    "relu",
    "rgb_to_y",
    "save_weights",
    "space_to_depth",
    "ssim",
    "tiled_infer",
    "train_toy",
    "zero_pad",
]
