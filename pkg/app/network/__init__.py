"""
Сеть многоуровневого сходства
"""
from app.network.architecture import ModelConfig, StripeSpec, shape_ledger, tensor_shapes
from app.network.complexity import count_flops, count_params, count_params_closed_form, flops_breakdown
from app.network.csn import SimMaps, extract_parts, fuse_levels, similarity_maps, split_stripes
from app.network.losses import (
    MATCH,
    classification_loss,
    combined_loss,
    contrastive_loss,
    descriptor_distance,
    simi_score,
)
from app.network.siamese import PairOutput, SiameseNetwork
from app.network.stn import (
    AffineParams,
    SamplingGrid,
    affine_grid,
    bilinear_sample,
    constrain_params,
    localization_forward,
    rotation_l1_penalty,
)
from app.network.weights import NetworkWeights

__all__ = [
    "MATCH",
    "AffineParams",
    "ModelConfig",
    "NetworkWeights",
    "PairOutput",
    "SamplingGrid",
    "SiameseNetwork",
    "SimMaps",
    "StripeSpec",
    "affine_grid",
    "bilinear_sample",
    "classification_loss",
    "combined_loss",
    "constrain_params",
    "contrastive_loss",
    "count_flops",
    "count_params",
    "count_params_closed_form",
    "descriptor_distance",
    "extract_parts",
    "flops_breakdown",
    "fuse_levels",
    "localization_forward",
    "rotation_l1_penalty",
    "shape_ledger",
    "similarity_maps",
    "simi_score",
    "split_stripes",
    "tensor_shapes",
]
