"""Spike-and-slab variational graph autoencoder with blockmodel edge decoding."""

from _norad import (
    TrainConfig,
    average_precision,
    generate_synthetic,
    hits_at_k,
    hungarian_accuracy,
    kmeans,
    nmi,
    rectify,
    roc_auc,
    score_edges,
    train,
)

__all__ = [
    "TrainConfig",
    "average_precision",
    "generate_synthetic",
    "hits_at_k",
    "hungarian_accuracy",
    "kmeans",
    "nmi",
    "rectify",
    "roc_auc",
    "score_edges",
    "train",
]
