"""Churn scoring, customer profiling and retention offers."""

from ._core import (
    ChurnModel,
    CustomerTable,
    RatingsMatrix,
    RetentaError,
    __version__,
    agglomerative_cluster,
    cli,
    cosine_similarity,
    generate_synthetic,
    kmeans,
    load_customers,
    load_model,
    load_ratings,
    recommend,
    run_pipeline,
    score,
    segment,
    sigmoid,
    train,
)

__all__ = [
    "ChurnModel",
    "CustomerTable",
    "RatingsMatrix",
    "RetentaError",
    "__version__",
    "agglomerative_cluster",
    "cli",
    "cosine_similarity",
    "generate_synthetic",
    "kmeans",
    "load_customers",
    "load_model",
    "load_ratings",
    "recommend",
    "run_pipeline",
    "score",
    "segment",
    "sigmoid",
    "train",
]
