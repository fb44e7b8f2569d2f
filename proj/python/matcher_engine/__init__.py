"""Python bindings for the one-shot segmentation engine."""

from ._core import (
    MatcherError,
    cosine_similarity,
    emd,
    kmeans_pp,
    load_features,
    load_mask,
    match_patches,
    preset,
    purity_coverage,
    rle_decode,
    rle_encode,
    run_bench,
    save_features,
    save_mask,
    write_synthetic,
)

__all__ = [
    "MatcherError",
    "cosine_similarity",
    "emd",
    "kmeans_pp",
    "load_features",
    "load_mask",
    "match_patches",
    "preset",
    "purity_coverage",
    "rle_decode",
    "rle_encode",
    "run_bench",
    "save_features",
    "save_mask",
    "write_synthetic",
]
