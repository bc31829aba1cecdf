"""Null-space algorithms and spectral filters for symmetric operator blocks."""

from .filters import SpectralFilter
from .nullspace import (
    dense_null_oracle,
    pasi_nullspace,
    principal_angles,
    rqr_nullspace,
    sil_nullspace,
)

__all__ = [
    "SpectralFilter",
    "dense_null_oracle",
    "pasi_nullspace",
    "principal_angles",
    "rqr_nullspace",
    "sil_nullspace",
]
