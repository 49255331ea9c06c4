"""Finite-scale Lyapunov exponents of quasiperiodic SL(2, R) Schrödinger cocycles."""

import os

# the bundled TBB is too old for numba; pick a layer that always works
os.environ.setdefault("NUMBA_THREADING_LAYER", "workqueue")

from .cocycle import (  # noqa: E402
    LogNormProduct,
    PotentialSpec,
    SL2,
    cocycle_product,
    log_norm_table,
    one_step_matrix,
    sl2_norm,
)

__version__ = "0.1.0"

__all__ = [
    "LogNormProduct",
    "PotentialSpec",
    "SL2",
    "cocycle_product",
    "log_norm_table",
    "one_step_matrix",
    "sl2_norm",
]
