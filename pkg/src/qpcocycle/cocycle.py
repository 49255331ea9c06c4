"""Transfer matrices of quasiperiodic Schrödinger cocycles.

One-step matrices are A(x, E) = [[v(x) - E, -1], [1, 0]] and the N-step
product is M_N(E, x, omega) = A(x + N omega) ... A(x + omega).  Long
products are accumulated with periodic rescaling so the log-norm stays
finite for N up to 1e9.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from . import _kernels

DET_TOL = 1e-9


@dataclass(frozen=True)
class PotentialSpec:
    """Trigonometric polynomial v(x) = sum_k c_k cos(2 pi k x) + sum_k s_k sin(2 pi k x).

    ``cos_coeffs[k]`` multiplies cos(2 pi k x) for k >= 0 and
    ``sin_coeffs[k - 1]`` multiplies sin(2 pi k x) for k >= 1.
    """

    cos_coeffs: tuple[float, ...] = (0.0,)
    sin_coeffs: tuple[float, ...] = ()

    def __post_init__(self):
        cos_c = tuple(float(c) for c in self.cos_coeffs) or (0.0,)
        sin_c = tuple(float(s) for s in self.sin_coeffs)
        if not all(math.isfinite(c) for c in cos_c + sin_c):
            raise ValueError("potential coefficients must be finite")
        object.__setattr__(self, "cos_coeffs", cos_c)
        object.__setattr__(self, "sin_coeffs", sin_c)

    @classmethod
    def constant(cls, value: float = 0.0) -> "PotentialSpec":
        return cls((value,))

    @property
    def degree(self) -> int:
        deg = 0
        for k, c in enumerate(self.cos_coeffs):
            if c != 0.0:
                deg = max(deg, k)
        for k, s in enumerate(self.sin_coeffs, start=1):
            if s != 0.0:
                deg = max(deg, k)
        return deg

    @property
    def sup_bound(self) -> float:
        """Upper bound for max |v| from the absolute coefficient sum."""
        return float(sum(abs(c) for c in self.cos_coeffs) + sum(abs(s) for s in self.sin_coeffs))

    def arrays(self) -> tuple[np.ndarray, np.ndarray]:
        return np.array(self.cos_coeffs, dtype=float), np.array(self.sin_coeffs, dtype=float)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        out = np.full_like(x, self.cos_coeffs[0])
        for k, c in enumerate(self.cos_coeffs[1:], start=1):
            out = out + c * np.cos(2 * np.pi * k * x)
        for k, s in enumerate(self.sin_coeffs, start=1):
            out = out + s * np.sin(2 * np.pi * k * x)
        return out if out.ndim else float(out)

    def to_dict(self) -> dict:
        return {"cos": list(self.cos_coeffs), "sin": list(self.sin_coeffs)}


@dataclass(frozen=True)
class SL2:
    """2x2 real matrix [[a, b], [c, d]], nominally of unit determinant."""

    a: float
    b: float
    c: float
    d: float

    @classmethod
    def from_array(cls, m) -> "SL2":
        m = np.asarray(m, dtype=float)
        return cls(float(m[0, 0]), float(m[0, 1]), float(m[1, 0]), float(m[1, 1]))

    @classmethod
    def identity(cls) -> "SL2":
        return cls(1.0, 0.0, 0.0, 1.0)

    @property
    def det(self) -> float:
        return self.a * self.d - self.b * self.c

    def is_unimodular(self, tol: float = DET_TOL) -> bool:
        # rounding in ad - bc scales with the size of the products
        scale = max(1.0, abs(self.a * self.d), abs(self.b * self.c))
        return abs(self.det - 1.0) <= tol * scale

    def norm(self) -> float:
        return sl2_norm(self)

    def inverse(self) -> "SL2":
        det = self.det
        return SL2(self.d / det, -self.b / det, -self.c / det, self.a / det)

    def array(self) -> np.ndarray:
        return np.array([[self.a, self.b], [self.c, self.d]])

    def __matmul__(self, other: "SL2") -> "SL2":
        return SL2(
            self.a * other.a + self.b * other.c,
            self.a * other.b + self.b * other.d,
            self.c * other.a + self.d * other.c,
            self.c * other.b + self.d * other.d,
        )


@dataclass(frozen=True)
class LogNormProduct:
    """log||M_N|| together with the product rescaled to unit spectral norm.

    ``normalized`` is M_N / ||M_N||, so its determinant is exp(-2 log_norm)
    and may underflow to zero for strongly hyperbolic products.
    """

    log_norm: float
    normalized: np.ndarray = field(repr=False)
    steps: int

    @property
    def exponent(self) -> float:
        return self.log_norm / self.steps


def sl2_norm(m) -> float:
    """Spectral norm of a 2x2 matrix.

    Uses sigma_max = (|(a+d, b-c)| + |(a-d, b+c)|) / 2, which is the same
    quantity as sqrt((f + sqrt(f^2 - 4 det^2)) / 2) with f the squared
    Frobenius norm, written so it neither overflows nor cancels.
    """
    if isinstance(m, SL2):
        a, b, c, d = m.a, m.b, m.c, m.d
    else:
        arr = np.asarray(m, dtype=float)
        a, b, c, d = arr[0, 0], arr[0, 1], arr[1, 0], arr[1, 1]
    return 0.5 * (math.hypot(a + d, b - c) + math.hypot(a - d, b + c))


def one_step_matrix(v: PotentialSpec, x: float, energy: float) -> SL2:
    return SL2(float(v(x)) - energy, -1.0, 1.0, 0.0)


def cocycle_product(v: PotentialSpec, x: float, omega: float, energy: float, n: int) -> LogNormProduct:
    """M_N(E, x, omega) with first factor A(x + omega)."""
    n = int(n)
    if n < 1:
        raise ValueError(f"N must be >= 1, got {n}")
    cos_c, sin_c = v.arrays()
    state = _kernels.fresh_state(float(x) % 1.0)
    _kernels.advance(cos_c, sin_c, float(omega), float(energy), n, state)
    a, b, c, d = state[:4]
    s = _kernels.norm2x2(a, b, c, d)
    return LogNormProduct(
        log_norm=float(state[4] + math.log(s)),
        normalized=np.array([[a, b], [c, d]]) / s,
        steps=n,
    )


def log_norm_table(
    v: PotentialSpec,
    omega: float,
    energies: Iterable[float],
    xs: Iterable[float],
    scales: Sequence[int],
) -> np.ndarray:
    """log||M_N(E, x)|| on a (energy, x, N) grid, one orbit pass per (E, x).

    ``scales`` may be unsorted or repeat; the last axis follows its order.
    """
    scales = [int(n) for n in scales]
    if not scales or min(scales) < 1:
        raise ValueError("scales must be positive integers")
    uniq = np.array(sorted(set(scales)), dtype=np.int64)
    cos_c, sin_c = v.arrays()
    xs = np.mod(np.asarray(xs, dtype=float), 1.0)
    energies = np.atleast_1d(np.asarray(energies, dtype=float))
    table = _kernels.orbit_log_norms(cos_c, sin_c, xs, float(omega), energies, uniq)
    pos = {int(n): i for i, n in enumerate(uniq)}
    return table[:, :, [pos[n] for n in scales]]


def product_log_norm(matrices) -> LogNormProduct:
    """log-norm of A_n ... A_1 for an explicit matrix sequence (A_1 first)."""
    mats = np.asarray(matrices, dtype=float).reshape(-1, 2, 2)
    if len(mats) == 0:
        raise ValueError("empty matrix sequence")
    acc = 0.0
    prod = np.eye(2)
    for m in mats:
        prod = m @ prod
        peak = np.abs(prod).max()
        if peak > _kernels.RESCALE_THRESHOLD:
            s = sl2_norm(prod)
            prod = prod / s
            acc += math.log(s)
    s = sl2_norm(prod)
    return LogNormProduct(log_norm=acc + math.log(s), normalized=prod / s, steps=len(mats))
