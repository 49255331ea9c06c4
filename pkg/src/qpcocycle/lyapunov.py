"""Finite-scale Lyapunov exponents and the diagnostics built on them.

L_N(E, omega) is the x-average of (1/N) log||M_N(E, x, omega)||, estimated
on the midpoint grid x_j = (j + 1/2) / M.  All sums run in fixed order, so
results do not depend on the worker count.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .cocycle import PotentialSpec, log_norm_table

MIN_GRID = 64


def midpoint_grid(m: int) -> np.ndarray:
    if m < MIN_GRID:
        raise ValueError(f"grid size must be >= {MIN_GRID}, got {m}")
    return (np.arange(m) + 0.5) / m


def sample_points(m: int, sampling: str = "grid", seed: int | None = None) -> np.ndarray:
    if sampling == "grid":
        return midpoint_grid(m)
    if sampling == "monte_carlo":
        if m < MIN_GRID:
            raise ValueError(f"sample size must be >= {MIN_GRID}, got {m}")
        return np.random.default_rng(seed).random(m)
    raise ValueError(f"unknown sampling {sampling!r}")


def grid_mean(values: np.ndarray) -> float:
    """The one reduction used everywhere, so profile means match L_N bit for bit."""
    return float(np.sum(values, axis=-1) / values.shape[-1])


@dataclass(frozen=True)
class ScaleEstimate:
    N: int
    grid_size: int
    value: float
    dispersion: float


@dataclass(frozen=True)
class Profile:
    """u(x_j) = (1/N) log||M_N(E, x_j)|| on a grid, with what produced it."""

    x: np.ndarray
    u: np.ndarray
    N: int
    omega: float | None = None
    energy: float | None = None
    potential: PotentialSpec | None = None

    @property
    def mean(self) -> float:
        return grid_mean(self.u)

    def __iter__(self):
        return iter(zip(self.x.tolist(), self.u.tolist()))


def scale_table(
    v: PotentialSpec,
    omega: float,
    energies: Sequence[float],
    scales: Sequence[int],
    m: int,
    sampling: str = "grid",
    seed: int | None = None,
) -> np.ndarray:
    """Per-site exponents u[e, j, k] = (1/N_k) log||M_{N_k}(E_e, x_j)||."""
    xs = sample_points(m, sampling, seed)
    table = log_norm_table(v, omega, energies, xs, scales)
    return table / np.asarray(scales, dtype=float)


def estimates_from_table(u: np.ndarray, scales: Sequence[int]) -> list[ScaleEstimate]:
    """Collapse one energy's (M, len(scales)) block into ScaleEstimates."""
    out = []
    for k, n in enumerate(scales):
        col = np.ascontiguousarray(u[:, k])
        out.append(ScaleEstimate(int(n), col.shape[0], grid_mean(col), float(np.std(col))))
    return out


def finite_scale_L(
    v: PotentialSpec,
    omega: float,
    energy: float,
    n: int,
    m: int,
    sampling: str = "grid",
    seed: int | None = None,
) -> ScaleEstimate:
    u = scale_table(v, omega, [energy], [n], m, sampling, seed)[0]
    return estimates_from_table(u, [n])[0]


def multi_scale_L(v, omega, energy, scales, m) -> dict[int, ScaleEstimate]:
    """Several L_N from a single orbit pass per grid point."""
    scales = sorted(set(int(n) for n in scales))
    u = scale_table(v, omega, [energy], scales, m)[0]
    return {e.N: e for e in estimates_from_table(u, scales)}


def per_site_profile(v: PotentialSpec, omega: float, energy: float, n: int, m: int) -> Profile:
    xs = midpoint_grid(m)
    u = np.ascontiguousarray(log_norm_table(v, omega, [energy], xs, [n])[0, :, 0] / n)
    return Profile(xs, u, int(n), float(omega), float(energy), v)


@dataclass(frozen=True)
class DeviationProfile:
    kappa: float
    N: int
    q: int | None
    measure: float


def deviation_measure(profile: Profile, L_N: float, kappa: float, q: int | None = None) -> DeviationProfile:
    """Fraction of grid points with |u(x) - L_N| > kappa."""
    if not 0.0 < kappa < 1.0:
        raise ValueError(f"kappa must lie in (0, 1), got {kappa}")
    u = profile.u
    measure = float(np.count_nonzero(np.abs(u - L_N) > kappa)) / u.shape[0]
    return DeviationProfile(float(kappa), profile.N, q, measure)


def almost_invariance_check(profile: Profile, omega: float, n: int | None = None) -> float:
    """max_j |u(x_j) - u(x_j + omega)|.

    When the profile knows its potential and energy the shifted values are
    recomputed exactly; otherwise they are linearly interpolated on the
    periodic grid.
    """
    n = profile.N if n is None else int(n)
    x = profile.x
    if profile.potential is not None and profile.energy is not None and profile.omega is not None:
        shifted = log_norm_table(profile.potential, profile.omega, [profile.energy], x + omega, [n])[0, :, 0] / n
    else:
        xp = np.concatenate([x - 1.0, x, x + 1.0])
        up = np.concatenate([profile.u] * 3)
        shifted = np.interp(np.mod(x + omega, 1.0), xp, up)
    return float(np.max(np.abs(profile.u - shifted)))


@dataclass(frozen=True)
class FourierDecayReport:
    """|u_hat(k)| for 1 <= k <= M/4 and the fitted C/k envelope.

    ``fitted_C`` is the least-squares C in |u_hat(k)| ~ C/k and
    ``excess_fraction`` the share of spectral mass sum |u_hat|^2 lying above
    that envelope.  ``envelope_C`` = max k |u_hat(k)| is the smallest C for
    which the bound holds at every k.
    """

    zeroth: float
    coefficients: np.ndarray
    fitted_C: float
    excess_fraction: float
    envelope_C: float = 0.0


def fourier_decay(profile) -> FourierDecayReport:
    u = profile.u if isinstance(profile, Profile) else np.asarray(profile, dtype=float)
    m = u.shape[0]
    if m < 4 or m & (m - 1):
        raise ValueError(f"grid size must be a power of two, got {m}")
    mags = np.abs(np.fft.rfft(u)) / m
    kmax = m // 4
    k = np.arange(1, kmax + 1)
    coeffs = mags[1 : kmax + 1]
    inv = 1.0 / k
    fitted = float(np.dot(coeffs, inv) / np.dot(inv, inv))
    total = float(np.dot(coeffs, coeffs))
    over = np.maximum(0.0, coeffs - fitted * inv)
    excess = float(np.dot(over, over) / total) if total > 0 else 0.0
    return FourierDecayReport(grid_mean(u), coeffs, fitted, excess, float(np.max(coeffs * k)))


@dataclass(frozen=True)
class ExtrapolationResult:
    N0: int
    L_N0: float
    L_2N0: float
    extrapolated: float
    predicted_error_log: float | None = None
    cross_check_L: float | None = None
    flagged: bool = False

    @property
    def step(self) -> float:
        return abs(self.L_2N0 - self.L_N0)


def extrapolate(L_N0: float, L_2N0: float) -> float:
    return 2.0 * L_2N0 - L_N0


def extrapolate_L(
    v: PotentialSpec,
    omega: float,
    energy: float,
    n0: int,
    m: int,
    kappa: float | None = None,
    q: int | None = None,
    c: float | None = None,
) -> ExtrapolationResult:
    """2 L_{2N0} - L_{N0} from one pass over the grid.

    With ``kappa``, ``q`` and ``c`` given, the advisory error exponent
    -c kappa q is attached.
    """
    est = multi_scale_L(v, omega, energy, [n0, 2 * n0], m)
    a, b = est[n0].value, est[2 * n0].value
    pred = -c * kappa * q if None not in (kappa, q, c) else None
    return ExtrapolationResult(int(n0), a, b, extrapolate(a, b), pred)


def extrapolate_many(v, omega, energies, n0, m) -> list[ExtrapolationResult]:
    u = scale_table(v, omega, energies, [n0, 2 * n0], m)
    out = []
    for block in u:
        a, b = estimates_from_table(block, [n0, 2 * n0])
        out.append(ExtrapolationResult(int(n0), a.value, b.value, extrapolate(a.value, b.value)))
    return out


def reference_L(v, omega, energy, n0, m, factor: int = 8) -> ExtrapolationResult:
    """Extrapolated L at N0, cross-checked against the raw L at factor*N0.

    Flagged when the two disagree by more than three extrapolation steps.
    """
    est = multi_scale_L(v, omega, energy, [n0, 2 * n0, factor * n0], m)
    a, b = est[n0].value, est[2 * n0].value
    ext = extrapolate(a, b)
    far = est[factor * n0].value
    flagged = abs(ext - far) > 3.0 * abs(b - a)
    return ExtrapolationResult(int(n0), a, b, ext, None, far, bool(flagged))


def uniform_upper_check(
    v: PotentialSpec, omega: float, energy: float, n: int, m: int, L_ref: float | None = None
) -> float:
    """max_j (1/N) log||M_N(x_j)|| - L_ref, L_ref defaulting to the N-scale extrapolation."""
    u = scale_table(v, omega, [energy], [n, 2 * n], m)[0]
    if L_ref is None:
        a, b = estimates_from_table(u, [n, 2 * n])
        L_ref = extrapolate(a.value, b.value)
    return float(np.max(u[:, 0]) - L_ref)


def constant_cocycle_exponent(value: float, energy: float) -> float:
    """log of the spectral radius of [[value - E, -1], [1, 0]] (0 when elliptic)."""
    t = abs(value - energy)
    if t <= 2.0:
        return 0.0
    return math.log(0.5 * (t + math.sqrt(t * t - 4.0)))
