"""Avalanche principle: hypothesis checks, the pairwise estimate, and residuals.

For hyperbolic A_1, ..., A_n with ||A_j|| >= mu and no strong cancellation
between neighbours,

    log||A_n ... A_1|| ~= sum_{j<n} log||A_{j+1} A_j|| - sum_{1<j<n} log||A_j||

up to C n / mu.  The absolute constant C is a parameter (default 1).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .cocycle import DET_TOL, product_log_norm, sl2_norm

DEFAULT_C = 1.0


@dataclass(frozen=True)
class AvalancheInput:
    matrices: np.ndarray = field(repr=False)
    mu: float

    def __post_init__(self):
        mats = np.asarray(self.matrices, dtype=float).reshape(-1, 2, 2)
        if self.mu <= 1.0:
            raise ValueError(f"mu must exceed 1, got {self.mu}")
        det = mats[:, 0, 0] * mats[:, 1, 1] - mats[:, 0, 1] * mats[:, 1, 0]
        scale = np.maximum(1.0, np.abs(mats[:, 0, 0] * mats[:, 1, 1]))
        bad = np.flatnonzero(np.abs(det - 1.0) > DET_TOL * scale)
        if bad.size:
            raise ValueError(f"matrix {int(bad[0]) + 1} is not unimodular (det={det[bad[0]]!r})")
        object.__setattr__(self, "matrices", mats)

    @property
    def n(self) -> int:
        return self.matrices.shape[0]


@dataclass(frozen=True)
class HypothesisReport:
    norm_floor: bool
    length: bool
    pairwise: bool
    failing_norms: tuple[int, ...] = ()
    failing_pairs: tuple[int, ...] = ()

    @property
    def ok(self) -> bool:
        return self.norm_floor and self.length and self.pairwise


@dataclass(frozen=True)
class AvalancheReport:
    hypotheses: HypothesisReport
    estimate: float
    exact: float
    residual: float
    bound: float
    factored: bool = False
    largeness_ok: bool = True

    @property
    def hypotheses_ok(self) -> bool:
        if self.factored:
            return self.hypotheses.norm_floor and self.hypotheses.pairwise and self.largeness_ok
        return self.hypotheses.ok

    @property
    def within_bound(self) -> bool:
        return self.residual <= self.bound


def _single_log_norms(mats: np.ndarray) -> np.ndarray:
    return np.log([sl2_norm(m) for m in mats])


def _pair_log_norms(mats: np.ndarray) -> np.ndarray:
    # log||A_{j+1} A_j|| for j = 1..n-1
    return np.log([sl2_norm(mats[j + 1] @ mats[j]) for j in range(len(mats) - 1)])


def check_hypotheses(inp: AvalancheInput) -> HypothesisReport:
    if inp.n < 2:
        raise ValueError("need at least two matrices")
    singles = _single_log_norms(inp.matrices)
    pairs = _pair_log_norms(inp.matrices)
    log_mu = math.log(inp.mu)
    low = np.flatnonzero(singles < log_mu)
    gap = np.abs(singles[:-1] + singles[1:] - pairs)
    cancel = np.flatnonzero(gap >= 0.5 * log_mu)
    return HypothesisReport(
        norm_floor=low.size == 0,
        length=inp.mu > inp.n,
        pairwise=cancel.size == 0,
        failing_norms=tuple(int(i) + 1 for i in low),
        failing_pairs=tuple(int(i) + 1 for i in cancel),
    )


def avalanche_estimate(inp: AvalancheInput) -> float:
    singles = _single_log_norms(inp.matrices)
    pairs = _pair_log_norms(inp.matrices)
    return float(np.sum(pairs) - np.sum(singles[1:-1]))


def _report(inp: AvalancheInput, bound: float, factored: bool, largeness_ok: bool = True) -> AvalancheReport:
    hyp = check_hypotheses(inp)
    est = avalanche_estimate(inp)
    exact = product_log_norm(inp.matrices).log_norm
    return AvalancheReport(hyp, est, exact, abs(exact - est), bound, factored, largeness_ok)


def avalanche_report(inp: AvalancheInput, C: float = DEFAULT_C) -> AvalancheReport:
    return _report(inp, C * inp.n / inp.mu, factored=False)


class FactorizationError(ValueError):
    def __init__(self, index: int, message: str):
        self.index = index
        super().__init__(f"factor {index}: {message}")


def validate_factors(factors: Sequence[int], length: int, mu: float) -> None:
    factors = [int(f) for f in factors]
    if not factors:
        raise FactorizationError(0, "empty factorization")
    if math.prod(factors) != length:
        raise FactorizationError(0, f"product {math.prod(factors)} != sequence length {length}")
    for i, f in enumerate(factors[:-1], start=1):
        if f < 3:
            raise FactorizationError(i, f"n_{i} = {f} < 3")
        if not f < mu / 2:
            raise FactorizationError(i, f"n_{i} = {f} is not below mu/2 = {mu / 2}")
    if not factors[-1] < mu:
        raise FactorizationError(len(factors), f"n_s = {factors[-1]} is not below mu = {mu}")


def factored_check(inp: AvalancheInput, factors: Sequence[int], C: float = DEFAULT_C) -> AvalancheReport:
    """Residual against the factored-length bound 5 C N / mu.

    Only the norm floor and pairwise condition are required; mu > N is
    replaced by the factorization ranges.  The largeness gate
    mu log mu > 27 C is reported in ``largeness_ok``.
    """
    validate_factors(factors, inp.n, inp.mu)
    largeness = inp.mu * math.log(inp.mu) > 27.0 * C
    return _report(inp, 5.0 * C * inp.n / inp.mu, factored=True, largeness_ok=largeness)


def rotation(theta: float) -> np.ndarray:
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]])


def _allowed_angles(rng: np.random.Generator, size: int, exclusion: float) -> np.ndarray:
    out = np.empty(size)
    filled = 0
    half = exclusion / 2
    while filled < size:
        t = rng.uniform(-math.pi, math.pi, size - filled)
        ok = (np.abs(t - math.pi / 2) >= half) & (np.abs(t + math.pi / 2) >= half)
        t = t[ok]
        out[filled : filled + t.size] = t
        filled += t.size
    return out


def random_hyperbolic_sequence(
    rng: np.random.Generator, n: int, mu_floor: float, mu_ceiling: float | None = None, exclusion: float = 0.2
) -> np.ndarray:
    """R(theta_j) diag(mu_j, 1/mu_j) R(phi_j), mu_j uniform in [floor, ceiling].

    Angles are uniform on the circle minus windows of width ``exclusion``
    around +-pi/2.
    """
    mu_ceiling = 10.0 * mu_floor if mu_ceiling is None else mu_ceiling
    mus = rng.uniform(mu_floor, mu_ceiling, n)
    thetas = _allowed_angles(rng, n, exclusion)
    phis = _allowed_angles(rng, n, exclusion)
    return np.array([rotation(t) @ np.diag([m, 1.0 / m]) @ rotation(p) for m, t, p in zip(mus, thetas, phis)])


def diagonal_sequence(n: int, mu: float) -> np.ndarray:
    return np.array([np.diag([mu, 1.0 / mu])] * n)


@dataclass
class EnsembleResult:
    floor: float
    residuals: list[float]
    rejected: int
    scaled: list[float] = field(default_factory=list)

    @property
    def mean_residual(self) -> float:
        return float(np.mean(self.residuals))

    @property
    def max_scaled(self) -> float:
        """max residual * mu / n over the accepted trials."""
        return float(np.max(self.scaled))


def hyperbolic_ensemble(
    seed: int, trials: int, n: int, floor: float, max_attempts: int | None = None
) -> EnsembleResult:
    """``trials`` sequences that satisfy all three hypotheses, with their residuals."""
    rng = np.random.default_rng([seed, int(round(math.log10(floor) * 1000))])
    max_attempts = 20 * trials if max_attempts is None else max_attempts
    residuals, scaled = [], []
    rejected = 0
    while len(residuals) < trials:
        if len(residuals) + rejected >= max_attempts:
            raise RuntimeError(f"only {len(residuals)} of {trials} sequences satisfied the hypotheses")
        inp = AvalancheInput(random_hyperbolic_sequence(rng, n, floor), floor)
        rep = avalanche_report(inp)
        if not rep.hypotheses_ok:
            rejected += 1
            continue
        residuals.append(rep.residual)
        scaled.append(rep.residual * floor / n)
    return EnsembleResult(floor, residuals, rejected, scaled)


def loglog_slope(floors: Sequence[float], values: Sequence[float]) -> float:
    return float(np.polyfit(np.log(floors), np.log(values), 1)[0])
