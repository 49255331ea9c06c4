"""Almost Mathieu operator: rational-frequency band spectra and L on the spectrum."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from . import _kernels
from .cocycle import PotentialSpec
from .diophantine import ConvergentList, continued_fraction, frequency_value, parse_frequency
from .lyapunov import estimates_from_table, extrapolate, scale_table


def amo_potential(lam: float) -> PotentialSpec:
    """v(x) = lam cos(2 pi x)."""
    return PotentialSpec((0.0, float(lam)))


def amo_target(lam: float) -> float:
    return max(0.0, math.log(abs(lam) / 2.0)) if lam != 0 else 0.0


@dataclass(frozen=True)
class SpectrumApprox:
    lam: float
    p_over_q: Fraction
    bands: tuple[tuple[float, float], ...]
    trace_tolerance: float

    @property
    def measure(self) -> float:
        return float(sum(hi - lo for lo, hi in self.bands))

    def interior_points(self, per_band: int = 3) -> list[float]:
        """Points lo + i w / (per_band + 1) of every band; per_band = 3 gives quartiles and midpoint."""
        pts = []
        for lo, hi in self.bands:
            w = hi - lo
            pts.extend(lo + w * i / (per_band + 1) for i in range(1, per_band + 1))
        return pts

    def probe_energies(self, n: int) -> np.ndarray:
        """n interior points spread evenly over the sorted candidate list.

        Bands are subdivided more finely when quartiles and midpoints do not
        supply n candidates.
        """
        per_band = max(3, math.ceil(n / max(1, len(self.bands))))
        pts = np.array(self.interior_points(per_band))
        if n >= len(pts):
            return pts
        idx = np.unique(np.rint(np.linspace(0, len(pts) - 1, n)).astype(int))
        return pts[idx]

    def contains(self, energy: float) -> bool:
        return any(lo <= energy <= hi for lo, hi in self.bands)


def _trace_range(cos_c, sin_c, xs, omega, energies, q):
    tr = _kernels.periodic_traces(cos_c, sin_c, xs, omega, np.atleast_1d(np.asarray(energies, float)), q)
    return tr.min(axis=1), tr.max(axis=1)


def band_spectrum(
    v: PotentialSpec,
    p: int,
    q: int,
    x_samples: int = 256,
    E_resolution: float = 1e-6,
    trace_tolerance: float = 1e-9,
    scan_points: int | None = None,
) -> tuple[tuple[float, float], ...]:
    """Union over x of the spectra of the q-periodic operators at frequency p/q.

    E is in the union iff |tr M_q(E, x)| <= 2 for some x.  The trace is a
    continuous function of x with period 1/q, so this is tested as
    min_x tr <= 2 and max_x tr >= -2 over samples of [0, 1/q).  Band edges
    are refined by bisection to ``E_resolution``.
    """
    if q < 1:
        raise ValueError(f"q must be >= 1, got {q}")
    if math.gcd(p, q) != 1:
        raise ValueError(f"p/q = {p}/{q} is not in lowest terms")
    cos_c, sin_c = v.arrays()
    xs = np.arange(x_samples) / (x_samples * q)
    omega = p / q
    tol = trace_tolerance

    def inside(energies):
        lo, hi = _trace_range(cos_c, sin_c, xs, omega, energies, q)
        return (lo <= 2.0 + tol) & (hi >= -2.0 - tol)

    reach = 2.0 + v.sup_bound
    n_scan = scan_points or max(4001, 40 * q + 1)
    grid = np.linspace(-reach - 0.01, reach + 0.01, n_scan)
    flags = inside(grid)

    def refine(out_e, in_e):
        while abs(in_e - out_e) > E_resolution:
            mid = 0.5 * (out_e + in_e)
            if inside([mid])[0]:
                in_e = mid
            else:
                out_e = mid
        return in_e

    bands = []
    start = None
    for i, f in enumerate(flags):
        if f and start is None:
            start = grid[0] if i == 0 else refine(grid[i - 1], grid[i])
        elif not f and start is not None:
            bands.append((float(start), float(refine(grid[i], grid[i - 1]))))
            start = None
    if start is not None:
        bands.append((float(start), float(grid[-1])))
    return tuple(bands)


def periodic_spectrum(
    lam: float,
    p: int,
    q: int,
    x_samples: int = 256,
    E_resolution: float = 1e-6,
    trace_tolerance: float = 1e-9,
    scan_points: int | None = None,
) -> SpectrumApprox:
    bands = band_spectrum(amo_potential(lam), p, q, x_samples, E_resolution, trace_tolerance, scan_points)
    return SpectrumApprox(float(lam), Fraction(p, q), bands, trace_tolerance)


def convergent_for(omega, q: int):
    """(p, q) for a stored convergent denominator of omega, else the nearest fraction."""
    spec = parse_frequency(omega)
    if isinstance(spec, Fraction) and spec.denominator == q:
        return spec.numerator, q
    cf = continued_fraction(spec, q)
    c = cf.find(q)
    if c is not None:
        return c.p, c.q
    p = round(frequency_value(spec) * q)
    g = math.gcd(p, q)
    return p // g, q // g


@dataclass(frozen=True)
class Corollary2Report:
    lam: float
    omega: float
    q_probe: int
    energies: tuple[float, ...]
    L_values: tuple[float, ...]
    target: float
    max_abs_deviation: float
    L_N: tuple[float, ...] = ()
    L_2N: tuple[float, ...] = ()
    flagged: tuple[float, ...] = ()


def corollary2_check(
    lam: float,
    omega,
    q_probe: int,
    N: int,
    M: int,
    n_energies: int,
    spectrum: SpectrumApprox | None = None,
) -> Corollary2Report:
    """Extrapolated L at interior probes of the q_probe approximant bands.

    A probe is flagged when its extrapolation moves by more than three
    extrapolation steps against the run at N/2.
    """
    w = frequency_value(omega)
    if spectrum is None:
        p, q = convergent_for(omega, q_probe)
        spectrum = periodic_spectrum(lam, p, q)
    energies = spectrum.probe_energies(n_energies)
    half = max(1, N // 2)
    scales = sorted({half, N, 2 * N})
    u = scale_table(amo_potential(lam), w, energies, scales, M)
    target = amo_target(lam)
    L, LN, L2N, flagged = [], [], [], []
    for e, block in zip(energies, u):
        est = {s.N: s.value for s in estimates_from_table(block, scales)}
        ext = extrapolate(est[N], est[2 * N])
        ext_half = extrapolate(est[half], est[N])
        if abs(ext - ext_half) > 3.0 * abs(est[2 * N] - est[N]):
            flagged.append(float(e))
        L.append(ext)
        LN.append(est[N])
        L2N.append(est[2 * N])
    dev = max(abs(x - target) for x in L)
    return Corollary2Report(
        float(lam), w, int(q_probe), tuple(map(float, energies)), tuple(L), target, float(dev),
        tuple(LN), tuple(L2N), tuple(flagged),
    )


def approximant_L_gap(
    lam: float, convergents: ConvergentList | Sequence, energy: float, N: int, M: int
) -> list[tuple[int, float]]:
    """Extrapolated L(E, p_s/q_s) along a list of convergents."""
    convs = convergents.convergents if isinstance(convergents, ConvergentList) else convergents
    v = amo_potential(lam)
    out = []
    for p, q in convs:
        u = scale_table(v, p / q, [energy], [N, 2 * N], M)[0]
        a, b = estimates_from_table(u, [N, 2 * N])
        out.append((int(q), extrapolate(a.value, b.value)))
    return out


def single_site_exponent(v: PotentialSpec, energy: float, samples: int = 200_000) -> float:
    """x-average of the log spectral radius of A(x, E); the q = 1 limit."""
    x = (np.arange(samples) + 0.5) / samples
    t = np.abs(np.asarray(v(x)) - energy)
    rho = np.where(t > 2.0, 0.5 * (t + np.sqrt(np.maximum(t * t - 4.0, 0.0))), 1.0)
    return float(np.mean(np.log(rho)))


@dataclass(frozen=True)
class DiscontinuityProbe:
    energies: tuple[float, ...]
    L_rational: tuple[float, ...]
    L_shifted: tuple[float, ...]
    gaps: tuple[float, ...]

    @property
    def max_gap(self) -> float:
        return max(self.gaps)


def rational_discontinuity_probe(
    lam: float, p: int, q: int, delta: float, N: int, M: int, energies: Sequence[float] | None = None
) -> DiscontinuityProbe:
    """|L(E, p/q) - L(E, p/q + delta)| at interior probes of the p/q bands."""
    if energies is None:
        energies = periodic_spectrum(lam, p, q).interior_points()
    energies = np.asarray(energies, dtype=float)
    v = amo_potential(lam)
    vals = []
    for w in (p / q, p / q + delta):
        u = scale_table(v, w, energies, [N, 2 * N], M)
        vals.append([extrapolate(*(s.value for s in estimates_from_table(b, [N, 2 * N]))) for b in u])
    gaps = tuple(abs(a - b) for a, b in zip(*vals))
    return DiscontinuityProbe(tuple(map(float, energies)), tuple(vals[0]), tuple(vals[1]), gaps)
