"""Continued fractions, convergents and simple Diophantine diagnostics."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence, Union

import numpy as np

# an input double is trusted to this absolute accuracy
PRECISION_BUDGET = 1e-15

NAMED_PERIODS = {
    "golden": (1,),
    "sqrt2m1": (2,),
}
NAMED_VALUES = {
    "golden": (math.sqrt(5.0) - 1.0) / 2.0,
    "sqrt2m1": math.sqrt(2.0) - 1.0,
}

Frequency = Union[str, float, Fraction]


@dataclass(frozen=True)
class Convergent:
    p: int
    q: int

    def __iter__(self):
        yield self.p
        yield self.q

    @property
    def value(self) -> Fraction:
        return Fraction(self.p, self.q)


@dataclass(frozen=True)
class ConvergentList:
    """Partial quotients a_1, a_2, ... of omega = [0; a_1, a_2, ...] and convergents.

    The 0/1 convergent is kept only when a_1 > 1, so denominators are
    strictly increasing.  ``terminated`` marks a rational omega whose
    expansion ended; ``precision_exhausted`` marks a floating-point input
    whose trustworthy convergents ran out before ``max_q``.
    """

    omega: float
    partial_quotients: tuple[int, ...]
    convergents: tuple[Convergent, ...]
    exact: bool = False
    terminated: bool = False
    precision_exhausted: bool = False
    name: str | None = None

    @property
    def denominators(self) -> list[int]:
        return [c.q for c in self.convergents]

    def find(self, q: int) -> Convergent | None:
        for c in self.convergents:
            if c.q == q:
                return c
        return None

    def preceding(self, q: int) -> Convergent | None:
        """The stored convergent just before the one with denominator q."""
        prev = None
        for c in self.convergents:
            if c.q == q:
                return prev
            prev = c
        return None

    @property
    def truncated(self) -> bool:
        return self.terminated or self.precision_exhausted


def _convergents_from_quotients(quotients: Sequence[int]) -> list[Convergent]:
    out = []
    p_prev, q_prev = 1, 0  # p_{-1}, q_{-1}
    p, q = 0, 1  # p_0 / q_0 = 0 / 1
    if quotients and quotients[0] > 1:
        out.append(Convergent(0, 1))
    for a in quotients:
        p, p_prev = a * p + p_prev, p
        q, q_prev = a * q + q_prev, q
        out.append(Convergent(p, q))
    return out


def from_quotients(
    quotients: Sequence[int], max_q: int | None = None, name: str | None = None, terminated: bool = False
) -> ConvergentList:
    """Build a list from explicit partial quotients a_1, a_2, ... (all >= 1)."""
    quotients = [int(a) for a in quotients]
    if any(a < 1 for a in quotients):
        raise ValueError("partial quotients must be positive integers")
    convs = _convergents_from_quotients(quotients)
    kept_q = [a for a in quotients]
    if max_q is not None:
        keep = [c for c in convs if c.q <= max_q]
        n_used = len(keep) - (1 if convs and convs[0].q == 1 and convs[0].p == 0 else 0)
        convs = keep
        kept_q = quotients[:n_used]
        terminated = terminated and len(kept_q) == len(quotients)
    last = convs[-1] if convs else Convergent(0, 1)
    return ConvergentList(
        omega=float(last.value),
        partial_quotients=tuple(kept_q),
        convergents=tuple(convs),
        exact=True,
        terminated=terminated,
        name=name,
    )


def periodic_cf(preperiod: Sequence[int], period: Sequence[int], max_q: int, name: str | None = None) -> ConvergentList:
    """Exact expansion of a quadratic irrational [0; preperiod, period, period, ...]."""
    if not period:
        raise ValueError("period must be non-empty")
    quotients = list(preperiod)
    # grow until the denominators pass max_q
    while True:
        convs = _convergents_from_quotients(quotients)
        if convs and convs[-1].q > max_q:
            break
        quotients.extend(period)
    cf = from_quotients(quotients, max_q=max_q, name=name)
    # omega from a convergent far beyond max_q: error < 1/q^2
    deep = list(quotients)
    while _convergents_from_quotients(deep)[-1].q < 10**12:
        deep.extend(period)
    omega = float(_convergents_from_quotients(deep)[-1].value)
    if name in NAMED_VALUES:
        omega = NAMED_VALUES[name]
    return ConvergentList(omega, cf.partial_quotients, cf.convergents, exact=True, name=name)


def parse_frequency(spec: Frequency) -> float | Fraction | str:
    """Accept 'golden', 'sqrt2m1', 'p/q', a decimal string or a number."""
    if isinstance(spec, (Fraction, float, int)) and not isinstance(spec, bool):
        return spec
    s = str(spec).strip()
    if s in NAMED_PERIODS:
        return s
    if "/" in s:
        return Fraction(s)
    try:
        return float(s)
    except ValueError as exc:
        raise ValueError(f"unrecognised frequency {spec!r}") from exc


def frequency_value(spec: Frequency) -> float:
    spec = parse_frequency(spec)
    if isinstance(spec, str):
        return NAMED_VALUES[spec]
    return float(spec)


def _certified(x: Fraction, p: int, q: int, p_prev: int, q_prev: int) -> bool:
    """Is p/q a convergent of every real within PRECISION_BUDGET of x?

    True if Legendre's criterion holds with room to spare, or if the whole
    budget ball stays inside the cylinder between p/q and the mediant
    (p + p_prev)/(q + q_prev).
    """
    err = float(abs(x - Fraction(p, q)))
    if err + PRECISION_BUDGET < 1.0 / (2.0 * q * q):
        return True
    far = float(abs(x - Fraction(p + p_prev, q + q_prev)))
    return min(err, far) > PRECISION_BUDGET


def continued_fraction(omega: Frequency, max_q: int) -> ConvergentList:
    """All convergents of omega with q <= max_q.

    Named irrationals and exact rationals expand exactly.  A float is
    expanded as the exact binary rational it stores, and a convergent is
    kept only while it is certified for every real within the precision
    budget of the input.
    """
    spec = parse_frequency(omega)
    if isinstance(spec, str):
        return periodic_cf((), NAMED_PERIODS[spec], max_q, name=spec)
    value = float(spec)
    if not 0.0 < value < 1.0:
        raise ValueError(f"omega must lie in (0, 1), got {value}")
    exact_input = isinstance(spec, (Fraction, int))
    x = Fraction(spec) if exact_input else Fraction(value)
    quotients: list[int] = []
    exhausted = False
    terminated = False
    rem = x
    p_prev, q_prev, p, q = 1, 0, 0, 1
    convs: list[Convergent] = []
    while True:
        if rem == 0:
            terminated = True
            break
        inv = 1 / rem
        a = math.floor(inv)
        rem = inv - a
        np_, nq = a * p + p_prev, a * q + q_prev
        if nq > max_q:
            break
        if not exact_input and not _certified(x, np_, nq, p, q):
            exhausted = True
            break
        if not quotients and a > 1:
            convs.append(Convergent(0, 1))
        quotients.append(a)
        p_prev, q_prev, p, q = p, q, np_, nq
        convs.append(Convergent(p, q))
    return ConvergentList(
        omega=value,
        partial_quotients=tuple(quotients),
        convergents=tuple(convs),
        exact=exact_input,
        terminated=terminated,
        precision_exhausted=exhausted,
    )


def circle_distance(t):
    """||t||, the distance to the nearest integer."""
    t = np.asarray(t, dtype=float)
    return np.abs(t - np.rint(t))


@dataclass(frozen=True)
class DiophantineReport:
    satisfies: bool
    worst_k: int
    margin: float


def strong_diophantine_check(omega: Frequency, constant: float, power: float, k_max: int) -> DiophantineReport:
    """Scan ||k omega|| > constant / (k log(1 + k)^power) for 1 <= k <= k_max."""
    if k_max < 1:
        raise ValueError("k_max must be >= 1")
    if isinstance(omega, ConvergentList):
        omega = omega.omega
    spec = parse_frequency(omega)
    k = np.arange(1, int(k_max) + 1)
    if isinstance(spec, Fraction):
        dist = np.array([float(abs(kk * spec - round(kk * spec))) for kk in k.tolist()])
    else:
        dist = circle_distance(k * frequency_value(spec))
    bound = constant / (k * np.log1p(k) ** power)
    ratio = dist / bound
    i = int(np.argmin(ratio))
    margin = float(ratio[i])
    return DiophantineReport(satisfies=bool(margin > 1.0), worst_k=int(k[i]), margin=margin)


def next_approximant_above(cf: ConvergentList, log_threshold: float) -> Convergent | None:
    """Smallest stored convergent with log q > log_threshold; None once the list runs out."""
    if log_threshold < 0:
        raise ValueError("log_threshold must be >= 0")
    for c in cf.convergents:
        if math.log(c.q) > log_threshold:
            return c
    return None
