"""The approximant/scale ladder and the residuals that measure each rung.

Exponential thresholds (e^{q_s}, e^{10 q_s}, e^{4q}) are compared in log
space; scales themselves are Python integers and may be astronomically
large, in which case computing residuals hits the step budget.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable

from .cocycle import PotentialSpec
from .diophantine import ConvergentList, next_approximant_above
from .lyapunov import multi_scale_L

DEFAULT_STEP_BUDGET = 10**7


class BudgetExceeded(RuntimeError):
    """A requested scale is beyond the configured number of cocycle steps."""


@dataclass(frozen=True)
class MultiscaleConstants:
    """Unspecified constants, used for scale selection and advisory bounds only.

    ``exponent_C`` is the C in kappa^{-C}; ``scale_C`` the C in C kappa^{-2} q.
    """

    c_prime: float = 0.1
    c1: float = 0.05
    c2: float = 0.02
    c3: float = 0.01
    exponent_C: float = 3.0
    scale_C: float = 1e-3


@dataclass(frozen=True)
class Level:
    s: int
    q: int | None
    N: int | None
    case: str  # "base", "I", "II" or "truncated"
    intermediate_N: int | None = None
    second_N: int | None = None
    q_intermediate: int | None = None
    truncated: bool = False
    interleaved: bool = True
    divisibility_conflict: bool = False
    reason: str = ""


@dataclass(frozen=True)
class MultiscaleSchedule:
    kappa: float
    levels: tuple[Level, ...]
    constants: MultiscaleConstants = field(default_factory=MultiscaleConstants)

    @property
    def realized(self) -> list[Level]:
        return [lv for lv in self.levels if not lv.truncated]

    @property
    def truncated(self) -> bool:
        return bool(self.levels) and self.levels[-1].truncated


def _check_kappa(kappa: float) -> None:
    if not 0.0 < kappa < 0.01:
        raise ValueError(f"kappa must lie in (0, 1/100), got {kappa}")


def choose_base_scale(
    v: PotentialSpec,
    omega: float,
    energy: float,
    kappa: float,
    q0: int,
    m: int,
    constants: MultiscaleConstants = MultiscaleConstants(),
    max_scale: int = 10**5,
    growth: float = 1.5,
) -> int | None:
    """Smallest N in the window (C kappa^-2 q0, kappa^-C q0) with L_{2N} > 0.9 L_N.

    Candidates grow geometrically; the window is capped at ``max_scale``.
    Also requires L_N > 100 kappa.  Returns None when nothing qualifies.
    """
    _check_kappa(kappa)
    gate = constants.scale_C / kappa**2
    if not q0 > gate:
        raise ValueError(f"q0 = {q0} must exceed C kappa^-2 = {gate:g}")
    lo = gate * q0
    hi = min(kappa ** (-constants.exponent_C) * q0, max_scale)
    n = math.floor(lo) + 1
    while n < hi:
        est = multi_scale_L(v, omega, energy, [n, 2 * n], m)
        a, b = est[n].value, est[2 * n].value
        if a > 100 * kappa and b > 0.9 * a:
            return n
        n = max(n + 1, math.ceil(n * growth))
    return None


def _next_multiple(base: int, above: float) -> int:
    """Smallest multiple of base strictly greater than ``above``."""
    return base * (math.floor(above / base) + 1)


def build_schedule(
    cf: ConvergentList,
    kappa: float,
    N0: int,
    q0: int,
    level_budget: int = 8,
    q_budget_log: float = 700.0,
    constants: MultiscaleConstants = MultiscaleConstants(),
) -> MultiscaleSchedule:
    """Construct q_0 < N_0 < q_1 < N_1 < ... with N_{s-1} | N_s.

    q_{s+1} is the first stored approximant with log q_{s+1} > q_s.  Case I
    when log q_{s+1} < 10 q_s; otherwise Case II inserts the intermediate
    scale N ~ max(kappa^-2 q, e^{5 c1 kappa q_s}) with q | N (q the
    approximant preceding q_{s+1}) and the second scale N'' = 3^b N with
    N'' ~ e^{-2q} q_{s+1} once log q_{s+1} > 4q.
    """
    scale_c = constants.scale_C / kappa**2
    levels = [
        Level(0, int(q0), int(N0), "base", interleaved=q0 < N0),
    ]
    while len(levels) <= level_budget:
        cur = levels[-1]
        s = cur.s + 1
        if cur.q > q_budget_log:
            levels.append(Level(s, None, None, "truncated", truncated=True, reason="threshold beyond budget"))
            break
        nxt = next_approximant_above(cf, float(cur.q))
        if nxt is None:
            levels.append(Level(s, None, None, "truncated", truncated=True, reason="convergents exhausted"))
            break
        q_next = nxt.q
        log_q_next = math.log(q_next)
        # interleaving N_s < q_{s+1} for the level just closed
        levels[-1] = replace(cur, interleaved=cur.interleaved and cur.N < q_next)
        if log_q_next < 10 * cur.q:
            n_next = _next_multiple(cur.N, scale_c * q_next)
            levels.append(Level(s, q_next, n_next, "I", interleaved=q_next < n_next))
            continue
        prev = cf.preceding(q_next)
        q_mid = prev.q if prev is not None else cur.q
        target_log = max(math.log(q_mid / kappa**2), 5 * constants.c1 * kappa * cur.q)
        target = math.exp(min(target_log, 700.0))
        lcm = math.lcm(q_mid, cur.N)
        n_mid = lcm * max(1, math.ceil(target / lcm))
        conflict = False
        if n_mid > 2 * max(target, cur.N, q_mid):
            # both divisibilities would push N far from its target size; keep q | N
            conflict = True
            n_mid = q_mid * max(1, math.ceil(target / q_mid))
        if log_q_next <= 4 * q_mid:
            n_second = n_mid
        else:
            b = max(0, round((log_q_next - 2 * q_mid - math.log(n_mid)) / math.log(3)))
            n_second = 3**b * n_mid
        n_next = _next_multiple(n_second, scale_c * q_next)
        if conflict:
            n_next = _next_multiple(math.lcm(n_second, cur.N), scale_c * q_next)
        levels.append(
            Level(
                s,
                q_next,
                n_next,
                "II",
                intermediate_N=n_mid,
                second_N=n_second,
                q_intermediate=q_mid,
                interleaved=q_next < n_next,
                divisibility_conflict=conflict,
            )
        )
    return MultiscaleSchedule(float(kappa), tuple(levels), constants)


def lemma6_combination(L_N1: float, L_N: float, L_2N: float, m: int) -> float:
    """|L_{mN} + (m-2)/m L_N - 2 (m-1)/m L_{2N}|, zero for any law a + b/N."""
    return abs(L_N1 + (m - 2) / m * L_N - 2 * (m - 1) / m * L_2N)


def lemma7_combination(L_Nprime: float, L_N: float, L_2N: float) -> float:
    """|L_{N'} + L_N - 2 L_{2N}|."""
    return abs(L_Nprime + L_N - 2 * L_2N)


def lemma6_residual(v: PotentialSpec, omega: float, energy: float, n: int, m: int, grid: int) -> float:
    if m < 3:
        raise ValueError(f"m must be >= 3, got {m}")
    est = multi_scale_L(v, omega, energy, [n, 2 * n, m * n], grid)
    return lemma6_combination(est[m * n].value, est[n].value, est[2 * n].value, m)


@dataclass(frozen=True)
class StepResiduals:
    lemma6: float
    lemma7: float
    lemma8: float | None
    step47: float
    step48: float
    step49: float
    advisory_log_bounds: dict = field(default_factory=dict)


def step_scales(schedule: MultiscaleSchedule, s: int) -> list[int]:
    cur, nxt = _level_pair(schedule, s)
    scales = {cur.N, 2 * cur.N, nxt.N}
    if nxt.case == "II":
        scales |= {nxt.intermediate_N, 2 * nxt.intermediate_N, nxt.second_N, 2 * nxt.second_N}
    return sorted(scales)


def _level_pair(schedule: MultiscaleSchedule, s: int) -> tuple[Level, Level]:
    if s + 1 >= len(schedule.levels):
        raise ValueError(f"level {s} has no successor")
    cur, nxt = schedule.levels[s], schedule.levels[s + 1]
    if cur.truncated or nxt.truncated:
        raise ValueError(f"level {s} is not realized")
    return cur, nxt


def step_residuals(law: Callable[[int], float], schedule: MultiscaleSchedule, s: int) -> StepResiduals:
    """Residuals of rung s for any scale law K -> L_K."""
    cur, nxt = _level_pair(schedule, s)
    n, n1 = cur.N, nxt.N
    Ln, L2n, Ln1 = law(n), law(2 * n), law(n1)
    lemma8 = None
    if nxt.case == "II":
        nm, n2 = nxt.intermediate_N, nxt.second_N
        lemma7 = lemma7_combination(Ln1, law(n2), law(2 * n2))
        if n2 != nm:
            lemma8 = lemma7_combination(law(n2), law(nm), law(2 * nm))
    else:
        lemma7 = lemma7_combination(Ln1, Ln, L2n)
    k = schedule.kappa
    c = schedule.constants
    q_prev = schedule.levels[s - 1].q if s >= 1 else 0
    bounds = {
        "step47": -c.c1 * k * cur.q,
        "step48": -c.c2 * k * q_prev,
        "step49": -c.c3 * k * q_prev,
        "lemma7": -c.c_prime * k * cur.q,
    }
    return StepResiduals(
        lemma6=lemma6_combination(Ln1, Ln, L2n, n1 // n),
        lemma7=lemma7,
        lemma8=lemma8,
        step47=lemma7_combination(Ln1, Ln, L2n),
        step48=abs(L2n - Ln),
        step49=abs(Ln1 - Ln),
        advisory_log_bounds=bounds,
    )


def verify_step(
    v: PotentialSpec,
    omega: float,
    energy: float,
    schedule: MultiscaleSchedule,
    s: int,
    grid: int,
    max_steps: int = DEFAULT_STEP_BUDGET,
) -> StepResiduals:
    scales = step_scales(schedule, s)
    if scales[-1] > max_steps:
        raise BudgetExceeded(f"scale {scales[-1]} exceeds the step budget {max_steps}")
    est = multi_scale_L(v, omega, energy, scales, grid)
    return step_residuals(lambda n: est[n].value, schedule, s)
