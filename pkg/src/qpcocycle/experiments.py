"""Config-driven experiment runner: CSV series, a JSON summary and SVG sketches.

Every run writes ``manifest.json`` (resolved config, versions, seed),
one CSV per data series and ``summary.json``.  Identical configs produce
byte-identical CSV and JSON files.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import platform
from dataclasses import dataclass, field
from pathlib import Path
from typing import Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from . import __version__
from .almost_mathieu import (
    amo_potential,
    amo_target,
    convergent_for,
    corollary2_check,
    periodic_spectrum,
    rational_discontinuity_probe,
)
from .avalanche import (
    AvalancheInput,
    avalanche_report,
    diagonal_sequence,
    factored_check,
    hyperbolic_ensemble,
    loglog_slope,
    random_hyperbolic_sequence,
)
from .cocycle import PotentialSpec
from .diophantine import continued_fraction, frequency_value, parse_frequency
from .lyapunov import deviation_measure, estimates_from_table, extrapolate, per_site_profile, scale_table
from .multiscale import MultiscaleConstants, build_schedule, choose_base_scale, verify_step

OUT_ENV = "QPCOCYCLE_OUT"

Kind = Literal[
    "energy_scan",
    "omega_continuity",
    "deviation_decay",
    "avalanche_fuzz",
    "schedule_trace",
    "corollary2",
    "uniform_bound",
    "estimate",
    "amo_spectrum",
]


class PotentialConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    cos: list[float] = Field(default_factory=lambda: [0.0])
    sin: list[float] = Field(default_factory=list)


class ExperimentConfig(BaseModel):
    """Flat experiment description; fields a kind does not use are ignored by it."""

    model_config = ConfigDict(extra="forbid", populate_by_name=True)

    kind: Kind
    lam: float = Field(4.0, alias="lambda")
    potential: Optional[PotentialConfig] = None
    omega: str = "golden"
    energy: float = 0.0
    e_min: float = -5.0
    e_max: float = 5.0
    e_step: float = 0.05
    kappa: float = 0.1
    scale_n: int = 1000
    grid_m: int = 512
    seed: int = 0
    out: Optional[str] = None
    threads: Optional[int] = None
    plots: bool = False

    # deviation_decay
    q_values: list[int] = Field(default_factory=lambda: [8, 13, 21, 34, 55])
    scale_c: float = 0.01

    # corollary2 / uniform_bound / amo_spectrum
    q_probe: int = 89
    n_energies: int = 20
    reference_scale: Optional[int] = None
    scales: list[int] = Field(default_factory=lambda: [1000, 10000])
    rational: Optional[str] = None
    x_samples: int = 256
    e_resolution: float = 1e-6

    # omega_continuity
    delta: float = 1e-3
    n_offsets: int = 8

    # avalanche_fuzz
    trials: int = 1000
    n: int = 20
    mu_floors: list[float] = Field(default_factory=lambda: [1e2, 1e3, 1e4])
    avalanche_c: float = 1.0
    factored_trials: int = 100

    # schedule_trace
    q0: int = 5
    n0: Optional[int] = None
    level_budget: int = 8
    max_q: int = 10**6
    verify: bool = False
    max_steps: int = 10**7
    schedule_scale_c: float = 1e-3

    @field_validator("omega")
    @classmethod
    def _omega_ok(cls, v):
        w = frequency_value(v)
        if not 0.0 <= w <= 1.0:
            raise ValueError("omega must lie in [0, 1]")
        return v

    @field_validator("grid_m")
    @classmethod
    def _grid_ok(cls, v):
        if v < 64:
            raise ValueError("grid_m must be >= 64")
        return v

    @field_validator("scale_n", "n_energies", "trials", "n", "level_budget", "x_samples", "max_steps")
    @classmethod
    def _positive(cls, v):
        if v < 1:
            raise ValueError("must be >= 1")
        return v

    @model_validator(mode="after")
    def _per_kind(self):
        if not 0.0 < self.kappa < 1.0:
            raise ValueError("kappa must lie in (0, 1)")
        if self.kind == "schedule_trace" and not self.kappa < 0.01:
            raise ValueError("schedule_trace needs kappa < 1/100")
        if self.kind == "energy_scan" and (self.e_step <= 0 or self.e_max < self.e_min):
            raise ValueError("energy range must be non-empty with e_step > 0")
        if self.kind == "deviation_decay" and len(self.q_values) < 3:
            raise ValueError("deviation_decay needs at least three q values")
        if self.kind == "avalanche_fuzz" and any(f <= self.n for f in self.mu_floors):
            raise ValueError("every mu floor must exceed n")
        if self.kind == "uniform_bound" and (not self.scales or min(self.scales) < 1):
            raise ValueError("scales must be positive")
        if self.rational is not None:
            r = parse_frequency(self.rational)
            if not hasattr(r, "denominator"):
                raise ValueError("rational must look like p/q")
        return self

    def potential_spec(self) -> PotentialSpec:
        if self.potential is not None:
            return PotentialSpec(tuple(self.potential.cos), tuple(self.potential.sin))
        return amo_potential(self.lam)

    def omega_value(self) -> float:
        return frequency_value(self.omega)

    def resolved(self) -> dict:
        return self.model_dump(mode="json", by_alias=True)


def load_config(path: str | os.PathLike | None = None, overrides: dict | None = None) -> ExperimentConfig:
    data: dict = {}
    if path is not None:
        with open(path) as fh:
            data = json.load(fh)
    data.update({k: v for k, v in (overrides or {}).items() if v is not None})
    return ExperimentConfig.model_validate(data)


@dataclass(frozen=True)
class FitResult:
    slope: float
    intercept: float
    r_squared: float
    used: int = 0
    dropped: int = 0
    sufficient: bool = True


def fit_exponential_decay(points) -> FitResult:
    """Least squares of log(value) against q; non-positive values are dropped."""
    pts = [(float(q), float(v)) for q, v in points]
    good = [(q, v) for q, v in pts if v > 0]
    dropped = len(pts) - len(good)
    if len(good) < 3:
        return FitResult(math.nan, math.nan, math.nan, len(good), dropped, sufficient=False)
    q = np.array([p[0] for p in good])
    y = np.log([p[1] for p in good])
    slope, intercept = np.polyfit(q, y, 1)
    resid = y - (slope * q + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0 else 1.0
    r2 = min(1.0, max(0.0, r2))
    return FitResult(float(slope), float(intercept), r2, len(good), dropped)


@dataclass
class Series:
    header: list[str]
    rows: list[list] = field(default_factory=list)


@dataclass
class Outcome:
    series: dict[str, Series]
    summary: dict
    plots: dict[str, tuple] = field(default_factory=dict)


@dataclass(frozen=True)
class RunResult:
    out_dir: Path
    files: tuple[Path, ...]
    summary: dict


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if x is None:
        return ""
    if isinstance(x, str):
        return x
    return format(float(x), ".17g")


def write_csv(path: Path, series: Series) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(series.header)
    for row in series.rows:
        w.writerow([_fmt(v) for v in row])
    path.write_text(buf.getvalue())


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        f = float(obj)
        return f if math.isfinite(f) else None
    return obj


def write_json(path: Path, data) -> None:
    path.write_text(json.dumps(_clean(data), indent=2, sort_keys=True) + "\n")


def write_svg(path: Path, x, ys: dict, title: str, xlabel: str = "", ylabel: str = "") -> None:
    """Minimal polyline chart."""
    width, height, pad = 640, 400, 50
    x = np.asarray(x, dtype=float)
    finite = [np.asarray(y, dtype=float) for y in ys.values()]
    allv = np.concatenate([y[np.isfinite(y)] for y in finite]) if finite else np.array([0.0])
    y0, y1 = (float(allv.min()), float(allv.max())) if allv.size else (0.0, 1.0)
    if y1 == y0:
        y1 = y0 + 1.0
    x0, x1 = float(x.min()), float(x.max())
    if x1 == x0:
        x1 = x0 + 1.0

    def sx(v):
        return pad + (v - x0) / (x1 - x0) * (width - 2 * pad)

    def sy(v):
        return height - pad - (v - y0) / (y1 - y0) * (height - 2 * pad)

    colors = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"]
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{width / 2}" y="20" text-anchor="middle" font-size="14">{title}</text>',
        f'<line x1="{pad}" y1="{height - pad}" x2="{width - pad}" y2="{height - pad}" stroke="black"/>',
        f'<line x1="{pad}" y1="{pad}" x2="{pad}" y2="{height - pad}" stroke="black"/>',
        f'<text x="{width / 2}" y="{height - 10}" text-anchor="middle" font-size="12">{xlabel}</text>',
        f'<text x="12" y="{height / 2}" font-size="12" transform="rotate(-90 12 {height / 2})">{ylabel}</text>',
        f'<text x="{pad}" y="{height - pad + 15}" font-size="10">{x0:.4g}</text>',
        f'<text x="{width - pad}" y="{height - pad + 15}" font-size="10" text-anchor="end">{x1:.4g}</text>',
        f'<text x="{pad - 4}" y="{height - pad}" font-size="10" text-anchor="end">{y0:.4g}</text>',
        f'<text x="{pad - 4}" y="{pad}" font-size="10" text-anchor="end">{y1:.4g}</text>',
    ]
    for i, (name, y) in enumerate(ys.items()):
        y = np.asarray(y, dtype=float)
        pts = " ".join(f"{sx(a):.2f},{sy(b):.2f}" for a, b in zip(x, y) if math.isfinite(b))
        color = colors[i % len(colors)]
        parts.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{pts}"/>')
        parts.append(f'<text x="{width - pad}" y="{pad + 14 * i}" font-size="11" fill="{color}" text-anchor="end">{name}</text>')
    parts.append("</svg>")
    path.write_text("\n".join(parts) + "\n")


def _probe_spectrum(cfg: ExperimentConfig):
    if cfg.rational is not None:
        r = parse_frequency(cfg.rational)
        return periodic_spectrum(cfg.lam, r.numerator, r.denominator, cfg.x_samples, cfg.e_resolution)
    p, q = convergent_for(cfg.omega, cfg.q_probe)
    return periodic_spectrum(cfg.lam, p, q, cfg.x_samples, cfg.e_resolution)


def _run_estimate(cfg: ExperimentConfig) -> Outcome:
    n = cfg.scale_n
    u = scale_table(cfg.potential_spec(), cfg.omega_value(), [cfg.energy], [n, 2 * n], cfg.grid_m)[0]
    a, b = estimates_from_table(u, [n, 2 * n])
    ext = extrapolate(a.value, b.value)
    s = Series(["E", "N", "L_N", "L_2N", "L_extrap", "dispersion_N"], [[cfg.energy, n, a.value, b.value, ext, a.dispersion]])
    return Outcome({"estimate": s}, {"L_N": a.value, "L_2N": b.value, "L_extrap": ext, "dispersion_N": a.dispersion})


def _run_energy_scan(cfg: ExperimentConfig) -> Outcome:
    n = cfg.scale_n
    count = int(math.floor((cfg.e_max - cfg.e_min) / cfg.e_step + 1e-9)) + 1
    energies = cfg.e_min + cfg.e_step * np.arange(count)
    u = scale_table(cfg.potential_spec(), cfg.omega_value(), energies, [n, 2 * n], cfg.grid_m)
    spec = _probe_spectrum(cfg) if cfg.potential is None else None
    s = Series(["E", "L_N", "L_2N", "L_extrap", "in_probe_spectrum"])
    ext_all, on_spec = [], []
    for e, block in zip(energies, u):
        a, b = estimates_from_table(block, [n, 2 * n])
        ext = extrapolate(a.value, b.value)
        inside = spec.contains(float(e)) if spec is not None else False
        s.rows.append([float(e), a.value, b.value, ext, inside])
        ext_all.append(ext)
        if inside:
            on_spec.append(ext)
    summary = {
        "count": len(energies),
        "min_L_extrap": min(ext_all),
        "max_L_extrap": max(ext_all),
        "on_spectrum_count": len(on_spec),
        "min_L_extrap_on_spectrum": min(on_spec) if on_spec else None,
        "target": amo_target(cfg.lam) if cfg.potential is None else None,
    }
    return Outcome({"energy_scan": s}, summary, {"energy_scan": (energies, {"L_extrap": ext_all}, "E", "L")})


def _run_corollary2(cfg: ExperimentConfig) -> Outcome:
    spec = _probe_spectrum(cfg)
    rep = corollary2_check(cfg.lam, cfg.omega, cfg.q_probe, cfg.scale_n, cfg.grid_m, cfg.n_energies, spectrum=spec)
    header = ["E", "L_N", "L_2N", "L_extrap", "deviation"]
    ref = None
    if cfg.reference_scale:
        r = cfg.reference_scale
        u = scale_table(amo_potential(cfg.lam), cfg.omega_value(), rep.energies, [r, 2 * r], cfg.grid_m)
        ref = [extrapolate(*(e.value for e in estimates_from_table(b, [r, 2 * r]))) for b in u]
        header += ["L_ref", "raw_error", "extrap_error", "extrap_better"]
    s = Series(header)
    wins = 0
    for i, e in enumerate(rep.energies):
        row = [e, rep.L_N[i], rep.L_2N[i], rep.L_values[i], abs(rep.L_values[i] - rep.target)]
        if ref is not None:
            raw_err = abs(rep.L_N[i] - ref[i])
            ext_err = abs(rep.L_values[i] - ref[i])
            wins += ext_err < raw_err
            row += [ref[i], raw_err, ext_err, ext_err < raw_err]
        s.rows.append(row)
    summary = {
        "lambda": cfg.lam,
        "omega": rep.omega,
        "q_probe": rep.q_probe,
        "bands": len(spec.bands),
        "target": rep.target,
        "max_abs_deviation": rep.max_abs_deviation,
        "flagged": list(rep.flagged),
        "n_energies": len(rep.energies),
    }
    if ref is not None:
        summary["reference_scale"] = cfg.reference_scale
        summary["extrap_better_count"] = int(wins)
    plots = {"corollary2": (np.array(rep.energies), {"L_extrap": rep.L_values, "target": [rep.target] * len(rep.energies)}, "E", "L")}
    return Outcome({"corollary2": s}, summary, plots)


def _run_uniform_bound(cfg: ExperimentConfig) -> Outcome:
    spec = _probe_spectrum(cfg)
    energies = spec.probe_energies(cfg.n_energies)
    scales = sorted(set(cfg.scales))
    top = scales[-1]
    allscales = sorted(set(scales) | {2 * top})
    u = scale_table(amo_potential(cfg.lam), cfg.omega_value(), energies, allscales, cfg.grid_m)
    idx = {n: i for i, n in enumerate(allscales)}
    s = Series(["E", "N", "max_u", "L_ref", "excess"])
    worst = {n: -math.inf for n in scales}
    for e, block in zip(energies, u):
        est = estimates_from_table(block, allscales)
        L_ref = extrapolate(est[idx[top]].value, est[idx[2 * top]].value)
        for n in scales:
            mx = float(np.max(block[:, idx[n]]))
            s.rows.append([float(e), n, mx, L_ref, mx - L_ref])
            worst[n] = max(worst[n], mx - L_ref)
    vals = [worst[n] for n in scales]
    summary = {
        "scales": scales,
        "max_excess": {str(n): worst[n] for n in scales},
        "decreasing": all(b < a for a, b in zip(vals, vals[1:])),
        "n_energies": len(energies),
    }
    return Outcome({"uniform_bound": s}, summary, {"uniform_bound": (np.array(scales, float), {"max_excess": vals}, "N", "excess")})


def _run_deviation(cfg: ExperimentConfig) -> Outcome:
    cf = continued_fraction(cfg.omega, max(cfg.q_values))
    stored = set(cf.denominators)
    missing = [q for q in cfg.q_values if q not in stored]
    if missing:
        raise ValueError(f"q values {missing} are not convergent denominators of {cfg.omega}")
    v = cfg.potential_spec()
    w = cfg.omega_value()
    s = Series(["q", "N", "L_N", "measure"])
    pts = []
    for q in cfg.q_values:
        n = math.ceil(cfg.scale_c * q / cfg.kappa**2)
        prof = per_site_profile(v, w, cfg.energy, n, cfg.grid_m)
        dev = deviation_measure(prof, prof.mean, cfg.kappa, q)
        s.rows.append([q, n, prof.mean, dev.measure])
        pts.append((q, dev.measure))
    fit = fit_exponential_decay(pts)
    summary = {
        "kappa": cfg.kappa,
        "scale_c": cfg.scale_c,
        "fit": {"slope": fit.slope, "intercept": fit.intercept, "r_squared": fit.r_squared,
                "used": fit.used, "dropped": fit.dropped, "sufficient": fit.sufficient},
        "measures": [p[1] for p in pts],
    }
    logm = [math.log(m) if m > 0 else math.nan for _, m in pts]
    return Outcome({"deviation": s}, summary, {"deviation": (np.array(cfg.q_values, float), {"log_measure": logm}, "q", "log measure")})


def _run_avalanche(cfg: ExperimentConfig) -> Outcome:
    floors = list(cfg.mu_floors)
    trials_s = Series(["mu_floor", "trial", "residual", "scaled_residual"])
    ens = []
    for f in floors:
        r = hyperbolic_ensemble(cfg.seed, cfg.trials, cfg.n, f)
        ens.append(r)
        for i, (res, sc) in enumerate(zip(r.residuals, r.scaled)):
            trials_s.rows.append([f, i, res, sc])
    c_fit = max(r.max_scaled for r in ens)
    means = [r.mean_residual for r in ens]
    slope = loglog_slope(floors, means) if len(floors) >= 2 else math.nan
    diag = max(avalanche_report(AvalancheInput(diagonal_sequence(cfg.n, f), f)).residual for f in floors)

    fact_s = Series(["mu_floor", "N", "factors", "trial", "residual", "bound", "within"])
    worst_ratio = 0.0
    fact_rejected = 0
    for f in floors:
        rng = np.random.default_rng([cfg.seed, 1, int(round(math.log10(f) * 1000))])
        for length, factors in ((27, (3, 3, 3)), (54, (3, 3, 3, 2))):
            done = 0
            while done < cfg.factored_trials:
                inp = AvalancheInput(random_hyperbolic_sequence(rng, length, f), f)
                rep = factored_check(inp, factors, C=c_fit)
                if not rep.hypotheses_ok:
                    fact_rejected += 1
                    if fact_rejected > 200 * cfg.factored_trials:
                        raise RuntimeError("factored ensemble rarely satisfies the hypotheses")
                    continue
                worst_ratio = max(worst_ratio, rep.residual / rep.bound)
                fact_s.rows.append([f, length, "x".join(map(str, factors)), done, rep.residual, rep.bound, rep.within_bound])
                done += 1
    summary = {
        "n": cfg.n,
        "trials_per_floor": cfg.trials,
        "mu_floors": floors,
        "C_fit": c_fit,
        "mean_residual": means,
        "loglog_slope": slope,
        "hypothesis_failures": {str(r.floor): r.rejected for r in ens},
        "diagonal_max_residual": diag,
        "factored_worst_ratio": worst_ratio,
        "factored_rejected": fact_rejected,
        "factored_all_within": all(row[-1] for row in fact_s.rows),
    }
    plots = {"avalanche": (np.log10(floors), {"log10_mean_residual": np.log10(means)}, "log10 mu", "log10 residual")}
    return Outcome({"avalanche_trials": trials_s, "avalanche_factored": fact_s}, summary, plots)


def _run_schedule(cfg: ExperimentConfig) -> Outcome:
    consts = MultiscaleConstants(scale_C=cfg.schedule_scale_c)
    cf = continued_fraction(cfg.omega, cfg.max_q)
    v = cfg.potential_spec()
    w = cfg.omega_value()
    n0 = cfg.n0
    if n0 is None:
        n0 = choose_base_scale(v, w, cfg.energy, cfg.kappa, cfg.q0, cfg.grid_m, consts)
        if n0 is None:
            raise ValueError("no base scale qualifies: the exponent looks too small for this kappa")
    sched = build_schedule(cf, cfg.kappa, n0, cfg.q0, cfg.level_budget, constants=consts)
    s = Series(["s", "case", "q", "N", "intermediate_N", "second_N", "q_intermediate", "truncated", "interleaved", "divisibility_conflict"])
    for lv in sched.levels:
        s.rows.append([lv.s, lv.case, lv.q, lv.N, lv.intermediate_N, lv.second_N, lv.q_intermediate,
                       lv.truncated, lv.interleaved, lv.divisibility_conflict])
    summary = {
        "kappa": cfg.kappa,
        "N0": n0,
        "levels": len(sched.realized),
        "truncated": sched.truncated,
        "cases": [lv.case for lv in sched.levels],
        "q": [lv.q for lv in sched.levels],
        "N": [lv.N for lv in sched.levels],
    }
    series = {"schedule": s}
    if cfg.verify and len(sched.realized) >= 2:
        res = verify_step(v, w, cfg.energy, sched, 0, cfg.grid_m, cfg.max_steps)
        summary["residuals_level0"] = {
            "lemma6": res.lemma6, "lemma7": res.lemma7, "lemma8": res.lemma8,
            "step47": res.step47, "step48": res.step48, "step49": res.step49,
            "advisory_log_bounds": res.advisory_log_bounds,
        }
    return Outcome(series, summary)


def _run_omega_continuity(cfg: ExperimentConfig) -> Outcome:
    rat = parse_frequency(cfg.rational or "0/1")
    p, q = rat.numerator, rat.denominator
    direction = cfg.omega_value()
    delta = cfg.delta * direction
    probe = rational_discontinuity_probe(cfg.lam, p, q, delta, cfg.scale_n, cfg.grid_m)
    s = Series(["E", "L_rational", "L_shifted", "gap"])
    for row in zip(probe.energies, probe.L_rational, probe.L_shifted, probe.gaps):
        s.rows.append(list(row))
    # L(E, p/q + t) along the segment t in [0, delta] at the configured energy
    n = cfg.scale_n
    ts = delta * np.arange(cfg.n_offsets + 1) / cfg.n_offsets
    scan = Series(["offset", "omega", "L_extrap"])
    vals = []
    for t in ts:
        u = scale_table(amo_potential(cfg.lam), p / q + float(t), [cfg.energy], [n, 2 * n], cfg.grid_m)[0]
        a, b = estimates_from_table(u, [n, 2 * n])
        vals.append(extrapolate(a.value, b.value))
        scan.rows.append([float(t), p / q + float(t), vals[-1]])
    summary = {
        "rational": f"{p}/{q}",
        "delta": delta,
        "max_gap": probe.max_gap,
        "gaps": list(probe.gaps),
        "energies": list(probe.energies),
    }
    return Outcome({"discontinuity": s, "omega_scan": scan}, summary, {"omega_scan": (ts, {"L_extrap": vals}, "offset", "L")})


def _run_amo_spectrum(cfg: ExperimentConfig) -> Outcome:
    spec = _probe_spectrum(cfg)
    s = Series(["band", "E_lo", "E_hi"], [[i, lo, hi] for i, (lo, hi) in enumerate(spec.bands)])
    summary = {
        "lambda": cfg.lam,
        "p_over_q": f"{spec.p_over_q.numerator}/{spec.p_over_q.denominator}",
        "band_count": len(spec.bands),
        "measure": spec.measure,
        "bands": [list(b) for b in spec.bands],
    }
    return Outcome({"bands": s}, summary)


RUNNERS = {
    "estimate": _run_estimate,
    "energy_scan": _run_energy_scan,
    "corollary2": _run_corollary2,
    "uniform_bound": _run_uniform_bound,
    "deviation_decay": _run_deviation,
    "avalanche_fuzz": _run_avalanche,
    "schedule_trace": _run_schedule,
    "omega_continuity": _run_omega_continuity,
    "amo_spectrum": _run_amo_spectrum,
}


def default_out_dir(cfg: ExperimentConfig) -> Path:
    if cfg.out:
        return Path(cfg.out)
    base = os.environ.get(OUT_ENV)
    return Path(base) / cfg.kind if base else Path("runs") / cfg.kind


def _versions() -> dict:
    import numba

    return {"qpcocycle": __version__, "numpy": np.__version__, "numba": numba.__version__,
            "python": platform.python_version()}


def run_experiment(cfg: ExperimentConfig) -> RunResult:
    if cfg.threads:
        import numba

        numba.set_num_threads(min(cfg.threads, numba.config.NUMBA_NUM_THREADS))
    outcome = RUNNERS[cfg.kind](cfg)
    out = default_out_dir(cfg)
    try:
        out.mkdir(parents=True, exist_ok=True)
        files = []
        manifest = out / "manifest.json"
        write_json(manifest, {"config": cfg.resolved(), "versions": _versions(), "seed": cfg.seed})
        files.append(manifest)
        for name, series in outcome.series.items():
            path = out / f"{name}.csv"
            write_csv(path, series)
            files.append(path)
        summary_path = out / "summary.json"
        write_json(summary_path, {"kind": cfg.kind, **outcome.summary})
        files.append(summary_path)
        if cfg.plots:
            for name, (x, ys, xl, yl) in outcome.plots.items():
                path = out / f"{name}.svg"
                write_svg(path, x, ys, name, xl, yl)
                files.append(path)
    except OSError as exc:
        raise OSError(f"cannot write results to {exc.filename or out}: {exc.strerror or exc}") from exc
    return RunResult(out, tuple(files), _clean({"kind": cfg.kind, **outcome.summary}))
