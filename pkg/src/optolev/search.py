"""Feasibility verdicts and a derivative-free search over design parameters.

Every constraint is reduced to a margin where ``>= 1`` passes. The optimizer
seeds the box with the baseline point plus a Latin hypercube, then refines
the best point with a compass (coordinate pattern) search whose step halves
after each unsuccessful poll. Everything is deterministic for a given seed.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
from scipy.stats import qmc

from .config import CONSTANTS, ConfigError, SystemConfig, _coerce, mirror_mass, tomllib, validate
from .noise import FrequencyGrid, NoIntersectionError, _spectra, f_sql_full
from .optics import (DAMAGE_THRESHOLD, UnstableResonatorError, clipping_loss, derive_pair,
                     effective_roc, peak_intensity, resonator_g, thermal_load)
from .stability import (force_balance, horizontal_g, horizontal_spring, horizontal_stiffness,
                        optical_spring_constants, trapping_ranges)

MARGIN_CAP = 1e12
OBJECTIVES = ("max_classical_margin", "max_coa_ratio", "min_fsql")


@dataclass(frozen=True)
class Constraint:
    id: str
    description: str
    value: float
    # non-gating constraints are reported but left out of the verdict
    gating: bool = True

    @property
    def passed(self) -> bool:
        return self.value >= 1.0


@dataclass(frozen=True)
class FeasibilityReport:
    constraints: tuple[Constraint, ...]
    f_sql: float
    sql_asd: float
    coa_ratio: float = math.nan

    @property
    def overall(self) -> bool:
        return all(c.passed for c in self.constraints if c.gating)

    @property
    def violation(self) -> float:
        """Total shortfall of the gating margins below 1."""
        return sum(max(0.0, 1.0 - c.value) for c in self.constraints if c.gating)

    def __getitem__(self, cid: str) -> Constraint:
        for c in self.constraints:
            if c.id == cid:
                return c
        raise KeyError(cid)


def _ratio(allowed: float, actual: float) -> float:
    if actual <= 0:
        return MARGIN_CAP
    return min(allowed / actual, MARGIN_CAP)


def _sign(x: float, scale: float) -> float:
    """Margin for ``x > 0``: 1 at zero, 2 when all of ``scale`` pushes the right way."""
    if scale == 0:
        return 1.0 if x >= 0 else 0.0
    return 1.0 + x / scale


def _g_margin(product: float) -> float:
    return 1.0 + min(product, 1.0 - product) / 0.5


def solve_balance(config: SystemConfig) -> SystemConfig:
    """Rescale the lower input power so the net radiation force equals the weight."""
    _, upper = derive_pair(config)
    weight = mirror_mass(config.mirror) * CONSTANTS.g_acc
    p_circ = (weight + upper.radiation_force) * CONSTANTS.c / 2.0
    cav = config.lower
    p_in = p_circ * (1.0 + cav.detuning_norm**2) * math.pi / cav.finesse
    return config.replace(**{"lower.input_power": p_in})


def feasibility(config: SystemConfig, strict_horizontal_damping: bool = False,
                roc_convention: str = "signed", balance_tolerance: float = 0.05,
                damage_threshold: float = DAMAGE_THRESHOLD, max_temperature_rise: float = 20.0,
                dz_floor: float = 10e-12) -> FeasibilityReport:
    cons: list[Constraint] = []

    def add(cid, desc, value, gating=True):
        v = float(value)
        cons.append(Constraint(cid, desc, v if math.isfinite(v) else 0.0, gating))

    mir = config.mirror
    add("rotation_convex", "mirror convex downward (R > 0)", _sign(mir.roc, abs(mir.roc)))
    g_products = {}
    for side in ("lower", "upper"):
        g = resonator_g(config.cavity(side), effective_roc(mir, side))
        g_products[side] = g[0] * g[1]
    try:
        derived = derive_pair(config)
    except UnstableResonatorError:
        derived = None
    if derived is None:
        for side, prod in g_products.items():
            add(f"g_product_{side}", f"{side} resonator stable, 0 < g1 g2 < 1", _g_margin(prod))
        for cid in ("vertical_spring", "vertical_damping", "horizontal_spring", "force_balance",
                    "classical_below_sql", "coating_below_sql", "temperature_rise", "trap_depth"):
            add(cid, "not evaluated: unstable resonator", 0.0)
        return FeasibilityReport(tuple(cons), math.nan, math.nan)

    lower, upper = derived
    m = mirror_mass(mir)
    lam = config.laser.wavelength
    springs = [optical_spring_constants(config.cavity(s), d, m, lam) for s, d in zip(("lower", "upper"), derived)]
    k_sum = sum(k for k, _ in springs)
    gam_sum = sum(g for _, g in springs)
    add("vertical_spring", "net vertical optical spring > 0",
        _sign(k_sum, sum(abs(k) for k, _ in springs)))
    add("vertical_damping", "net vertical optical damping > 0",
        _sign(gam_sum, sum(abs(g) for _, g in springs)))

    omega = 2.0 * math.pi
    kx = horizontal_stiffness(config, derived, omega, roc_convention)
    kx_scale = lower.radiation_force / config.lower.coc_distance + upper.radiation_force / config.upper.coc_distance
    add("horizontal_spring", "net horizontal spring F_U/a_U - F_L/a_L > 0", _sign(kx.real_part, kx_scale))
    parts = [horizontal_spring(config.cavity(s), d, omega, horizontal_g(config, s, d, roc_convention))
             for s, d in zip(("lower", "upper"), derived)]
    add("horizontal_damping", "net horizontal damping > 0",
        _sign(kx.imag_part, sum(abs(p.imag_part) for p in parts)), gating=strict_horizontal_damping)

    bal = force_balance(config, derived, balance_tolerance)
    add("force_balance", f"|force-balance residual| <= {balance_tolerance}",
        _ratio(balance_tolerance, abs(bal.residual)))

    for side, d in (("lower", lower), ("upper", upper)):
        clip = clipping_loss(mir.radius, d.spot_radius_levitated, config.cavity(side).finesse)
        add(f"clipping_{side}", f"{side} clipping loss <= 2 pi / F", _ratio(clip.bound, clip.loss))
    for side, prod in g_products.items():
        add(f"g_product_{side}", f"{side} resonator stable, 0 < g1 g2 < 1", _g_margin(prod))

    try:
        f_sql = f_sql_full(config, derived)
    except NoIntersectionError:
        f_sql = math.nan
    if math.isfinite(f_sql):
        at = _spectra(config, derived, FrequencyGrid([f_sql]))
        sql = at["sql"].psd[0]
        add("classical_below_sql", "classical noise below the SQL at f_SQL",
            _ratio(sql, at["classical_total"].psd[0]))
        coa = _ratio(sql, at["brownian_coating"].psd[0])
        add("coating_below_sql", "coating Brownian noise below the SQL at f_SQL", coa)
        sql_asd = math.sqrt(sql)
    else:
        add("classical_below_sql", "no SQL crossing found", 0.0)
        add("coating_below_sql", "no SQL crossing found", 0.0)
        sql_asd = coa = math.nan

    for side, d in (("lower", lower), ("upper", upper)):
        add(f"intensity_{side}", f"{side} peak intensity below the damage threshold",
            _ratio(damage_threshold, peak_intensity(d.circulating_power, d.spot_radius_levitated)))
    _, d_t = thermal_load(config, derived)
    add("temperature_rise", f"temperature rise <= {max_temperature_rise} K", _ratio(max_temperature_rise, d_t))
    if math.isfinite(f_sql):
        add("fsql_below_internal_mode", "f_SQL <= lowest internal mode / 10",
            _ratio(mir.internal_mode_freq / 10.0, f_sql))
        add("fsql_below_pole", "f_SQL <= cavity pole / 10",
            _ratio(min(lower.pole_freq, upper.pole_freq) / 10.0, f_sql))
    else:
        add("fsql_below_internal_mode", "no SQL crossing found", 0.0)
        add("fsql_below_pole", "no SQL crossing found", 0.0)
    ranges = trapping_ranges(config, derived)
    add("trap_depth", f"vertical trapping range >= {dz_floor:g} m", ranges.dz_bound / dz_floor)
    return FeasibilityReport(tuple(cons), f_sql, sql_asd, coa)


# ---------------------------------------------------------------------------
# Search

_SEARCHABLE_SECTIONS = {
    "mirror": ("mirror", ("radius", "aspect_ratio", "roc", "absorption", "internal_mode_freq")),
    "laser": ("laser", ("wavelength", "freq_noise_asd", "rin_asd")),
    "cavity.lower": ("lower", ("length", "fixed_mirror_roc", "coc_distance", "finesse",
                               "input_power", "detuning_norm", "spot_radius")),
    "cavity.upper": ("upper", ("length", "fixed_mirror_roc", "coc_distance", "finesse",
                               "input_power", "detuning_norm", "spot_radius")),
    "environment": ("environment", ("temperature", "pressure", "gas_molecule_mass",
                                    "gas_shape_constant", "seismic_coefficient",
                                    "suspension_resonance")),
}


@dataclass(frozen=True)
class SearchSpace:
    """Closed intervals over dotted SystemConfig paths; other fields come from ``base``."""

    base: SystemConfig
    bounds: dict[str, tuple[float, float]]
    seed: int = 0
    samples: int = 32
    max_evaluations: int = 200

    def __post_init__(self):
        for path, (lo, hi) in self.bounds.items():
            if not lo <= hi:
                raise ValueError(f"empty interval for {path}: [{lo}, {hi}]")
            for value in (lo, hi):
                bad = [v for v in validate(self.base.replace(**{path: value})) if v.kind == "invalid"]
                if bad:
                    raise ValueError(f"{path} = {value} breaks {bad[0]}")

    @property
    def paths(self) -> list[str]:
        return list(self.bounds)

    def config_at(self, u: np.ndarray) -> SystemConfig:
        changes = {}
        for ui, (path, (lo, hi)) in zip(u, self.bounds.items()):
            changes[path] = lo if lo == hi else lo + float(ui) * (hi - lo)
        return self.base.replace(**changes)

    def baseline_u(self) -> np.ndarray:
        u = []
        for path, (lo, hi) in self.bounds.items():
            value = _get(self.base, path)
            u.append(0.0 if hi == lo or value is None else min(max((value - lo) / (hi - lo), 0.0), 1.0))
        return np.array(u)


def _get(obj: Any, path: str) -> Any:
    for part in path.split("."):
        obj = getattr(obj, part)
    return obj


def parse_space(text: str, base: SystemConfig, seed: int | None = None) -> SearchSpace:
    """Read ``<key>_min`` / ``<key>_max`` pairs; an optional ``[search]`` section sets seed, samples, max_evaluations."""
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"syntax error: {exc}") from exc
    opts = doc.pop("search", {})
    flat: dict[str, dict[str, Any]] = {}
    for key, val in doc.items():
        if key == "cavity" and isinstance(val, dict):
            for side, sub in val.items():
                flat[f"cavity.{side}"] = sub
        else:
            flat[key] = val
    pending: dict[str, dict[str, float]] = {}
    for section, values in flat.items():
        if section not in _SEARCHABLE_SECTIONS or not isinstance(values, dict):
            raise ConfigError(f"unknown or non-searchable section [{section}]")
        prefix, fields = _SEARCHABLE_SECTIONS[section]
        for key, value in values.items():
            name, _, end = key.rpartition("_")
            if end not in ("min", "max") or name not in fields:
                raise ConfigError(f"[{section}] {key}: expected <field>_min or <field>_max")
            pending.setdefault(f"{prefix}.{name}", {})[end] = _coerce(section, key, value)
    bounds = {}
    for path, ends in pending.items():
        if set(ends) != {"min", "max"}:
            raise ConfigError(f"{path}: both _min and _max are required")
        bounds[path] = (ends["min"], ends["max"])
    unknown = set(opts) - {"seed", "samples", "max_evaluations"}
    if unknown:
        raise ConfigError(f"unknown [search] key {sorted(unknown)[0]}")
    try:
        return SearchSpace(base, bounds,
                           seed=int(seed if seed is not None else opts.get("seed", 0)),
                           samples=int(opts.get("samples", 32)),
                           max_evaluations=int(opts.get("max_evaluations", 200)))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


@dataclass(frozen=True)
class TraceRow:
    index: int
    phase: str
    params: dict[str, float]
    report: FeasibilityReport
    objective: float
    feasible: bool


@dataclass(frozen=True)
class OptimizeResult:
    best: SystemConfig
    report: FeasibilityReport
    objective: float
    feasible: bool
    trace: list[TraceRow] = field(default_factory=list)


def objective_value(report: FeasibilityReport, objective: str) -> float:
    if objective == "max_classical_margin":
        return report["classical_below_sql"].value
    if objective == "max_coa_ratio":
        return report["coating_below_sql"].value
    if objective == "min_fsql":
        return report.f_sql
    raise ValueError(f"unknown objective {objective!r}; expected one of {OBJECTIVES}")


def _score(report: FeasibilityReport, objective: str) -> tuple[int, float]:
    if report.overall:
        value = objective_value(report, objective)
        if objective == "min_fsql":
            value = -value
        return 1, value if math.isfinite(value) else -math.inf
    return 0, -report.violation


def _evaluate(args: tuple[SystemConfig, bool, dict[str, Any]]) -> FeasibilityReport:
    config, balance, kwargs = args
    if balance:
        config = solve_balance(config)
    return feasibility(config, **kwargs)


def optimize(space: SearchSpace, objective: str = "max_classical_margin", solve_balance_first: bool = False,
             workers: int = 1, **feasibility_kwargs: Any) -> OptimizeResult:
    """Search ``space`` for the best design under ``objective``.

    Infeasible points rank below every feasible one and among themselves by
    total constraint violation. When nothing is feasible the least violating
    point is returned with ``feasible=False``.
    """
    if objective not in OBJECTIVES:
        raise ValueError(f"unknown objective {objective!r}; expected one of {OBJECTIVES}")
    free = [i for i, (lo, hi) in enumerate(space.bounds.values()) if hi > lo]
    trace: list[TraceRow] = []
    seen: dict[tuple, tuple[tuple[int, float], FeasibilityReport]] = {}
    pool = ProcessPoolExecutor(workers) if workers > 1 else None

    def evaluate(us: list[np.ndarray], phase: str) -> list[tuple[tuple[int, float], FeasibilityReport]]:
        todo = []
        for u in us:
            key = tuple(np.round(u, 12))
            if key not in seen and key not in [t[0] for t in todo]:
                todo.append((key, u))
        budget = space.max_evaluations - len(trace)
        todo = todo[:max(budget, 0)]
        jobs = [(space.config_at(u), solve_balance_first, feasibility_kwargs) for _, u in todo]
        reports = list(pool.map(_evaluate, jobs)) if pool else [_evaluate(j) for j in jobs]
        for (key, u), (cfg, _, _), rep in zip(todo, jobs, reports):
            sc = _score(rep, objective)
            seen[key] = (sc, rep)
            params = {p: _get(cfg, p) for p in space.paths}
            trace.append(TraceRow(len(trace), phase, params, rep,
                                  objective_value(rep, objective), rep.overall))
        return [seen[tuple(np.round(u, 12))] for u in us if tuple(np.round(u, 12)) in seen]

    try:
        start = [space.baseline_u()]
        if free:
            lhs = qmc.LatinHypercube(d=len(free), seed=space.seed).random(space.samples)
            for row in lhs:
                u = space.baseline_u()
                u[free] = row
                start.append(u)
        evaluate(start, "seed")
        best_key = max(seen, key=lambda k: seen[k][0])
        best_u = np.array(best_key)

        step = 0.25
        while free and step >= 1e-3 and len(trace) < space.max_evaluations:
            polls = []
            for i in free:
                for direction in (1.0, -1.0):
                    u = best_u.copy()
                    u[i] = min(max(u[i] + direction * step, 0.0), 1.0)
                    if u[i] != best_u[i]:
                        polls.append(u)
            evaluate(polls, "refine")
            candidates = [tuple(np.round(u, 12)) for u in polls if tuple(np.round(u, 12)) in seen]
            improved = [k for k in candidates if seen[k][0] > seen[tuple(np.round(best_u, 12))][0]]
            if improved:
                best_u = np.array(max(improved, key=lambda k: seen[k][0]))
            else:
                step /= 2.0
    finally:
        if pool:
            pool.shutdown()

    best_cfg = space.config_at(best_u)
    if solve_balance_first:
        best_cfg = solve_balance(best_cfg)
    report = seen[tuple(np.round(best_u, 12))][1]
    return OptimizeResult(best_cfg, report, objective_value(report, objective), report.overall, trace)


def write_trace_csv(result: OptimizeResult, path: str | Path) -> None:
    """One row per evaluation: parameters, constraint margins, feasibility and objective."""
    if not result.trace:
        return
    first = result.trace[0]
    params = list(first.params)
    cids = [c.id for c in first.report.constraints]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["index", "phase", *params, *cids, "feasible", "objective"])
        for row in result.trace:
            margins = {c.id: c.value for c in row.report.constraints}
            writer.writerow([row.index, row.phase, *(f"{row.params[p]:.8e}" for p in params),
                             *(f"{margins.get(c, math.nan):.8e}" for c in cids),
                             int(row.feasible), f"{row.objective:.8e}"])
