"""Headline numbers of the 0.2 mg design, recomputed and compared with the published values."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

from .config import CONSTANTS, SystemConfig, mirror_mass, table1
from .noise import (FrequencyGrid, _spectra, brownian_noise, brownian_sql_crossing, f_sql_approx,
                    f_sql_full, gas_damping_rate, sql_psd)
from .optics import DAMAGE_THRESHOLD, derive_pair, peak_intensity, stack_reflectivity, thermal_load
from .oracles import f_sql_cubic, stack_reflectivity_interfaces
from .stability import (horizontal_stiffness, spring_resonance, susceptibility, trapping_ranges,
                        vertical_stiffness)


@dataclass(frozen=True)
class Row:
    criterion: int
    quantity: str
    computed: float
    reference: str
    tolerance: str
    passed: bool


def _rel(computed: float, target: float, tol: float) -> bool:
    return abs(computed - target) <= tol * abs(target)


def scaled_config(base: SystemConfig, s: float, t: float) -> SystemConfig:
    """Mirror radius x s at fixed aspect ratio, both finesses x t.

    Input powers scale by ``s^3 / t`` so the radiation force keeps balancing the
    weight, and the lower spot radius follows the mirror radius.
    """
    lower, _ = derive_pair(base)
    return base.replace(**{
        "mirror.radius": base.mirror.radius * s,
        "lower.finesse": base.lower.finesse * t,
        "upper.finesse": base.upper.finesse * t,
        "lower.input_power": base.lower.input_power * s**3 / t,
        "upper.input_power": base.upper.input_power * s**3 / t,
        "lower.spot_radius": lower.spot_radius_levitated * s,
    })


def coa_ratio(config: SystemConfig) -> float:
    """SQL over coating Brownian PSD at the SQL-reaching frequency."""
    derived = derive_pair(config)
    at = _spectra(config, derived, FrequencyGrid([f_sql_full(config, derived)]))
    return at["sql"].psd[0] / at["brownian_coating"].psd[0]


def reproduction_rows(config: SystemConfig | None = None, strict_horizontal_damping: bool = False,
                      roc_convention: str = "signed") -> list[Row]:
    cfg = config or table1()
    derived = derive_pair(cfg)
    lower, upper = derived
    m = mirror_mass(cfg.mirror)
    rows: list[Row] = []

    def add(crit, name, value, ref, tol, ok):
        rows.append(Row(crit, name, float(value), ref, tol, bool(ok)))

    # 1
    add(1, "mass [kg]", m, "2e-7", "2%", _rel(m, 0.2e-6, 0.02))
    add(1, "P_circ lower [W]", lower.circulating_power, "420", "3%", _rel(lower.circulating_power, 420, 0.03))
    add(1, "P_circ upper [W]", upper.circulating_power, "130", "3%", _rel(upper.circulating_power, 130, 0.03))
    lift = (lower.radiation_force - upper.radiation_force) / (m * CONSTANTS.g_acc)
    add(1, "(F_L - F_U) / mg", lift, "1", "5%", _rel(lift, 1.0, 0.05))

    # 2
    f_a = f_sql_approx(cfg.lower.finesse, cfg.laser.wavelength)
    add(2, "f_SQL closed form [Hz]", f_a, "19.3e3", "1%", _rel(f_a, 19.3e3, 0.01))
    f_sql = f_sql_full(cfg, derived)
    add(2, "f_SQL intersection [Hz]", f_sql, "23e3", "10%", _rel(f_sql, 23e3, 0.10))
    at = _spectra(cfg, derived, FrequencyGrid([f_sql]))
    sql_asd = at["sql"].asd[0]
    add(2, "SQL ASD at f_SQL [m/rtHz]", sql_asd, "2.2e-19", "5%", _rel(sql_asd, 2.2e-19, 0.05))

    # 3
    shot, rp = at["shot"].psd[0], at["radiation_pressure"].psd[0]
    add(3, "|shot - rp| / rp at f_SQL", abs(shot - rp) / rp, "0", "1e-9", abs(shot - rp) <= 1e-9 * rp)
    touch = (shot + rp) / at["sql"].psd[0]
    add(3, "(shot + rp) / SQL at f_SQL", touch, "1", "1%", _rel(touch, 1.0, 0.01))

    # 4
    g23 = FrequencyGrid([23e3])
    brown = brownian_noise(cfg.mirror, lower.spot_radius_levitated, cfg.environment.temperature, g23)[2].asd[0]
    add(4, "Brownian ASD at 23 kHz [m/rtHz]", brown, "1.2e-19", "10%", _rel(brown, 1.2e-19, 0.10))
    sql23 = sql_psd(m, g23).asd[0]
    add(4, "Brownian / SQL ASD at 23 kHz", brown / sql23, "< 1", "strict", brown < sql23)
    cross = brownian_sql_crossing(cfg, derived)
    add(4, "Brownian-SQL crossing [Hz]", cross, "100e3", "[90e3, 110e3]", 90e3 <= cross <= 110e3)

    # 5
    k_z = float(vertical_stiffness(cfg, derived, 0.0).real_part)
    add(5, "net vertical spring [N/m]", k_z, "> 0", "sign", k_z > 0)
    f_res = spring_resonance(cfg, derived) or 0.0
    add(5, "spring resonance [Hz]", f_res, "340", "factor 2", 170 <= f_res <= 680)

    # 6
    k_x = horizontal_stiffness(cfg, derived, 0.0, roc_convention)
    add(6, "net horizontal spring [N/m]", k_x.real_part, "1.1e-4", "10%", _rel(k_x.real_part, 1.1e-4, 0.10))
    add(6, "horizontal spring sign", k_x.real_part, "> 0", "sign", k_x.real_part > 0)
    damp = float(horizontal_stiffness(cfg, derived, 2 * math.pi * 100, roc_convention).imag_part)
    add(6, "horizontal damping Im K_x at 100 Hz [N/m]", damp, "> 0",
        "sign (gating)" if strict_horizontal_damping else "reported only",
        damp > 0 or not strict_horizontal_damping)

    # 7
    tr = trapping_ranges(cfg, derived)
    add(7, "dz bound [m]", tr.dz_bound, "50e-12", "20%", _rel(tr.dz_bound, 50e-12, 0.20))
    add(7, "dx bound [m]", tr.dx_bound, "0.6e-6", "25%", _rel(tr.dx_bound, 0.6e-6, 0.25))
    add(7, "dx binding condition is detuning", float(tr.binding_dx_condition == "detuning"),
        "1", "exact", tr.binding_dx_condition == "detuning")

    # 8
    env = cfg.environment
    gam = gas_damping_rate(env, cfg.mirror)
    add(8, "gas damping rate [Hz]", gam, "7e-8", "30%", _rel(gam, 7e-8, 0.30))
    s23 = _spectra(cfg, derived, g23)
    gas = s23["gas_thermal"].asd[0]
    add(8, "gas thermal ASD at 23 kHz [m/rtHz]", gas, "< 1e-21", "bound", gas < 1e-21)
    freq = s23["laser_frequency"].asd[0]
    add(8, "frequency noise / Brownian at 23 kHz", freq / brown, "< 1", "bound", freq < brown)
    seis = s23["seismic"].asd[0]
    add(8, "seismic ASD at 23 kHz [m/rtHz]", seis, "< 1e-23", "bound", seis < 1e-23)
    for d, ref in ((lower, 14e9), (upper, 2.3e9)):
        i_pk = peak_intensity(d.circulating_power, d.spot_radius_levitated)
        add(8, f"peak intensity {d.label} [W/m^2]", i_pk, f"{ref:.3g}", "10%, < 2e12",
            _rel(i_pk, ref, 0.10) and i_pk < DAMAGE_THRESHOLD)
    p_abs, d_t = thermal_load(cfg, derived)
    add(8, "absorbed power [W]", p_abs, "<= 0.15e-3", "bound", p_abs <= 0.15e-3)
    add(8, "temperature rise [K]", d_t, "<= 20", "bound", d_t <= 20.0)

    # 9
    base_ratio = coa_ratio(cfg)
    for s in (0.5, 2.0):
        for t in (0.5, 2.0):
            got = coa_ratio(scaled_config(cfg, s, t)) / base_ratio
            expected = s**-1 * t**-0.5
            add(9, f"coa ratio scaling s={s:g} t={t:g}", got / expected, "1", "5%", _rel(got, expected, 0.05))

    # 10
    r_main = stack_reflectivity(cfg.mirror.coating, cfg.laser.wavelength).power_reflectivity
    r_oracle = stack_reflectivity_interfaces(cfg.mirror.coating, cfg.laser.wavelength)
    add(10, "stack reflectivity - oracle", abs(r_main - r_oracle), "0", "1e-12", abs(r_main - r_oracle) <= 1e-12)
    f_oracle = f_sql_cubic(cfg, derived)
    add(10, "f_SQL vs cubic closed form (rel)", abs(f_sql - f_oracle) / f_oracle, "0", "1e-6",
        abs(f_sql - f_oracle) <= 1e-6 * f_oracle)
    omega_hi = 2 * math.pi * 100 * f_res
    chi = susceptibility(m, vertical_stiffness(cfg, derived, omega_hi), omega_hi)
    asym = abs(chi) * m * omega_hi**2
    add(10, "|chi| m Omega^2 at 100 f_res", asym, "1", "1%", _rel(asym, 1.0, 0.01))
    return rows


def rows_to_csv(rows: list[Row]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["criterion", "quantity", "computed", "reference", "tolerance", "pass"])
    for r in rows:
        writer.writerow([r.criterion, r.quantity, f"{r.computed:.8e}", r.reference, r.tolerance,
                         "PASS" if r.passed else "FAIL"])
    return buf.getvalue()
