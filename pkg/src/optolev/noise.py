"""Displacement-noise budget of the vertical motion read out by the lower cavity.

All spectra are single-sided PSDs in m^2/Hz on a grid of Fourier
frequencies in Hz; ``NoiseSpectrum.asd`` gives the amplitude density.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.optimize import brentq

from .config import CONSTANTS, Environment, MirrorSpec, SystemConfig, mirror_mass
from .optics import CavityDerived, derive_pair
from .stability import spring_resonance, susceptibility, vertical_stiffness

SOURCES = (
    "sql", "shot", "radiation_pressure", "quantum_total",
    "brownian_substrate", "brownian_coating", "brownian_total",
    "gas_thermal", "laser_frequency", "laser_intensity", "seismic",
    "classical_total", "grand_total",
)
CLASSICAL_SOURCES = ("brownian_total", "gas_thermal", "laser_frequency", "laser_intensity", "seismic")


class NoIntersectionError(ValueError):
    pass


@dataclass(frozen=True)
class FrequencyGrid:
    points: np.ndarray
    spacing: str = "logarithmic"

    def __post_init__(self):
        pts = np.atleast_1d(np.asarray(self.points, dtype=float))
        if pts.size == 0 or np.any(pts <= 0) or np.any(np.diff(pts) <= 0):
            raise ValueError("frequency grid must be positive and strictly increasing")
        object.__setattr__(self, "points", pts)

    @classmethod
    def log(cls, f_min: float, f_max: float, n: int) -> FrequencyGrid:
        if not (0 < f_min < f_max) or n < 2:
            raise ValueError("need 0 < f_min < f_max and at least 2 points")
        return cls(np.geomspace(f_min, f_max, n), "logarithmic")

    @classmethod
    def linear(cls, f_min: float, f_max: float, n: int) -> FrequencyGrid:
        if not (0 < f_min < f_max) or n < 2:
            raise ValueError("need 0 < f_min < f_max and at least 2 points")
        return cls(np.linspace(f_min, f_max, n), "linear")

    @property
    def omega(self) -> np.ndarray:
        return 2.0 * math.pi * self.points

    def __len__(self) -> int:
        return self.points.size


@dataclass(frozen=True)
class NoiseSpectrum:
    source: str
    grid: FrequencyGrid
    psd: np.ndarray

    def __post_init__(self):
        psd = np.broadcast_to(np.asarray(self.psd, dtype=float), self.grid.points.shape).copy()
        if self.source not in SOURCES:
            raise ValueError(f"unknown noise source {self.source!r}")
        if np.any(psd < 0) or not np.all(np.isfinite(psd)):
            raise ValueError(f"{self.source}: PSD must be finite and non-negative")
        object.__setattr__(self, "psd", psd)

    @property
    def asd(self) -> np.ndarray:
        return np.sqrt(self.psd)


@dataclass(frozen=True)
class BudgetResult:
    spectra: dict[str, NoiseSpectrum]
    f_sql_full: float
    f_sql_approx: float
    sql_asd_at_fsql: float
    margin_at_fsql: float
    coa_ratio: float
    asd_at_fsql: dict[str, float] = field(default_factory=dict)
    notes: tuple[str, ...] = ()

    @property
    def grid(self) -> FrequencyGrid:
        return self.spectra["sql"].grid

    def __getitem__(self, source: str) -> NoiseSpectrum:
        return self.spectra[source]


def sql_psd(mass: float, grid: FrequencyGrid) -> NoiseSpectrum:
    return NoiseSpectrum("sql", grid, 2.0 * CONSTANTS.hbar / (mass * grid.omega**2))


def force_noise_psd(config: SystemConfig, derived_lower: CavityDerived) -> float:
    """Quantum radiation-pressure force PSD (N^2/Hz) of the lower, read-out cavity."""
    return (16.0 * CONSTANTS.hbar * config.laser.angular_frequency * derived_lower.circulating_power
            * config.lower.finesse / (math.pi * CONSTANTS.c**2))


def _chi(config: SystemConfig, derived_pair, omega) -> np.ndarray:
    return susceptibility(mirror_mass(config.mirror), vertical_stiffness(config, derived_pair, omega), omega)


def quantum_noise(config: SystemConfig, derived_lower: CavityDerived, chi: np.ndarray,
                  grid: FrequencyGrid) -> tuple[NoiseSpectrum, NoiseSpectrum, NoiseSpectrum]:
    """Shot, radiation-pressure and total quantum noise of an ideal readout.

    Below the cavity pole ``S_shot * S_F = hbar^2``; the shot noise rolls up
    with the single cavity pole.
    """
    s_f = force_noise_psd(config, derived_lower)
    shot_psd = (CONSTANTS.hbar**2 / s_f) * (1.0 + (2.0 * grid.omega / derived_lower.linewidth_fwhm) ** 2)
    rp_psd = s_f * np.abs(chi) ** 2
    return (NoiseSpectrum("shot", grid, shot_psd),
            NoiseSpectrum("radiation_pressure", grid, rp_psd),
            NoiseSpectrum("quantum_total", grid, shot_psd + rp_psd))


def f_sql_approx(finesse_lower: float, wavelength: float) -> float:
    """Mass-independent estimate of where shot and radiation-pressure noise cross."""
    return math.sqrt(16.0 * CONSTANTS.g_acc * finesse_lower / wavelength) / (2.0 * math.pi)


def f_sql_free_mass(config: SystemConfig, derived_lower: CavityDerived) -> float:
    """Crossing frequency for a free mass with no cavity pole: ``sqrt(S_F / (m hbar)) / 2pi``."""
    m = mirror_mass(config.mirror)
    return math.sqrt(force_noise_psd(config, derived_lower) / (m * CONSTANTS.hbar)) / (2.0 * math.pi)


def f_sql_full(config: SystemConfig, derived_pair: tuple[CavityDerived, CavityDerived] | None = None,
               band: tuple[float, float] | None = None, rtol: float = 1e-12) -> float:
    """Frequency (Hz) where the shot and radiation-pressure PSDs are equal.

    Root-finds on the closed-form spectra above the optical-spring resonance.
    """
    derived_pair = derived_pair or derive_pair(config)
    lower = derived_pair[0]
    s_f = force_noise_psd(config, lower)
    hbar = CONSTANTS.hbar
    if s_f <= 0:
        raise NoIntersectionError("no radiation-pressure noise: the lower cavity carries no power")
    if band is None:
        f_res = spring_resonance(config, derived_pair) or 0.0
        band = (max(1.0, 2.0 * f_res), 1e10)

    def log_ratio(log_f):
        omega = 2.0 * math.pi * math.exp(log_f)
        shot = (hbar**2 / s_f) * (1.0 + (2.0 * omega / lower.linewidth_fwhm) ** 2)
        rp = s_f * abs(complex(_chi(config, derived_pair, omega))) ** 2
        return math.log(shot) - math.log(rp)

    lo, hi = math.log(band[0]), math.log(band[1])
    if log_ratio(lo) * log_ratio(hi) > 0:
        raise NoIntersectionError(f"shot and radiation-pressure noise do not cross in {band} Hz")
    return math.exp(brentq(log_ratio, lo, hi, xtol=1e-15, rtol=rtol))


def brownian_noise(mirror: MirrorSpec, spot_radius_lower: float, temperature: float,
                   grid: FrequencyGrid, squared_coating_poisson: bool = False
                   ) -> tuple[NoiseSpectrum, NoiseSpectrum, NoiseSpectrum]:
    """Substrate and coating Brownian noise of the levitated mirror, sensed by the lower beam.

    Coating layers are grouped by material with ``d_c`` the total group
    thickness. The coating bracket carries ``(1 - 2 nu_c)`` unsquared unless
    ``squared_coating_poisson`` is set.
    """
    prefactor = 4.0 * CONSTANTS.k_B * temperature / grid.omega
    w = spot_radius_lower
    sub = mirror.substrate
    y_s, nu_s = sub.young_modulus, sub.poisson_ratio
    substrate = prefactor * sub.loss_angle * (1.0 - nu_s**2) / (math.sqrt(math.pi) * w * y_s)

    coat_sum = 0.0
    exp_c = 2 if squared_coating_poisson else 1
    for mat, d_c, _ in mirror.coating.groups():
        y_c, nu_c = mat.young_modulus, mat.poisson_ratio
        bracket = ((y_c**2 * (1 + nu_s) ** 2 * (1 - 2 * nu_s) ** 2
                    + y_s**2 * (1 + nu_c) ** 2 * (1 - 2 * nu_c) ** exp_c)
                   / (y_s**2 * y_c * (1 - nu_c**2)))
        coat_sum += d_c * mat.loss_angle / (math.pi * w**2) * bracket
    coating = prefactor * coat_sum
    return (NoiseSpectrum("brownian_substrate", grid, substrate),
            NoiseSpectrum("brownian_coating", grid, coating),
            NoiseSpectrum("brownian_total", grid, substrate + coating))


def gas_damping_rate(env: Environment, mirror: MirrorSpec) -> float:
    """Residual-gas damping rate in Hz, ``S P / (C m) * sqrt(m_mol / (k_B T))`` with S one face."""
    area = math.pi * mirror.radius**2
    return (area * env.pressure / (env.gas_shape_constant * mirror_mass(mirror))
            * math.sqrt(env.gas_molecule_mass / (CONSTANTS.k_B * env.temperature)))


def gas_thermal_noise(gamma_gas: float, temperature: float, mass: float, chi: np.ndarray,
                      grid: FrequencyGrid) -> NoiseSpectrum:
    # the rate quoted in Hz is an angular rate divided by 2 pi
    gamma = 2.0 * math.pi * gamma_gas
    force_psd = 4.0 * CONSTANTS.k_B * temperature * mass * gamma
    return NoiseSpectrum("gas_thermal", grid, force_psd * np.abs(chi) ** 2)


def laser_frequency_noise(l_lower: float, freq_noise_asd: float, wavelength: float,
                          grid: FrequencyGrid) -> NoiseSpectrum:
    asd = l_lower * freq_noise_asd / (CONSTANTS.c / wavelength)
    return NoiseSpectrum("laser_frequency", grid, np.full(len(grid), asd**2))


def required_rin(config: SystemConfig) -> float:
    """Shot-noise-level relative intensity noise of the lower input beam (1/sqrt(Hz))."""
    return math.sqrt(2.0 * CONSTANTS.hbar * config.laser.angular_frequency / config.lower.input_power)


def laser_intensity_noise(config: SystemConfig, derived_lower: CavityDerived, chi: np.ndarray,
                          grid: FrequencyGrid) -> tuple[NoiseSpectrum, float]:
    """Classical intensity noise of the lower beam pushing the mirror; zero when no RIN is given."""
    rin = config.laser.rin_asd or 0.0
    force_asd = rin * 2.0 * derived_lower.circulating_power / CONSTANTS.c
    return NoiseSpectrum("laser_intensity", grid, force_asd**2 * np.abs(chi) ** 2), required_rin(config)


def seismic_noise(env: Environment, grid: FrequencyGrid) -> NoiseSpectrum:
    """Ground motion ``A / f^2`` filtered by one suspension stage above its resonance."""
    f = grid.points
    ground = env.seismic_coefficient / f**2
    f0 = env.suspension_resonance
    asd = np.where(f > f0, ground * (f0 / f) ** 2, ground)
    return NoiseSpectrum("seismic", grid, asd**2)


def _spectra(config: SystemConfig, derived_pair, grid: FrequencyGrid,
             squared_coating_poisson: bool = False) -> dict[str, NoiseSpectrum]:
    m = mirror_mass(config.mirror)
    lower = derived_pair[0]
    chi = _chi(config, derived_pair, grid.omega)
    env = config.environment
    out = {"sql": sql_psd(m, grid)}
    for spec in quantum_noise(config, lower, chi, grid):
        out[spec.source] = spec
    for spec in brownian_noise(config.mirror, lower.spot_radius_levitated, env.temperature, grid,
                               squared_coating_poisson):
        out[spec.source] = spec
    out["gas_thermal"] = gas_thermal_noise(gas_damping_rate(env, config.mirror), env.temperature, m, chi, grid)
    out["laser_frequency"] = laser_frequency_noise(config.lower.length, config.laser.freq_noise_asd,
                                                   config.laser.wavelength, grid)
    out["laser_intensity"] = laser_intensity_noise(config, lower, chi, grid)[0]
    out["seismic"] = seismic_noise(env, grid)
    classical = sum(out[s].psd for s in CLASSICAL_SOURCES)
    out["classical_total"] = NoiseSpectrum("classical_total", grid, classical)
    out["grand_total"] = NoiseSpectrum("grand_total", grid, classical + out["quantum_total"].psd)
    return {s: out[s] for s in SOURCES}


def total_budget(config: SystemConfig, grid: FrequencyGrid,
                 derived_pair: tuple[CavityDerived, CavityDerived] | None = None,
                 squared_coating_poisson: bool = False) -> BudgetResult:
    derived_pair = derived_pair or derive_pair(config)
    spectra = _spectra(config, derived_pair, grid, squared_coating_poisson)
    f_sql = f_sql_full(config, derived_pair)
    at = _spectra(config, derived_pair, FrequencyGrid([f_sql]), squared_coating_poisson)
    asd_at = {s: float(at[s].asd[0]) for s in SOURCES}
    sql = at["sql"].psd[0]
    classical = at["classical_total"].psd[0]
    coating = at["brownian_coating"].psd[0]
    notes = []
    if np.any(grid.points > config.mirror.internal_mode_freq / 3.0):
        notes.append("Brownian model used above a third of the lowest internal mode")
    return BudgetResult(
        spectra=spectra,
        f_sql_full=f_sql,
        f_sql_approx=f_sql_approx(config.lower.finesse, config.laser.wavelength),
        sql_asd_at_fsql=math.sqrt(sql),
        margin_at_fsql=sql / classical if classical > 0 else math.inf,
        coa_ratio=sql / coating if coating > 0 else math.inf,
        asd_at_fsql=asd_at,
        notes=tuple(notes),
    )


def brownian_sql_crossing(config: SystemConfig, derived_pair=None, band: tuple[float, float] = (1.0, 1e9),
                          squared_coating_poisson: bool = False) -> float:
    """Frequency (Hz) above which the total Brownian noise exceeds the free-mass SQL."""
    derived_pair = derived_pair or derive_pair(config)
    m = mirror_mass(config.mirror)
    w = derived_pair[0].spot_radius_levitated
    temp = config.environment.temperature

    def log_ratio(log_f):
        grid = FrequencyGrid([math.exp(log_f)])
        brown = brownian_noise(config.mirror, w, temp, grid, squared_coating_poisson)[2].psd[0]
        return math.log(brown) - math.log(sql_psd(m, grid).psd[0])

    lo, hi = math.log(band[0]), math.log(band[1])
    if log_ratio(lo) * log_ratio(hi) > 0:
        raise NoIntersectionError("Brownian noise does not cross the SQL in the band")
    return math.exp(brentq(log_ratio, lo, hi, xtol=1e-15, rtol=1e-12))


def write_csv(result: BudgetResult, path: str | Path) -> None:
    """Export every spectrum as ASD (m/sqrt(Hz)), one column per source."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["frequency_hz", *SOURCES])
        for i, f in enumerate(result.grid.points):
            row = [f"{f:.8e}"] + [f"{result.spectra[s].asd[i]:.8e}" for s in SOURCES]
            writer.writerow(row)
