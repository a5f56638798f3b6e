"""Linearized mechanical response of the levitated mirror.

The 3x3 stiffness matrix acting on ``(dx, dz, dbeta)`` is diagonal: the
horizontal entry comes from the tilt of the radiation forces about the
centres of curvature, the vertical one from the double optical spring, and
the rotational one from gravity acting on the convex mirror.
Stiffness is complex: real part spring, imaginary part damping.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .config import CONSTANTS, CavitySpec, SystemConfig, mirror_mass
from .optics import CavityDerived

ROC_CONVENTIONS = ("signed", "paper-literal")


class DegenerateGeometryError(ValueError):
    pass


class SusceptibilityPoleError(ZeroDivisionError):
    def __init__(self, f_res: float):
        super().__init__(f"susceptibility diverges at the undamped resonance f_res = {f_res:.6g} Hz")
        self.f_res = f_res


@dataclass(frozen=True)
class ComplexStiffness:
    """Spring constant ``real_part + 1j * imag_part`` evaluated at ``eval_freq`` (rad/s).

    Fields may be numpy arrays when evaluated on a grid.
    """

    real_part: float | np.ndarray
    imag_part: float | np.ndarray
    eval_freq: float | np.ndarray
    flags: tuple[str, ...] = ()

    @property
    def value(self) -> complex | np.ndarray:
        return self.real_part + 1j * self.imag_part

    def __add__(self, other: ComplexStiffness) -> ComplexStiffness:
        return ComplexStiffness(self.real_part + other.real_part, self.imag_part + other.imag_part,
                                self.eval_freq, tuple(dict.fromkeys(self.flags + other.flags)))


@dataclass(frozen=True)
class StiffnessMatrix:
    horizontal: ComplexStiffness
    vertical: ComplexStiffness
    rotational: ComplexStiffness
    eval_freq: float

    def as_array(self) -> np.ndarray:
        return np.diag([complex(self.horizontal.value), complex(self.vertical.value),
                        complex(self.rotational.value)])


@dataclass(frozen=True)
class TrappingRanges:
    dz_bound: float
    dx_bound_detuning: float
    dx_bound_geometric: float
    dx_bound_modematch: float

    @property
    def dx_bound(self) -> float:
        return min(self.dx_bound_detuning, self.dx_bound_geometric, self.dx_bound_modematch)

    @property
    def binding_dx_condition(self) -> str:
        bounds = {"detuning": self.dx_bound_detuning, "geometric": self.dx_bound_geometric,
                  "modematch": self.dx_bound_modematch}
        return min(bounds, key=bounds.get)


@dataclass(frozen=True)
class BalanceCheck:
    residual: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return abs(self.residual) <= self.tolerance


@dataclass(frozen=True)
class DofCheck:
    name: str
    spring_min: float
    damping_min: float | None  # None when the DOF has no modeled damping
    spring_ok: bool
    damping_ok: bool | None
    gating_damping: bool = True

    @property
    def passed(self) -> bool:
        if not self.spring_ok:
            return False
        return not (self.gating_damping and self.damping_ok is False)


@dataclass(frozen=True)
class StabilityReport:
    checks: tuple[DofCheck, ...]
    f_res: float | None
    band: tuple[float, float]
    notes: tuple[str, ...] = field(default=())

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def check(self, name: str) -> DofCheck:
        return next(c for c in self.checks if c.name == name)


def optical_spring_constants(cavity: CavitySpec, derived: CavityDerived, mass: float,
                             wavelength: float) -> tuple[float, float]:
    """Adiabatic optical spring constant (N/m) and damping rate (1/s) of one cavity.

    Positive detuning gives a restoring spring and anti-damping.
    """
    d = cavity.detuning_norm
    lorentz = 1.0 + d * d
    k = 16.0 * cavity.finesse * d * derived.circulating_power / (wavelength * CONSTANTS.c * lorentz)
    gamma = -(k / mass) * 4.0 / (derived.linewidth_fwhm * lorentz)
    return k, gamma


def vertical_optical_spring(cavity: CavitySpec, derived: CavityDerived, mass: float,
                            omega: float | np.ndarray, wavelength: float) -> ComplexStiffness:
    k, gamma = optical_spring_constants(cavity, derived, mass, wavelength)
    omega_arr = np.asarray(omega, dtype=float)
    flags = ()
    if np.any(omega_arr > derived.linewidth_fwhm / 10.0):
        flags = (f"{cavity.label}: omega above kappa/10, adiabatic spring approximation degraded",)
    real = k * np.ones_like(omega_arr) if omega_arr.ndim else k
    imag = mass * omega * gamma
    return ComplexStiffness(real, imag, omega, flags)


def horizontal_g(config: SystemConfig, side: str, derived: CavityDerived,
                 convention: str = "signed") -> float:
    """Resonator g-product entering the horizontal damping term."""
    if convention == "signed":
        return derived.g_product
    if convention == "paper-literal":
        cav = config.cavity(side)
        return (1.0 - cav.length / cav.fixed_mirror_roc) * (1.0 - cav.length / config.mirror.roc)
    raise ValueError(f"unknown ROC convention {convention!r}; expected one of {ROC_CONVENTIONS}")


def horizontal_spring(cavity: CavitySpec, derived: CavityDerived, omega: float | np.ndarray,
                      g_product: float) -> ComplexStiffness:
    """Restoring stiffness from the radiation force tilting about the centres of curvature.

    ``K = +-(F/a) [1 - i omega pi l / (F c (1 - G))]``, negative for the lower
    cavity and positive for the upper one.
    """
    if g_product == 1.0:
        raise DegenerateGeometryError(f"{cavity.label}: G = 1 makes the horizontal damping diverge")
    sign = -1.0 if cavity.label == "lower" else 1.0
    k = sign * derived.radiation_force / cavity.coc_distance
    tau = math.pi * cavity.length / (cavity.finesse * CONSTANTS.c * (1.0 - g_product))
    omega_arr = np.asarray(omega, dtype=float)
    real = k * np.ones_like(omega_arr) if omega_arr.ndim else k
    return ComplexStiffness(real, -k * omega * tau, omega)


def gravity_rotational_stiffness(mass: float, roc: float) -> ComplexStiffness:
    return ComplexStiffness(mass * CONSTANTS.g_acc * roc, 0.0, 0.0)


def vertical_stiffness(config: SystemConfig, derived_pair: tuple[CavityDerived, CavityDerived],
                       omega: float | np.ndarray) -> ComplexStiffness:
    """Sum of the two optical springs acting on the vertical displacement."""
    m = mirror_mass(config.mirror)
    lam = config.laser.wavelength
    lower, upper = derived_pair
    return (vertical_optical_spring(config.lower, lower, m, omega, lam)
            + vertical_optical_spring(config.upper, upper, m, omega, lam))


def horizontal_stiffness(config: SystemConfig, derived_pair: tuple[CavityDerived, CavityDerived],
                         omega: float | np.ndarray, roc_convention: str = "signed") -> ComplexStiffness:
    lower, upper = derived_pair
    return (horizontal_spring(config.lower, lower, omega,
                              horizontal_g(config, "lower", lower, roc_convention))
            + horizontal_spring(config.upper, upper, omega,
                                horizontal_g(config, "upper", upper, roc_convention)))


def stiffness_matrix(config: SystemConfig, derived_pair: tuple[CavityDerived, CavityDerived],
                     omega: float, roc_convention: str = "signed") -> StiffnessMatrix:
    rot = gravity_rotational_stiffness(mirror_mass(config.mirror), config.mirror.roc)
    return StiffnessMatrix(
        horizontal=horizontal_stiffness(config, derived_pair, omega, roc_convention),
        vertical=vertical_stiffness(config, derived_pair, omega),
        rotational=ComplexStiffness(rot.real_part, rot.imag_part, omega),
        eval_freq=omega,
    )


def spring_resonance(config: SystemConfig, derived_pair: tuple[CavityDerived, CavityDerived]) -> float | None:
    """Frequency (Hz) where ``Re(-m Omega^2 + K_z) = 0``, or None for a non-restoring spring."""
    m = mirror_mass(config.mirror)
    k = float(vertical_stiffness(config, derived_pair, 0.0).real_part)
    if k <= 0:
        return None
    return math.sqrt(k / m) / (2.0 * math.pi)


def default_band(derived_pair: tuple[CavityDerived, CavityDerived]) -> tuple[float, float]:
    """1 Hz up to a tenth of the narrowest cavity linewidth, in rad/s."""
    return 2.0 * math.pi, min(d.linewidth_fwhm for d in derived_pair) / 10.0


def stability_report(config: SystemConfig, derived_pair: tuple[CavityDerived, CavityDerived],
                     freq_band: tuple[float, float] | None = None, points: int = 200,
                     roc_convention: str = "signed",
                     strict_horizontal_damping: bool = False) -> StabilityReport:
    """Sign conditions on the diagonal stiffness entries across an angular-frequency band.

    Horizontal damping is reported but only gates the verdict when
    ``strict_horizontal_damping`` is set.
    """
    band = freq_band or default_band(derived_pair)
    omega = np.geomspace(band[0], band[1], points)
    kz = vertical_stiffness(config, derived_pair, omega)
    kx = horizontal_stiffness(config, derived_pair, omega, roc_convention)
    rot = gravity_rotational_stiffness(mirror_mass(config.mirror), config.mirror.roc)

    def dof(name, k, gate=True):
        re_min = float(np.min(k.real_part))
        im_min = float(np.min(k.imag_part))
        return DofCheck(name, re_min, im_min, re_min > 0, im_min > 0, gate)

    checks = (
        dof("horizontal", kx, strict_horizontal_damping),
        dof("vertical", kz),
        DofCheck("rotational", float(rot.real_part), None, rot.real_part > 0, None),
    )
    notes = ["rotational damping by residual gas is not modeled"]
    notes.extend(kz.flags)
    if checks[0].damping_ok is False and not strict_horizontal_damping:
        notes.append("horizontal damping is negative (reported, not gating)")
    return StabilityReport(checks, spring_resonance(config, derived_pair), band, tuple(notes))


def force_balance(config: SystemConfig, derived_pair: tuple[CavityDerived, CavityDerived],
                  tolerance: float = 0.05) -> BalanceCheck:
    """Relative mismatch between net upward radiation force and weight."""
    lower, upper = derived_pair
    weight = mirror_mass(config.mirror) * CONSTANTS.g_acc
    return BalanceCheck((lower.radiation_force - upper.radiation_force - weight) / weight, tolerance)


def trapping_ranges(config: SystemConfig, derived_pair: tuple[CavityDerived, CavityDerived]) -> TrappingRanges:
    lam = config.laser.wavelength
    dz, dx_det, dx_geo, dx_mm = [], [], [], []
    for cav, der in zip((config.lower, config.upper), derived_pair):
        length_detuning = lam * abs(cav.detuning_norm) / cav.finesse
        dz.append(length_detuning)
        dx_det.append(math.sqrt(2.0 * cav.coc_distance * length_detuning))
        dx_geo.append(cav.coc_distance)
        # (dx/w0)^2/2 + (dx/(a theta0))^2/2 = 1
        w0 = der.waist_radius
        theta0 = lam / (math.pi * w0)
        dx_mm.append(math.sqrt(2.0 / (1.0 / w0**2 + 1.0 / (cav.coc_distance * theta0) ** 2)))
    return TrappingRanges(min(dz), min(dx_det), min(dx_geo), min(dx_mm))


def susceptibility(mass: float, k_z: ComplexStiffness, omega: float | np.ndarray) -> complex | np.ndarray:
    """Force-to-displacement response ``1 / (-m Omega^2 + K_z(Omega))`` in m/N."""
    denom = -mass * np.asarray(omega, dtype=float) ** 2 + k_z.value
    if np.any(denom == 0):
        k = float(np.max(k_z.real_part))
        raise SusceptibilityPoleError(math.sqrt(max(k, 0.0) / mass) / (2.0 * math.pi))
    return 1.0 / denom
