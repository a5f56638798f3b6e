"""Per-cavity optics: resonator g-factors, Gaussian mode, power buildup, forces and heating."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .config import CONSTANTS, CavitySpec, CoatingStack, MirrorSpec, SystemConfig

# "a few MW/mm^2"
DAMAGE_THRESHOLD = 2e12  # W/m^2


class UnstableResonatorError(ValueError):
    def __init__(self, product: float):
        super().__init__(f"unstable resonator: g1*g2 = {product:.6g} is outside (0, 1)")
        self.product = product


class ModeGeometry(NamedTuple):
    waist_radius: float
    spot_radius_levitated: float
    spot_radius_fixed: float


class StackResponse(NamedTuple):
    power_reflectivity: float
    power_transmissivity: float


class ClippingCheck(NamedTuple):
    loss: float
    bound: float
    passed: bool


@dataclass(frozen=True)
class CavityDerived:
    label: str
    g_fixed: float
    g_levitated: float
    waist_radius: float
    spot_radius_levitated: float
    spot_radius_fixed: float
    # geometric value before any configured override
    spot_radius_geometric: float
    linewidth_fwhm: float
    pole_freq: float
    circulating_power: float
    radiation_force: float
    effective_levitated_roc: float

    @property
    def g_product(self) -> float:
        return self.g_fixed * self.g_levitated


def effective_roc(mirror: MirrorSpec, side: str) -> float:
    """Signed ROC of the levitated mirror as seen from one cavity.

    Positive means concave towards that cavity. The lower beam hits the convex
    HR face (``-R``); the upper beam crosses the substrate and sees the concave
    face reduced by the substrate index (``+R / n_s``).
    """
    if mirror.hr_side != "lower":
        raise ValueError("only hr_side='lower' is supported")
    if side == "lower":
        return -mirror.roc
    if side == "upper":
        return mirror.roc / mirror.substrate.refractive_index
    raise ValueError(f"unknown side {side!r}")


def resonator_g(cavity: CavitySpec, roc_levitated_eff: float) -> tuple[float, float]:
    if cavity.fixed_mirror_roc == 0 or roc_levitated_eff == 0:
        raise ZeroDivisionError("radius of curvature must be non-zero")
    return (1.0 - cavity.length / cavity.fixed_mirror_roc,
            1.0 - cavity.length / roc_levitated_eff)


def mode_geometry(cavity: CavitySpec, g_pair: tuple[float, float], wavelength: float) -> ModeGeometry:
    """Waist and mirror spot radii of the fundamental mode of a two-mirror resonator.

    ``g_pair`` is ``(g_fixed, g_levitated)``. Raises UnstableResonatorError
    unless ``0 < g_fixed * g_levitated < 1``.
    """
    g_f, g_l = g_pair
    prod = g_f * g_l
    if not 0.0 < prod < 1.0:
        raise UnstableResonatorError(prod)
    scale = wavelength * cavity.length / math.pi
    w0_sq = scale * math.sqrt(prod * (1.0 - prod)) / abs(g_f + g_l - 2.0 * prod)
    w_lev_sq = scale * math.sqrt(g_f / (g_l * (1.0 - prod)))
    w_fix_sq = scale * math.sqrt(g_l / (g_f * (1.0 - prod)))
    return ModeGeometry(math.sqrt(w0_sq), math.sqrt(w_lev_sq), math.sqrt(w_fix_sq))


def stack_reflectivity(stack: CoatingStack, wavelength: float,
                       ambient_index: float = 1.0) -> StackResponse:
    """Normal-incidence reflectivity of a lossless thin-film stack (characteristic matrices)."""
    m = np.eye(2, dtype=complex)
    for layer in stack.layers:
        n = layer.material.refractive_index
        phase = 2.0 * math.pi * n * layer.thickness / wavelength
        c, s = math.cos(phase), math.sin(phase)
        m = m @ np.array([[c, 1j * s / n], [1j * n * s, c]])
    b, c = m @ np.array([1.0, stack.substrate.refractive_index])
    r = (ambient_index * b - c) / (ambient_index * b + c)
    refl = float(abs(r) ** 2)
    return StackResponse(refl, 1.0 - refl)


def circulating_power(cavity: CavitySpec) -> float:
    """Impedance-matched buildup ``P_in (F/pi) / (1 + delta^2)``."""
    return cavity.input_power * (cavity.finesse / math.pi) / (1.0 + cavity.detuning_norm**2)


def radiation_force(p_circ: float) -> float:
    return 2.0 * p_circ / CONSTANTS.c


def cavity_linewidth(cavity: CavitySpec) -> float:
    """FWHM linewidth in rad/s; the amplitude pole sits at ``kappa / (4 pi)`` Hz."""
    return math.pi * CONSTANTS.c / (cavity.length * cavity.finesse)


def clipping_loss(mirror_radius: float, spot_radius: float, finesse: float | None = None) -> ClippingCheck:
    """Power fraction of a Gaussian spot falling outside the mirror edge.

    The bound is the round-trip transmittance ``2 pi / F`` (``inf`` without a finesse).
    """
    loss = math.exp(-2.0 * mirror_radius**2 / spot_radius**2) if spot_radius > 0 else 0.0
    bound = 2.0 * math.pi / finesse if finesse else math.inf
    return ClippingCheck(loss, bound, loss <= bound)


def peak_intensity(p_circ: float, spot_radius: float) -> float:
    return 2.0 * p_circ / (math.pi * spot_radius**2)


def derive(config: SystemConfig, side: str) -> CavityDerived:
    cav = config.cavity(side)
    roc_eff = effective_roc(config.mirror, side)
    g_f, g_l = resonator_g(cav, roc_eff)
    mode = mode_geometry(cav, (g_f, g_l), config.laser.wavelength)
    kappa = cavity_linewidth(cav)
    p = circulating_power(cav)
    return CavityDerived(
        label=side,
        g_fixed=g_f,
        g_levitated=g_l,
        waist_radius=mode.waist_radius,
        spot_radius_levitated=cav.spot_radius or mode.spot_radius_levitated,
        spot_radius_fixed=mode.spot_radius_fixed,
        spot_radius_geometric=mode.spot_radius_levitated,
        linewidth_fwhm=kappa,
        pole_freq=kappa / (4.0 * math.pi),
        circulating_power=p,
        radiation_force=radiation_force(p),
        effective_levitated_roc=roc_eff,
    )


def derive_pair(config: SystemConfig) -> tuple[CavityDerived, CavityDerived]:
    """Derived optics for the ``(lower, upper)`` cavities."""
    return derive(config, "lower"), derive(config, "upper")


def surface_area(mirror: MirrorSpec) -> float:
    """Both faces plus the cylinder side."""
    return 2.0 * math.pi * mirror.radius**2 + 2.0 * math.pi * mirror.radius * mirror.thickness


def thermal_load(config: SystemConfig, derived: tuple[CavityDerived, CavityDerived],
                 emissivity: float = 1.0) -> tuple[float, float]:
    """Absorbed power and steady temperature rise of the levitated mirror.

    Only the lower beam is absorbed (the HR coating faces the lower cavity).
    The radiative balance is linearized around the ambient temperature.
    """
    lower, _ = derived
    p_abs = config.mirror.absorption * lower.circulating_power
    if p_abs == 0:
        return 0.0, 0.0
    t = config.environment.temperature
    conductance = 4.0 * CONSTANTS.sigma_SB * t**3 * surface_area(config.mirror) * emissivity
    return p_abs, p_abs / conductance

