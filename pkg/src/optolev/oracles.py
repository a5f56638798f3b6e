"""Independent second routes for quantities computed elsewhere in the package.

These deliberately avoid the code paths they check: the stack reflectivity
uses interface/propagation matrices instead of characteristic matrices, and
the SQL crossing is found from the roots of a cubic instead of a bracketing
root finder.
"""

from __future__ import annotations

import cmath
import math

import numpy as np

from .config import CONSTANTS, CoatingStack, SystemConfig, mirror_mass
from .optics import CavityDerived
from .stability import optical_spring_constants


def stack_reflectivity_interfaces(stack: CoatingStack, wavelength: float, ambient_index: float = 1.0) -> float:
    """Power reflectivity from Fresnel interface matrices and layer propagation phases."""
    indices = [ambient_index] + [layer.material.refractive_index for layer in stack.layers] \
        + [stack.substrate.refractive_index]
    thicknesses = [layer.thickness for layer in stack.layers]

    def interface(n1, n2):
        r = (n1 - n2) / (n1 + n2)
        t = 2 * n1 / (n1 + n2)
        return [[1 / t, r / t], [r / t, 1 / t]]

    def matmul(a, b):
        return [[a[0][0] * b[0][0] + a[0][1] * b[1][0], a[0][0] * b[0][1] + a[0][1] * b[1][1]],
                [a[1][0] * b[0][0] + a[1][1] * b[1][0], a[1][0] * b[0][1] + a[1][1] * b[1][1]]]

    total = interface(indices[0], indices[1])
    for j, d in enumerate(thicknesses, start=1):
        phase = 2 * math.pi * indices[j] * d / wavelength
        prop = [[cmath.exp(-1j * phase), 0], [0, cmath.exp(1j * phase)]]
        total = matmul(matmul(total, prop), interface(indices[j], indices[j + 1]))
    return abs(total[1][0] / total[0][0]) ** 2


def f_sql_cubic(config: SystemConfig, derived_pair: tuple[CavityDerived, CavityDerived]) -> float:
    """Shot/radiation-pressure crossing from the cubic in ``x = Omega^2``.

    ``(hbar^2/S_F)(1 + 4x/kappa^2) [(m x - k)^2 + m^2 gamma^2 x] = S_F`` with the
    summed optical spring ``k`` and damping rate ``gamma``.
    """
    lower = derived_pair[0]
    m = mirror_mass(config.mirror)
    hbar = CONSTANTS.hbar
    s_f = (16.0 * hbar * config.laser.angular_frequency * lower.circulating_power
           * config.lower.finesse / (math.pi * CONSTANTS.c**2))
    k = gamma = 0.0
    for cav, der in zip((config.lower, config.upper), derived_pair):
        ki, gi = optical_spring_constants(cav, der, m, config.laser.wavelength)
        k += ki
        gamma += gi
    a = hbar**2 / s_f
    b = 4.0 / lower.linewidth_fwhm**2
    c1 = m * m * gamma * gamma - 2.0 * m * k
    coeffs = [a * m * m * b, a * (m * m + b * c1), a * (c1 + b * k * k), a * k * k - s_f]
    # x = x0 * y keeps the companion matrix well scaled
    x0 = s_f / (m * hbar)
    scaled = np.array([coeffs[0] * x0**3, coeffs[1] * x0**2, coeffs[2] * x0, coeffs[3]]) / s_f
    roots = np.roots(scaled) * x0
    x_min = 4.0 * max(k, 0.0) / m  # above twice the spring resonance
    real = sorted(r.real for r in roots if abs(r.imag) <= 1e-9 * abs(r) and r.real > x_min)
    if not real:
        raise ValueError("no crossing above the spring resonance")
    return math.sqrt(real[0]) / (2.0 * math.pi)
