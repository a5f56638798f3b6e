"""Parametric data model of the two-cavity levitation system.

The configuration document is TOML restricted to plain SI numbers.
Sections::

    [mirror]                 radius, aspect_ratio, roc, hr_side, absorption,
                             internal_mode_freq
    [mirror.substrate]       material keys
    [mirror.coating.high]    material keys + thickness, layers
    [mirror.coating.low]     material keys + thickness, layers
    [laser]                  wavelength, freq_noise_asd, rin_asd
    [cavity.lower]           length, fixed_mirror_roc, coc_distance, finesse,
    [cavity.upper]           input_power, detuning_norm, spot_radius
    [environment]            temperature, pressure, gas_molecule_mass,
                             gas_shape_constant, seismic_coefficient,
                             suspension_resonance

The coating is an alternating stack that starts with the high-index group on
the side facing the lower cavity.
"""

from __future__ import annotations

import dataclasses
import math
import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Any

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib


class ConfigError(ValueError):
    """Raised when a configuration document cannot be turned into a SystemConfig."""


@dataclass(frozen=True)
class PhysicalConstants:
    c: float = 299_792_458.0
    hbar: float = 1.054_571_817e-34
    k_B: float = 1.380_649e-23
    g_acc: float = 9.806_65
    sigma_SB: float = 5.670_374_419e-8


CONSTANTS = PhysicalConstants()


@dataclass(frozen=True)
class MaterialProps:
    young_modulus: float
    poisson_ratio: float
    loss_angle: float
    refractive_index: float
    density: float


@dataclass(frozen=True)
class Layer:
    material: MaterialProps
    thickness: float


@dataclass(frozen=True)
class CoatingStack:
    """Dielectric layers ordered from the ambient side towards the substrate."""

    layers: tuple[Layer, ...]
    substrate: MaterialProps

    @classmethod
    def alternating(cls, high: MaterialProps, d_high: float, n_high: int,
                    low: MaterialProps, d_low: float, n_low: int,
                    substrate: MaterialProps) -> CoatingStack:
        if n_high - n_low not in (0, 1):
            raise ConfigError(
                f"alternating stack needs layers(high) - layers(low) in {{0, 1}}, "
                f"got {n_high} and {n_low}")
        layers = []
        for i in range(n_high + n_low):
            layers.append(Layer(high, d_high) if i % 2 == 0 else Layer(low, d_low))
        return cls(tuple(layers), substrate)

    def groups(self) -> list[tuple[MaterialProps, float, int]]:
        """Distinct layer materials with their total thickness and layer count, in order of first appearance."""
        out: dict[MaterialProps, list[float]] = {}
        for layer in self.layers:
            acc = out.setdefault(layer.material, [0.0, 0])
            acc[0] += layer.thickness
            acc[1] += 1
        return [(mat, d, int(n)) for mat, (d, n) in out.items()]


@dataclass(frozen=True)
class MirrorSpec:
    radius: float
    aspect_ratio: float
    roc: float
    coating: CoatingStack
    hr_side: str = "lower"
    absorption: float = 0.34e-6
    internal_mode_freq: float = 3.1e6

    @property
    def thickness(self) -> float:
        return 2.0 * self.radius / self.aspect_ratio

    @property
    def substrate(self) -> MaterialProps:
        return self.coating.substrate


@dataclass(frozen=True)
class LaserSpec:
    wavelength: float
    freq_noise_asd: float = 0.0
    rin_asd: float | None = None

    @property
    def frequency(self) -> float:
        return CONSTANTS.c / self.wavelength

    @property
    def angular_frequency(self) -> float:
        return 2.0 * math.pi * CONSTANTS.c / self.wavelength


@dataclass(frozen=True)
class CavitySpec:
    label: str
    length: float
    fixed_mirror_roc: float
    coc_distance: float
    finesse: float
    input_power: float
    detuning_norm: float
    # overrides the geometric spot radius on the levitated mirror
    spot_radius: float | None = None


@dataclass(frozen=True)
class Environment:
    temperature: float
    pressure: float
    gas_molecule_mass: float = 4.81e-26
    gas_shape_constant: float = 1.0
    seismic_coefficient: float = 1e-7
    suspension_resonance: float = 1.0


@dataclass(frozen=True)
class SystemConfig:
    mirror: MirrorSpec
    laser: LaserSpec
    lower: CavitySpec
    upper: CavitySpec
    environment: Environment

    def cavity(self, side: str) -> CavitySpec:
        return {"lower": self.lower, "upper": self.upper}[side]

    def replace(self, **changes: Any) -> SystemConfig:
        """Copy with dotted-path field changes, e.g. ``replace(**{"lower.finesse": 200})``."""
        return replace_fields(self, changes)


def replace_fields(obj: Any, changes: dict[str, Any]) -> Any:
    nested: dict[str, dict[str, Any]] = {}
    direct: dict[str, Any] = {}
    for path, value in changes.items():
        head, _, rest = path.partition(".")
        if rest:
            nested.setdefault(head, {})[rest] = value
        else:
            direct[head] = value
    for head, sub in nested.items():
        direct[head] = replace_fields(getattr(obj, head), sub)
    return dataclasses.replace(obj, **direct)


def mirror_mass(mirror: MirrorSpec) -> float:
    """Mass of the levitated mirror in kg.

    The mirror is a right cylinder of thickness ``2 r / aspect_ratio``; the
    curved face and the coating mass are neglected.
    """
    return mirror.substrate.density * math.pi * mirror.radius**2 * mirror.thickness


# ---------------------------------------------------------------------------
# Validation


@dataclass(frozen=True)
class Violation:
    code: str
    message: str
    # "invalid" breaks a type invariant, "inadmissible" breaks a design rule
    kind: str = "invalid"

    def __str__(self) -> str:
        return f"{self.code}: {self.message}"


def _material_violations(prefix: str, m: MaterialProps) -> list[Violation]:
    out = []
    if not m.young_modulus > 0:
        out.append(Violation(f"{prefix}.young_modulus", "young_modulus > 0"))
    if not 0 <= m.poisson_ratio < 0.5:
        out.append(Violation(f"{prefix}.poisson_ratio", "0 <= poisson_ratio < 0.5"))
    if not m.loss_angle >= 0:
        out.append(Violation(f"{prefix}.loss_angle", "loss_angle >= 0"))
    if not m.refractive_index >= 1:
        out.append(Violation(f"{prefix}.refractive_index", "refractive_index >= 1"))
    if not m.density > 0:
        out.append(Violation(f"{prefix}.density", "density > 0"))
    return out


def validate(config: SystemConfig) -> list[Violation]:
    """Every invariant violation of ``config``; empty iff it is admissible."""
    v: list[Violation] = []
    mir = config.mirror
    v += _material_violations("mirror.substrate", mir.substrate)
    if not mir.coating.layers:
        v.append(Violation("mirror.coating", "coating needs at least one layer"))
    for i, layer in enumerate(mir.coating.layers):
        if not layer.thickness > 0:
            v.append(Violation(f"mirror.coating.layer{i}", "layer thickness > 0"))
    for i, (mat, _, _) in enumerate(mir.coating.groups()):
        v += _material_violations(f"mirror.coating.group{i}", mat)
    if not mir.radius > 0:
        v.append(Violation("mirror.radius", "radius > 0"))
    if not mir.aspect_ratio > 0:
        v.append(Violation("mirror.aspect_ratio", "aspect_ratio > 0"))
    if not mir.absorption >= 0:
        v.append(Violation("mirror.absorption", "absorption >= 0"))
    if not mir.internal_mode_freq > 0:
        v.append(Violation("mirror.internal_mode_freq", "internal_mode_freq > 0"))
    if mir.hr_side not in ("lower", "upper"):
        v.append(Violation("mirror.hr_side", "hr_side must be 'lower' or 'upper'"))
    elif mir.hr_side != "lower":
        v.append(Violation("mirror.hr_side", "only an HR coating on the lower face is supported",
                           "inadmissible"))
    if not mir.roc > 0:
        v.append(Violation("mirror.roc", "mirror must be convex downward (R > 0)", "inadmissible"))

    las = config.laser
    if not las.wavelength > 0:
        v.append(Violation("laser.wavelength", "wavelength > 0"))
    if not las.freq_noise_asd >= 0:
        v.append(Violation("laser.freq_noise_asd", "freq_noise_asd >= 0"))
    if las.rin_asd is not None and not las.rin_asd >= 0:
        v.append(Violation("laser.rin_asd", "rin_asd >= 0"))

    for side in ("lower", "upper"):
        cav = config.cavity(side)
        p = f"cavity.{side}"
        if cav.label != side:
            v.append(Violation(f"{p}.label", f"label must be '{side}'"))
        for name in ("length", "fixed_mirror_roc", "coc_distance", "finesse"):
            if not getattr(cav, name) > 0:
                v.append(Violation(f"{p}.{name}", f"{name} > 0"))
        if not cav.input_power >= 0:
            v.append(Violation(f"{p}.input_power", "input_power >= 0"))
        elif cav.input_power == 0:
            v.append(Violation(f"{p}.input_power", "cavity has no input power", "inadmissible"))
        if not abs(cav.detuning_norm) < 1:
            v.append(Violation(f"{p}.detuning_norm", "|detuning_norm| < 1"))
        if cav.spot_radius is not None and not cav.spot_radius > 0:
            v.append(Violation(f"{p}.spot_radius", "spot_radius > 0"))
    if config.lower.detuning_norm * config.upper.detuning_norm >= 0:
        v.append(Violation("cavity.detuning", "detunings must have opposite signs", "inadmissible"))

    env = config.environment
    if not env.temperature > 0:
        v.append(Violation("environment.temperature", "temperature > 0"))
    if not env.pressure >= 0:
        v.append(Violation("environment.pressure", "pressure >= 0"))
    if not env.gas_molecule_mass > 0:
        v.append(Violation("environment.gas_molecule_mass", "gas_molecule_mass > 0"))
    if not env.gas_shape_constant > 0:
        v.append(Violation("environment.gas_shape_constant", "gas_shape_constant > 0"))
    if not env.seismic_coefficient >= 0:
        v.append(Violation("environment.seismic_coefficient", "seismic_coefficient >= 0"))
    if not env.suspension_resonance > 0:
        v.append(Violation("environment.suspension_resonance", "suspension_resonance > 0"))
    return v


# ---------------------------------------------------------------------------
# Document schema

_REQ = object()
_MATERIAL_KEYS = {k: _REQ for k in
                  ("young_modulus", "poisson_ratio", "loss_angle", "refractive_index", "density")}
_LAYER_KEYS = {**_MATERIAL_KEYS, "thickness": _REQ, "layers": _REQ}
_SCHEMA: dict[str, dict[str, Any]] = {
    "mirror": {"radius": _REQ, "aspect_ratio": _REQ, "roc": _REQ, "hr_side": "lower",
               "absorption": 0.34e-6, "internal_mode_freq": 3.1e6},
    "mirror.substrate": _MATERIAL_KEYS,
    "mirror.coating.high": _LAYER_KEYS,
    "mirror.coating.low": _LAYER_KEYS,
    "laser": {"wavelength": _REQ, "freq_noise_asd": 0.0, "rin_asd": None},
    "cavity.lower": {"length": _REQ, "fixed_mirror_roc": _REQ, "coc_distance": _REQ,
                     "finesse": _REQ, "input_power": _REQ, "detuning_norm": _REQ,
                     "spot_radius": None},
    "environment": {"temperature": _REQ, "pressure": _REQ, "gas_molecule_mass": 4.81e-26,
                    "gas_shape_constant": 1.0, "seismic_coefficient": 1e-7,
                    "suspension_resonance": 1.0},
}
_SCHEMA["cavity.upper"] = _SCHEMA["cavity.lower"]
_STRING_KEYS = {("mirror", "hr_side")}
_INT_KEYS = {"layers"}
_UNIT_SUFFIX = re.compile(r"^\s*[-+]?(\d+\.?\d*|\.\d+)([eE][-+]?\d+)?\s*[A-Za-zµ%]")
_BARE_UNIT_LINE = re.compile(
    r"^\s*(\w+)\s*=\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)(?![\d.eE])\s*(?![eE][-+]?\d)([A-Za-zµ%][^#]*?)\s*(#.*)?$")


def _flatten(doc: dict[str, Any], prefix: str = "") -> dict[str, dict[str, Any]]:
    sections: dict[str, dict[str, Any]] = {}
    for key, value in doc.items():
        name = f"{prefix}.{key}" if prefix else key
        if isinstance(value, dict):
            for sub, vals in _flatten(value, name).items():
                sections[sub] = vals
        else:
            sections.setdefault(prefix, {})[key] = value
    return sections


def _coerce(section: str, key: str, value: Any) -> Any:
    where = f"[{section}] {key}"
    if (section, key) in _STRING_KEYS:
        if not isinstance(value, str):
            raise ConfigError(f"{where}: expected a string")
        return value
    if isinstance(value, bool):
        raise ConfigError(f"{where}: non-numeric value {value!r}")
    if isinstance(value, str):
        if _UNIT_SUFFIX.match(value):
            raise ConfigError(f"{where}: unit suffix in {value!r}; give a plain SI number")
        raise ConfigError(f"{where}: non-numeric value {value!r}")
    if not isinstance(value, (int, float)):
        raise ConfigError(f"{where}: non-numeric value {value!r}")
    if key in _INT_KEYS:
        if isinstance(value, float) and not value.is_integer():
            raise ConfigError(f"{where}: layer count must be an integer")
        return int(value)
    return float(value)


def _read_sections(text: str) -> dict[str, dict[str, Any]]:
    for lineno, line in enumerate(text.splitlines(), start=1):
        m = _BARE_UNIT_LINE.match(line)
        if m and m.group(3) not in ("true", "false", "inf", "nan"):
            raise ConfigError(
                f"line {lineno}, column {m.start(3) + 1}: unit suffix {m.group(3)!r} on "
                f"{m.group(1)}; give a plain SI number")
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"syntax error: {exc}") from exc
    sections = _flatten(doc)
    if "" in sections:
        raise ConfigError(f"key outside any section: {sorted(sections[''])[0]}")
    for section, values in sections.items():
        if section not in _SCHEMA:
            raise ConfigError(f"unknown section [{section}]")
        for key in values:
            if key not in _SCHEMA[section]:
                raise ConfigError(f"unknown key [{section}] {key}")
    out: dict[str, dict[str, Any]] = {}
    for section, keys in _SCHEMA.items():
        given = sections.get(section, {})
        vals = {}
        for key, default in keys.items():
            if key in given:
                vals[key] = _coerce(section, key, given[key])
            elif default is _REQ:
                raise ConfigError(f"missing required key [{section}] {key}")
            else:
                vals[key] = default
        out[section] = vals
    return out


def _material(vals: dict[str, Any]) -> MaterialProps:
    return MaterialProps(**{k: vals[k] for k in _MATERIAL_KEYS})


def parse_config(text: str) -> SystemConfig:
    """Build a SystemConfig from a configuration document.

    Raises ConfigError on syntax errors, missing or unknown keys, non-numeric
    values, unit suffixes and broken type invariants. Design-rule violations
    (mirror curvature sign, detuning signs) are left to :func:`validate`.
    """
    s = _read_sections(text)
    hi, lo = s["mirror.coating.high"], s["mirror.coating.low"]
    coating = CoatingStack.alternating(
        _material(hi), hi["thickness"], hi["layers"],
        _material(lo), lo["thickness"], lo["layers"],
        _material(s["mirror.substrate"]))
    mirror = MirrorSpec(coating=coating, **s["mirror"])
    config = SystemConfig(
        mirror=mirror,
        laser=LaserSpec(**s["laser"]),
        lower=CavitySpec(label="lower", **s["cavity.lower"]),
        upper=CavitySpec(label="upper", **s["cavity.upper"]),
        environment=Environment(**s["environment"]),
    )
    hard = [v for v in validate(config) if v.kind == "invalid"]
    if hard:
        raise ConfigError(f"validation error: {hard[0]}")
    return config


def _fmt(value: Any) -> str:
    if isinstance(value, str):
        return f'"{value}"'
    if isinstance(value, int):
        return str(value)
    text = repr(float(value))
    if not math.isfinite(value):
        raise ValueError(f"cannot serialize non-finite value {value}")
    return text


def _split_alternating(stack: CoatingStack) -> tuple[Layer, int, Layer, int]:
    first = stack.layers[0]
    second = stack.layers[1] if len(stack.layers) > 1 else first
    odd = stack.layers[0::2]
    even = stack.layers[1::2]
    if any(layer != first for layer in odd) or any(layer != second for layer in even):
        raise ValueError("only two-material alternating stacks can be serialized")
    return first, len(odd), second, len(even)


def serialize(config: SystemConfig) -> str:
    """Configuration document for ``config``; ``parse_config`` inverts it."""
    hi, n_hi, lo, n_lo = _split_alternating(config.mirror.coating)
    mir = config.mirror
    sections: list[tuple[str, dict[str, Any]]] = [
        ("mirror", {"radius": mir.radius, "aspect_ratio": mir.aspect_ratio, "roc": mir.roc,
                    "hr_side": mir.hr_side, "absorption": mir.absorption,
                    "internal_mode_freq": mir.internal_mode_freq}),
        ("mirror.substrate", dataclasses.asdict(mir.substrate)),
        ("mirror.coating.high", {**dataclasses.asdict(hi.material),
                                 "thickness": hi.thickness, "layers": n_hi}),
        ("mirror.coating.low", {**dataclasses.asdict(lo.material),
                                "thickness": lo.thickness, "layers": n_lo}),
        ("laser", dataclasses.asdict(config.laser)),
    ]
    for side in ("lower", "upper"):
        vals = dataclasses.asdict(config.cavity(side))
        del vals["label"]
        sections.append((f"cavity.{side}", vals))
    sections.append(("environment", dataclasses.asdict(config.environment)))

    lines: list[str] = []
    for name, vals in sections:
        lines.append(f"[{name}]")
        for key, value in vals.items():
            if value is not None:
                lines.append(f"{key} = {_fmt(value)}")
        lines.append("")
    return "\n".join(lines)


BUNDLED = {"table1": "table1.toml"}


def bundled_text(name: str) -> str:
    return resources.files("optolev.data").joinpath(BUNDLED[name]).read_text()


def load_config(path: str | Path) -> SystemConfig:
    """Parse a configuration file; the bare name ``table1`` selects the bundled file."""
    if str(path) in BUNDLED and not Path(path).exists():
        return parse_config(bundled_text(str(path)))
    return parse_config(Path(path).read_text())


def table1() -> SystemConfig:
    return parse_config(bundled_text("table1"))
