import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from optolev.config import (ConfigError, bundled_text, mirror_mass, parse_config, serialize, table1,
                            validate)


def test_bundled_table1_fields():
    cfg = table1()
    assert cfg.laser.wavelength == pytest.approx(1.064e-6)
    assert cfg.lower.finesse == 100
    assert cfg.upper.detuning_norm == pytest.approx(0.018)
    assert cfg.mirror.coating.groups()[0][2] == 7
    assert cfg.mirror.coating.groups()[1][2] == 6


def test_empty_document_names_first_required_key():
    with pytest.raises(ConfigError, match="mirror"):
        parse_config("")


def test_negative_pressure_rejected():
    text = bundled_text("table1").replace("pressure = 1e-5", "pressure = -1")
    assert text != bundled_text("table1")
    with pytest.raises(ConfigError, match="pressure >= 0"):
        parse_config(text)


@pytest.mark.parametrize("bad, pattern", [
    ("radius = 0.35 mm", "unit"),
    ("radius = 0.35e-3mm", "unit"),
    ("radius = \"big\"", "numeric|number"),
])
def test_parse_errors(bad, pattern):
    text = bundled_text("table1").replace("radius = 0.35e-3", bad, 1)
    with pytest.raises(ConfigError, match=pattern):
        parse_config(text)


def test_unknown_key_rejected():
    text = bundled_text("table1").replace("[laser]", "[laser]\ncolour = 1", 1)
    with pytest.raises(ConfigError, match="colour"):
        parse_config(text)


def test_syntax_error_reports_position():
    with pytest.raises(ConfigError, match="line"):
        parse_config("[mirror\nradius = 1")


def test_mass_examples():
    mir = table1().mirror
    assert mirror_mass(mir) == pytest.approx(1.98e-7, rel=5e-3)
    assert mirror_mass(table1().replace(**{"mirror.radius": 1e-300}).mirror) == pytest.approx(0.0, abs=1e-300)
    doubled = table1().replace(**{"mirror.radius": 2 * mir.radius}).mirror
    assert mirror_mass(doubled) == pytest.approx(8 * mirror_mass(mir), rel=1e-12)


@given(st.floats(1e-5, 1e-2), st.floats(1.01, 3.0))
def test_mass_monotone_in_radius(r, factor):
    cfg = table1()
    small = mirror_mass(cfg.replace(**{"mirror.radius": r}).mirror)
    big = mirror_mass(cfg.replace(**{"mirror.radius": r * factor}).mirror)
    assert big > small


@given(st.floats(100.0, 2e4), st.floats(1.01, 3.0))
def test_mass_monotone_in_density(rho, factor):
    cfg = table1()
    small = mirror_mass(cfg.replace(**{"mirror.coating.substrate.density": rho}).mirror)
    big = mirror_mass(cfg.replace(**{"mirror.coating.substrate.density": rho * factor}).mirror)
    assert big > small


def test_validate_table1_empty():
    assert validate(table1()) == []


def test_validate_concave_mirror():
    v = validate(table1().replace(**{"mirror.roc": -30e-3}))
    assert [x.message for x in v] == ["mirror must be convex downward (R > 0)"]


def test_validate_same_sign_detunings():
    v = validate(table1().replace(**{"lower.detuning_norm": 0.005}))
    assert "detunings must have opposite signs" in [x.message for x in v]


@pytest.mark.parametrize("path", ["mirror.roc", "lower.coc_distance", "upper.coc_distance",
                                  "lower.detuning_norm", "upper.detuning_norm"])
def test_sign_flip_of_stability_field_is_flagged(path):
    cfg = table1()
    obj = cfg
    for part in path.split("."):
        obj = getattr(obj, part) if part not in ("lower", "upper") else cfg.cavity(part)
    assert validate(cfg.replace(**{path: -obj}))


def test_zero_power_is_inadmissible_not_invalid():
    v = validate(table1().replace(**{"upper.input_power": 0.0}))
    assert [x.kind for x in v] == ["inadmissible"]


_positive = st.floats(1e-3, 1e3, allow_nan=False)


@settings(max_examples=60)
@given(scale=_positive, finesse=st.floats(1.0, 1e5), det=st.floats(-0.99, 0.99),
       pressure=st.floats(0.0, 1e3), spot=st.one_of(st.none(), st.floats(1e-6, 1e-2)),
       rin=st.one_of(st.none(), st.floats(0.0, 1e-6)))
def test_round_trip(scale, finesse, det, pressure, spot, rin):
    cfg = table1().replace(**{
        "mirror.radius": 0.35e-3 * scale,
        "lower.finesse": finesse,
        "upper.detuning_norm": det,
        "environment.pressure": pressure,
        "lower.spot_radius": spot,
        "laser.rin_asd": rin,
    })
    assert parse_config(serialize(cfg)) == cfg


def test_round_trip_table1_text_is_stable():
    text = serialize(table1())
    assert serialize(parse_config(text)) == text
    assert math.isclose(parse_config(text).mirror.radius, 0.35e-3)
