"""Acceptance suite: one printed PASS/FAIL line per criterion.

Each criterion recomputes the headline numbers of the bundled 0.2 mg design
and compares them with the published values at fixed tolerances. Run with
``pytest tests/test_acceptance.py -v`` or ``python tests/test_acceptance.py``.
"""

import os
import sys
from pathlib import Path

import pytest

from optolev.cli import main
from optolev.reproduce import reproduction_rows

SPACE = Path(__file__).parent / "data" / "table1_space.toml"
TITLES = {
    1: "table round-trip: mass, circulating powers, force balance",
    2: "SQL-reaching frequency and SQL amplitude",
    3: "shot and radiation-pressure noise touch the SQL",
    4: "Brownian noise at 23 kHz and its SQL crossing",
    5: "double optical spring and its resonance",
    6: "horizontal statics",
    7: "trapping ranges",
    8: "gas, laser, seismic, intensity and thermal figures",
    9: "coating ratio scaling law",
    10: "oracle equivalences",
    11: "determinism of reproduce and optimize --seed 7",
}


@pytest.fixture(scope="module")
def rows():
    return reproduction_rows()


def _report(criterion: int, ok: bool, details: list[str], capsys=None) -> None:
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {criterion:>2d}: {TITLES[criterion]}"
    text = "\n".join([line] + [f"         {d}" for d in details])
    if capsys is not None:
        with capsys.disabled():
            print("\n" + text)
    else:
        print(text)


def _check(criterion: int, rows, capsys=None) -> tuple[bool, list[str]]:
    mine = [r for r in rows if r.criterion == criterion]
    details = [f"{'ok  ' if r.passed else 'MISS'} {r.quantity}: {r.computed:.4e} vs {r.reference} ({r.tolerance})"
               for r in mine]
    ok = all(r.passed for r in mine)
    _report(criterion, ok, details, capsys)
    return ok, details


@pytest.mark.parametrize("criterion", range(1, 11))
def test_criterion(criterion, rows, capsys):
    ok, details = _check(criterion, rows, capsys)
    assert ok, "; ".join(d for d in details if d.startswith("MISS"))


def _run_twice(tmp: Path, argv: list[str], files: list[str]) -> list[str]:
    env = os.environ.get("SOURCE_DATE_EPOCH")
    os.environ["SOURCE_DATE_EPOCH"] = "1700000000"
    try:
        outs = []
        for run in ("a", "b"):
            out = tmp / run
            main([*argv, "--out", str(out)])
            outs.append({f: (out / f).read_bytes() for f in files})
    finally:
        if env is None:
            del os.environ["SOURCE_DATE_EPOCH"]
        else:
            os.environ["SOURCE_DATE_EPOCH"] = env
    return [f for f in files if outs[0][f] != outs[1][f]]


def determinism(tmp: Path) -> tuple[bool, list[str]]:
    diff = _run_twice(tmp / "reproduce", ["reproduce"], ["reproduce.csv", "spectra.csv", "manifest.json"])
    diff += _run_twice(tmp / "optimize", ["optimize", "--space", str(SPACE), "--seed", "7"],
                       ["best_config.toml", "trace.csv", "manifest.json"])
    details = ["reproduce: reproduce.csv, spectra.csv, manifest.json",
               "optimize --seed 7: best_config.toml, trace.csv, manifest.json"]
    details += [f"MISS {f} differs between runs" for f in diff]
    return not diff, details


def test_criterion_11_determinism(tmp_path, capsys):
    ok, details = determinism(tmp_path)
    capsys.readouterr()
    _report(11, ok, details, capsys)
    assert ok


if __name__ == "__main__":
    import tempfile

    all_rows = reproduction_rows()
    results = [_check(c, all_rows)[0] for c in range(1, 11)]
    with tempfile.TemporaryDirectory() as d:
        import contextlib
        import io
        with contextlib.redirect_stdout(io.StringIO()):
            ok, det = determinism(Path(d))
        _report(11, ok, det)
        results.append(ok)
    print(f"{sum(results)}/{len(results)} criteria pass")
    sys.exit(0 if all(results) else 1)
