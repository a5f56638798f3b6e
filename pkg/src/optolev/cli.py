"""Command-line entry point.

Exit codes: 0 success, 1 domain failure (violations, infeasible design,
failed reproduction row), 2 usage, I/O or computation error.
"""

from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

from . import config as cfgmod
from .config import ConfigError, SystemConfig
from .noise import FrequencyGrid, total_budget, write_csv
from .optics import derive_pair
from .report import eng, make_manifest
from .reproduce import reproduction_rows, rows_to_csv
from .search import OBJECTIVES, feasibility, optimize, parse_space, solve_balance, write_trace_csv
from .stability import (ROC_CONVENTIONS, force_balance, spring_resonance, stability_report,
                        stiffness_matrix, trapping_ranges)


class UsageError(Exception):
    pass


def _config_bytes(path: str) -> bytes:
    if path in cfgmod.BUNDLED and not Path(path).exists():
        return cfgmod.bundled_text(path).encode()
    return Path(path).read_bytes()


def _load(args) -> tuple[SystemConfig, bytes]:
    raw = _config_bytes(args.config)
    config = cfgmod.parse_config(raw.decode())
    if getattr(args, "solve_balance", False):
        config = solve_balance(config)
    return config, raw


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _text_output(args, command: str, raw: bytes, text: str) -> None:
    out = _out_dir(args)
    path = out / f"{command}.txt"
    path.write_text(text)
    make_manifest(command, raw, [path]).write(out)
    print(text, end="")


def cmd_validate(args) -> int:
    config, raw = _load(args)
    violations = cfgmod.validate(config)
    lines = [str(v) for v in violations] or ["ok: no violations"]
    _text_output(args, "validate", raw, "\n".join(lines) + "\n")
    return 1 if violations else 0


def cmd_budget(args) -> int:
    if not (0 < args.f_min < args.f_max) or args.points < 2:
        raise UsageError("need 0 < --f-min < --f-max and --points >= 2")
    config, raw = _load(args)
    grid = FrequencyGrid.log(args.f_min, args.f_max, args.points)
    result = total_budget(config, grid)
    out = _out_dir(args)
    csv_path = out / args.csv
    write_csv(result, csv_path)
    lines = [
        f"f_SQL (intersection)   {eng(result.f_sql_full, 'Hz')}",
        f"f_SQL (closed form)    {eng(result.f_sql_approx, 'Hz')}",
        f"SQL ASD at f_SQL       {result.sql_asd_at_fsql:.4g} m/sqrt(Hz)",
        f"classical margin       {result.margin_at_fsql:.4g} (SQL / classical PSD)",
        f"coating ratio          {result.coa_ratio:.4g} (SQL / coating PSD)",
        "ASD at f_SQL [m/sqrt(Hz)]:",
    ]
    lines += [f"  {src:<20s} {val:.4e}" for src, val in result.asd_at_fsql.items()]
    lines += [f"note: {n}" for n in result.notes]
    summary = "\n".join(lines) + "\n"
    summary_path = out / "budget_summary.txt"
    summary_path.write_text(summary)
    make_manifest("budget", raw, [csv_path, summary_path]).write(out)
    print(summary, end="")
    return 0


def _fmt_k(k, unit):
    return f"{complex(k.value).real:+.4e} {complex(k.value).imag:+.4e}i {unit}"


def cmd_stability(args) -> int:
    config, raw = _load(args)
    lines: list[str] = []
    derived = derive_pair(config)
    f_res = spring_resonance(config, derived)
    for label, omega in (("DC", 0.0), ("spring resonance", 2 * math.pi * (f_res or 0.0))):
        km = stiffness_matrix(config, derived, omega, args.roc_convention)
        lines.append(f"stiffness at {label} ({eng(omega / (2 * math.pi), 'Hz')}):")
        lines.append(f"  horizontal  {_fmt_k(km.horizontal, 'N/m')}")
        lines.append(f"  vertical    {_fmt_k(km.vertical, 'N/m')}")
        lines.append(f"  rotational  {_fmt_k(km.rotational, 'N m/rad')}")
    report = stability_report(config, derived, roc_convention=args.roc_convention,
                              strict_horizontal_damping=args.strict_horizontal_damping)
    for c in report.checks:
        damping = "n/a" if c.damping_ok is None else ("pass" if c.damping_ok else "FAIL")
        if c.damping_ok is False and not c.gating_damping:
            damping += " (reported only)"
        lines.append(f"{c.name:<11s} spring {'pass' if c.spring_ok else 'FAIL'}  damping {damping}")
    lines.append(f"spring resonance      {eng(f_res, 'Hz') if f_res else 'none (non-restoring)'}")
    tr = trapping_ranges(config, derived)
    lines.append(f"trapping dz           {eng(tr.dz_bound, 'm')}")
    lines.append(f"trapping dx           {eng(tr.dx_bound, 'm')} (binding: {tr.binding_dx_condition})")
    bal = force_balance(config, derived)
    lines.append(f"force-balance residual {bal.residual:+.4f} ({'pass' if bal.passed else 'FAIL'})")
    for note in report.notes:
        lines.append(f"note: {note}")
    lines.append(f"overall: {'PASS' if report.passed else 'FAIL'}")
    _text_output(args, "stability", raw, "\n".join(lines) + "\n")
    return 0 if report.passed else 1


def cmd_feasibility(args) -> int:
    config, raw = _load(args)
    lines: list[str] = []
    report = feasibility(config, strict_horizontal_damping=args.strict_horizontal_damping,
                         roc_convention=args.roc_convention)
    for c in report.constraints:
        flag = "pass" if c.passed else ("FAIL" if c.gating else "fail (reported only)")
        lines.append(f"{c.id:<26s} {c.value:12.4g}  {flag:<20s} {c.description}")
    lines.append(f"f_SQL {eng(report.f_sql, 'Hz')}, SQL ASD {report.sql_asd:.4g} m/sqrt(Hz)")
    lines.append(f"overall: {'FEASIBLE' if report.overall else 'INFEASIBLE'}")
    _text_output(args, "feasibility", raw, "\n".join(lines) + "\n")
    return 0 if report.overall else 1


def cmd_optimize(args) -> int:
    if not args.space:
        raise UsageError("optimize needs --space")
    config, raw = _load(args)
    space = parse_space(Path(args.space).read_text(), config, seed=args.seed)
    result = optimize(space, args.objective, solve_balance_first=args.solve_balance,
                      strict_horizontal_damping=args.strict_horizontal_damping,
                      roc_convention=args.roc_convention)
    out = _out_dir(args)
    best_path = out / "best_config.toml"
    best_path.write_text(cfgmod.serialize(result.best))
    trace_path = out / args.csv
    write_trace_csv(result, trace_path)
    make_manifest("optimize", raw, [best_path, trace_path]).write(out)
    print(f"objective {args.objective} = {result.objective:.6g}")
    print(f"evaluations {len(result.trace)}, feasible: {'yes' if result.feasible else 'NO'}")
    for path in space.paths:
        print(f"  {path} = {_get_path(result.best, path):.6g}")
    return 0 if result.feasible else 1


def _get_path(obj, path):
    for part in path.split("."):
        obj = getattr(obj, part)
    return obj


def cmd_reproduce(args) -> int:
    config, raw = _load(args)
    rows = reproduction_rows(config, strict_horizontal_damping=args.strict_horizontal_damping,
                             roc_convention=args.roc_convention)
    out = _out_dir(args)
    table_path = out / "reproduce.csv"
    table_path.write_text(rows_to_csv(rows))
    spectra_path = out / "spectra.csv"
    write_csv(total_budget(config, FrequencyGrid.log(10.0, 1e6, 1000)), spectra_path)
    make_manifest("reproduce", raw, [table_path, spectra_path]).write(out)
    for r in rows:
        print(f"[{'PASS' if r.passed else 'FAIL'}] {r.criterion:>2d} {r.quantity:<42s} "
              f"{r.computed:12.4e}  ref {r.reference:<10s} tol {r.tolerance}")
    failed = sum(not r.passed for r in rows)
    print(f"{len(rows) - failed}/{len(rows)} rows pass")
    return 0 if failed == 0 else 1


COMMANDS = {
    "validate": cmd_validate,
    "budget": cmd_budget,
    "stability": cmd_stability,
    "feasibility": cmd_feasibility,
    "optimize": cmd_optimize,
    "reproduce": cmd_reproduce,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default="table1",
                        help="configuration file; 'table1' selects the bundled design (default)")
    common.add_argument("--out", default=".", help="output directory")
    common.add_argument("--seed", type=int, default=None, help="optimizer seed")
    common.add_argument("--solve-balance", action="store_true",
                        help="rescale the lower input power to cancel the weight before evaluating")
    common.add_argument("--roc-convention", choices=ROC_CONVENTIONS, default="signed")
    common.add_argument("--strict-horizontal-damping", action="store_true",
                        help="let the horizontal damping sign gate the verdict")

    parser = argparse.ArgumentParser(prog="optolev", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("validate", parents=[common], help="check a configuration")
    p.add_argument("config_path", nargs="?", help="same as --config")
    p = sub.add_parser("budget", parents=[common], help="noise budget and spectra CSV")
    p.add_argument("--f-min", type=float, default=10.0)
    p.add_argument("--f-max", type=float, default=1e6)
    p.add_argument("--points", type=int, default=1000)
    p.add_argument("--csv", default="spectra.csv", help="spectra file name inside --out")
    sub.add_parser("stability", parents=[common], help="stiffness matrix, trapping ranges, force balance")
    sub.add_parser("feasibility", parents=[common], help="all design constraints as margins")
    p = sub.add_parser("optimize", parents=[common], help="search a parameter box")
    p.add_argument("--space", help="search-space file with <field>_min / <field>_max keys")
    p.add_argument("--objective", choices=OBJECTIVES, default="max_classical_margin")
    p.add_argument("--csv", default="trace.csv", help="trace file name inside --out")
    sub.add_parser("reproduce", parents=[common], help="compare headline numbers with the published values")
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 2
    if getattr(args, "config_path", None):
        args.config = args.config_path
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
    except (ValueError, ArithmeticError) as exc:
        print(f"computation error: {exc}", file=sys.stderr)
    return 2


if __name__ == "__main__":
    sys.exit(main())
