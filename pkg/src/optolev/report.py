"""Run manifests and human-readable number formatting."""

from __future__ import annotations

import datetime as _dt
import hashlib
import json
import math
import os
from dataclasses import asdict, dataclass
from pathlib import Path

TOOL_VERSION = "0.1.0"

_PREFIXES = {-18: "a", -15: "f", -12: "p", -9: "n", -6: "µ", -3: "m", 0: "", 3: "k", 6: "M", 9: "G"}


def eng(value: float, unit: str = "", digits: int = 4) -> str:
    """Engineering notation with an SI prefix when one exists, e.g. ``eng(2.3e4, 'Hz') -> '23 kHz'``."""
    if value is None or not math.isfinite(value):
        return f"{value} {unit}".strip()
    if value == 0:
        return f"0 {unit}".strip()
    exp3 = int(math.floor(math.log10(abs(value)) / 3) * 3)
    if exp3 in _PREFIXES and unit:
        return f"{value / 10**exp3:.{digits}g} {_PREFIXES[exp3]}{unit}"
    return f"{value:.{digits}g} {unit}".strip()


@dataclass(frozen=True)
class RunManifest:
    command: str
    config_digest: str
    tool_version: str
    timestamp: str
    outputs: tuple[str, ...]

    def write(self, out_dir: str | Path) -> Path:
        path = Path(out_dir) / "manifest.json"
        data = asdict(self)
        data["outputs"] = list(self.outputs)
        path.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")
        return path


def digest(data: bytes) -> str:
    return "sha256:" + hashlib.sha256(data).hexdigest()


def utc_timestamp() -> str:
    """Current UTC time, or SOURCE_DATE_EPOCH when set (reproducible builds)."""
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    now = (_dt.datetime.fromtimestamp(int(epoch), _dt.timezone.utc) if epoch
           else _dt.datetime.now(_dt.timezone.utc))
    return now.strftime("%Y-%m-%dT%H:%M:%SZ")


def make_manifest(command: str, config_bytes: bytes, outputs: list[Path]) -> RunManifest:
    return RunManifest(command, digest(config_bytes), TOOL_VERSION, utc_timestamp(),
                       tuple(p.name for p in outputs))
