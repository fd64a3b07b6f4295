"""Dataset ingestion, tidy CSV output, run manifests, INI configs and presets."""

from __future__ import annotations

import configparser
import csv
import hashlib
import io
import json
import math
import re
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .empirical import CensoredSample
from .errors import ConfigError, DataError
from .estimators import METHODS
from .montecarlo import McConfig, default_k_grid

__all__ = [
    "read_dataset",
    "format_value",
    "write_csv",
    "csv_text",
    "read_csv",
    "RunManifest",
    "manifest_path",
    "sha256_file",
    "PRESETS",
    "preset_config",
    "parse_k_range",
    "parse_methods",
    "parse_grid",
    "load_config_file",
    "CONFIG_KEYS",
    "resolve_mc_config",
]


# --- datasets ---------------------------------------------------------------


def _is_number(text: str) -> bool:
    try:
        float(text)
    except ValueError:
        return False
    return True


def read_dataset(path) -> CensoredSample:
    """Read a CSV of ``(z, delta)`` pairs.

    A header row is optional. With a header, the columns named ``z`` and
    ``delta`` are used (case-insensitive, any position); without one, the first
    two columns are taken in that order. Blank lines are skipped. Errors carry
    the 1-based line number of the offending row.
    """
    try:
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc.strerror or exc}") from exc
    except (UnicodeDecodeError, csv.Error) as exc:
        raise DataError(f"cannot parse {path}: {exc}") from exc

    numbered = [(i + 1, [c.strip() for c in row]) for i, row in enumerate(rows) if any(c.strip() for c in row)]
    if not numbered:
        raise DataError(f"{path} contains no data rows")

    z_col, d_col = 0, 1
    first_line, first = numbered[0]
    if not all(_is_number(c) for c in first[:2] if c):
        names = [c.lower() for c in first]
        for col in ("z", "delta"):
            if col not in names:
                raise DataError(f"missing column {col!r} in header {first!r}", line=first_line)
        z_col, d_col = names.index("z"), names.index("delta")
        numbered = numbered[1:]
        if not numbered:
            raise DataError(f"{path} has a header but no data rows")

    z = np.empty(len(numbered))
    d = np.empty(len(numbered))
    width = max(z_col, d_col) + 1
    for r, (line, row) in enumerate(numbered):
        if len(row) < width:
            raise DataError(f"expected at least {width} fields, found {len(row)}", line=line)
        try:
            zv = float(row[z_col])
        except ValueError:
            raise DataError(f"z value {row[z_col]!r} is not a number", line=line) from None
        if not math.isfinite(zv) or zv < 0:
            raise DataError(f"z value {row[z_col]!r} must be finite and non-negative", line=line)
        dv = row[d_col]
        if dv not in ("0", "1", "0.0", "1.0"):
            raise DataError(f"delta value {dv!r} must be 0 or 1", line=line)
        z[r] = zv
        d[r] = float(dv)
    return CensoredSample(z, d)


# --- CSV output -------------------------------------------------------------


def format_value(v) -> str:
    """Shortest round-trip text for floats; empty field for missing values."""
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return "" if math.isnan(v) else repr(v)
    return str(v)


def csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([format_value(v) for v in row])
    return buf.getvalue()


def write_csv(path, header, rows) -> None:
    Path(path).write_text(csv_text(header, rows))


def read_csv(path) -> list[dict[str, str]]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


# --- manifests --------------------------------------------------------------


def sha256_file(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def manifest_path(out) -> Path:
    out = Path(out)
    return out.with_name(out.name + ".manifest.json")


@dataclass
class RunManifest:
    """Everything needed to regenerate an output file.

    ``resolved`` holds the fully resolved inputs of the command (after presets,
    config files and flags are merged), so replay does not depend on the
    defaults of the replaying version.
    """

    command: str
    resolved: dict
    seed: int | None
    tool_version: str
    output: str
    output_sha256: str
    timestamp: str = field(default_factory=lambda: datetime.now(timezone.utc).isoformat(timespec="seconds"))

    def to_json(self) -> str:
        return json.dumps(self.__dict__, indent=2, sort_keys=True) + "\n"

    def write(self) -> Path:
        path = manifest_path(self.output)
        path.write_text(self.to_json())
        return path

    @classmethod
    def load(cls, path) -> "RunManifest":
        try:
            data = json.loads(Path(path).read_text())
        except OSError as exc:
            raise DataError(f"cannot read manifest {path}: {exc.strerror or exc}") from exc
        except json.JSONDecodeError as exc:
            raise DataError(f"manifest {path} is not valid JSON: {exc.msg}", line=exc.lineno) from exc
        missing = {"command", "resolved", "seed", "tool_version", "output", "output_sha256"} - set(data)
        if missing:
            raise DataError(f"manifest {path} lacks fields {sorted(missing)}")
        return cls(**data)


# --- parsing helpers --------------------------------------------------------


def parse_k_range(text: str) -> tuple[int, ...]:
    """``"a..b"`` or ``"a..b:step"``, inclusive of both ends."""
    m = re.fullmatch(r"\s*(\d+)\s*\.\.\s*(\d+)\s*(?::\s*(\d+)\s*)?", text or "")
    if not m:
        raise ConfigError("k_range", f"expected 'a..b' or 'a..b:step', got {text!r}")
    a, b = int(m.group(1)), int(m.group(2))
    step = int(m.group(3)) if m.group(3) else 1
    if a < 1 or b < a or step < 1:
        raise ConfigError("k_range", f"need 1 <= a <= b and step >= 1, got {text!r}")
    return tuple(range(a, b + 1, step))


def parse_methods(text: str) -> tuple[str, ...]:
    methods = tuple(m.strip().upper() for m in (text or "").split(",") if m.strip())
    bad = [m for m in methods if m not in METHODS]
    if not methods or bad:
        raise ConfigError("methods", f"expected a comma list drawn from {', '.join(METHODS)}, got {text!r}")
    return methods


def parse_grid(text: str) -> np.ndarray:
    """``"x_min,x_max,points,linear|log"`` to an increasing grid."""
    parts = [p.strip() for p in (text or "").split(",")]
    if len(parts) != 4:
        raise ConfigError("grid", f"expected 'x_min,x_max,points,linear|log', got {text!r}")
    try:
        lo, hi, pts = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise ConfigError("grid", f"bad numbers in {text!r}") from None
    kind = parts[3].lower()
    if not (0 < lo < hi and math.isfinite(hi)) or pts < 2:
        raise ConfigError("grid", f"need 0 < x_min < x_max and at least 2 points, got {text!r}")
    if kind == "linear":
        return np.linspace(lo, hi, pts)
    if kind == "log":
        return np.geomspace(lo, hi, pts)
    raise ConfigError("grid", f"spacing must be 'linear' or 'log', got {parts[3]!r}")


# --- presets ----------------------------------------------------------------

CENSORING_LEVELS = {"strong": 0.55, "moderate": 0.70, "weak": 0.90}
PRESET_REPLICATES = 2000
PRESET_SEED = 2024


def _build_presets():
    presets = {}
    for n in (300, 1000):
        for level, p in CENSORING_LEVELS.items():
            for gamma1 in (0.2, 0.8):
                name = f"burr-{level}-{int(round(gamma1 * 10)):02d}"
                if n != 300:
                    name += f"-n{n}"
                presets[name] = {
                    "gamma1": gamma1,
                    "p": p,
                    "eta1": 0.25,
                    "eta2": 0.25,
                    "n": n,
                    "replicates": PRESET_REPLICATES,
                    "seed": PRESET_SEED,
                    "model": "burr",
                }
    return presets


PRESETS = _build_presets()


def preset_config(name: str) -> dict:
    try:
        return dict(PRESETS[name])
    except KeyError:
        raise ConfigError("preset", f"unknown preset {name!r}; run 'censtail presets' for the list") from None


# --- config files -----------------------------------------------------------

CONFIG_KEYS = {
    "preset": str,
    "gamma1": float,
    "p": float,
    "eta1": float,
    "eta2": float,
    "n": int,
    "replicates": int,
    "seed": int,
    "k_range": parse_k_range,
    "methods": parse_methods,
    "model": str,
}


def load_config_file(path) -> dict:
    """Read the ``[simulate]`` section of an INI file into typed values.

    Recognised keys: ``preset``, ``gamma1``, ``p``, ``eta1``, ``eta2``, ``n``,
    ``replicates``, ``seed``, ``k_range`` (``a..b[:step]``), ``methods``
    (comma list) and ``model``. Unknown keys are rejected.
    """
    cp = configparser.ConfigParser()
    try:
        with open(path) as fh:
            cp.read_file(fh)
    except OSError as exc:
        raise DataError(f"cannot read config {path}: {exc.strerror or exc}") from exc
    except configparser.Error as exc:
        raise DataError(f"config {path} is not valid INI: {exc}") from exc
    if not cp.has_section("simulate"):
        raise ConfigError("simulate", f"config {path} needs a [simulate] section")
    out = {}
    for key, raw in cp.items("simulate"):
        if key not in CONFIG_KEYS:
            raise ConfigError(key, f"unknown key; expected one of {', '.join(CONFIG_KEYS)}")
        try:
            out[key] = CONFIG_KEYS[key](raw)
        except ValueError:
            raise ConfigError(key, f"cannot parse {raw!r}") from None
    return out


def resolve_mc_config(values: dict) -> McConfig:
    """Build an :class:`McConfig` from merged preset/file/flag values."""
    values = dict(values)
    base = preset_config(values.pop("preset")) if values.get("preset") else {}
    base.update({k: v for k, v in values.items() if v is not None})
    k_grid = base.pop("k_range", None)
    methods = base.pop("methods", None)
    for req in ("gamma1", "p", "n", "replicates", "seed"):
        if req not in base:
            raise ConfigError(req, "is required (give it as a flag, in the config file, or via --preset)")
    kwargs = {k: base[k] for k in ("gamma1", "p", "n", "replicates", "seed", "eta1", "eta2", "model") if k in base}
    if k_grid is not None:
        kwargs["k_grid"] = k_grid
    else:
        kwargs["k_grid"] = default_k_grid(int(base["n"]))
    if methods is not None:
        kwargs["estimators"] = methods
    return McConfig(**kwargs)
