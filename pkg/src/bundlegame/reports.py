"""JSON reports: deterministic serialization, append-only writing and comparison."""

from __future__ import annotations

import json
import math
import os
import time
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

OUT_ENV = "BUNDLEGAME_OUT"


class ReportMismatchError(ValueError):
    """Two reports of different commands cannot be compared."""


def jsonable(obj):
    """Plain JSON data; infinities become the strings ``"INF"`` / ``"-INF"``."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if math.isinf(v):
            return "INF" if v > 0 else "-INF"
        if math.isnan(v):
            return "NAN"
        return v
    if obj is None or isinstance(obj, str):
        return obj
    return str(obj)


def render(report: dict) -> str:
    return json.dumps(jsonable(report), indent=2, sort_keys=True) + "\n"


def output_dir(flag: str | None = None, configured: str | None = None) -> Path:
    """``--out`` beats the environment variable, which beats the config file."""
    return Path(flag or os.environ.get(OUT_ENV) or configured or "reports")


def write_report(report: dict, directory, command: str, seed, runtime: float | None = None) -> Path:
    """Write ``<command>-<timestamp>-seed<seed>.json`` without overwriting anything.

    Wall-clock data (timestamp, runtime) goes to a ``.runtime.json`` sidecar so
    the report body depends only on the configuration.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    now = datetime.now(timezone.utc)
    stem = f"{command}-{now.strftime('%Y%m%dT%H%M%S%fZ')}-seed{'none' if seed is None else seed}"
    path = directory / f"{stem}.json"
    k = 1
    while path.exists():
        path = directory / f"{stem}-{k}.json"
        k += 1
    path.write_text(render(report))
    sidecar = {"report": path.name, "timestamp": now.isoformat(), "runtime_seconds": runtime}
    path.with_suffix(".runtime.json").write_text(json.dumps(sidecar, indent=2, sort_keys=True) + "\n")
    return path


@dataclass
class Diff:
    same: bool
    differences: list = field(default_factory=list)

    def __bool__(self):
        return self.same


def _walk(a, b, path: str, tol: float, out: list) -> None:
    if isinstance(a, dict) and isinstance(b, dict):
        for k in sorted(set(a) | set(b)):
            if k not in a or k not in b:
                out.append(f"{path}/{k}: present in only one report")
            else:
                _walk(a[k], b[k], f"{path}/{k}", tol, out)
    elif isinstance(a, list) and isinstance(b, list):
        if len(a) != len(b):
            out.append(f"{path}: lengths {len(a)} and {len(b)}")
        for i, (u, v) in enumerate(zip(a, b)):
            _walk(u, v, f"{path}[{i}]", tol, out)
    elif (isinstance(a, (int, float)) and isinstance(b, (int, float))
          and not isinstance(a, bool) and not isinstance(b, bool)):
        if abs(a - b) > tol:
            out.append(f"{path}: {a!r} vs {b!r}")
    elif a != b:
        out.append(f"{path}: {a!r} vs {b!r}")


def load_report(path) -> dict:
    return json.loads(Path(path).read_text())


def report_diff(a, b, tol: float = 0.0) -> Diff:
    """Field-wise comparison of two reports (paths or dicts); numbers within ``tol``."""
    ra = load_report(a) if not isinstance(a, dict) else jsonable(a)
    rb = load_report(b) if not isinstance(b, dict) else jsonable(b)
    if ra.get("command") != rb.get("command") or ra.get("check") != rb.get("check"):
        raise ReportMismatchError(
            f"cannot compare a {ra.get('command')}/{ra.get('check')} report "
            f"with a {rb.get('command')}/{rb.get('check')} report"
        )
    out: list = []
    _walk(ra, rb, "", tol, out)
    return Diff(not out, out)


class Stopwatch:
    def __enter__(self):
        self.start = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.start
