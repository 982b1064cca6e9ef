"""Experiment reports: structured results with per-condition verdicts.

A report is a plain data object serialized to canonical JSON (sorted keys,
fixed separators), so identical configs and seeds produce byte-identical
report files.  Volatile data (wall time, library version) goes to a sidecar
meta file that is excluded from determinism comparisons.  Tables additionally
emit as CSV with stable column order.
"""

from __future__ import annotations

import csv
import json
import time
from dataclasses import dataclass, field
from pathlib import Path

from . import __version__
from .errors import CoarseGeoError

SCHEMA_VERSION = 1

EXIT_PASS = 0
EXIT_VIOLATION = 1
EXIT_INCONCLUSIVE = 2


@dataclass
class Condition:
    """One verified statement: an identifier, the formula it instantiates,
    the verdict, a witness for failures, and a trust flag for window
    limitations (untrusted passes make a run inconclusive, not green)."""

    id: str
    formula: str
    ok: bool
    witness: dict | None = None
    trusted: bool = True

    def as_dict(self) -> dict:
        return {
            "id": self.id,
            "formula": self.formula,
            "ok": self.ok,
            "witness": self.witness,
            "trusted": self.trusted,
        }


@dataclass
class ExperimentReport:
    kind: str
    config: dict
    conditions: list[Condition] = field(default_factory=list)
    tables: dict = field(default_factory=dict)
    constants: dict | None = None
    notes: list[str] = field(default_factory=list)
    wall_time: float | None = None

    def add(self, cond: Condition) -> None:
        self.conditions.append(cond)

    @property
    def ok(self) -> bool:
        return all(c.ok for c in self.conditions)

    @property
    def trusted(self) -> bool:
        return all(c.trusted for c in self.conditions)

    def exit_code(self) -> int:
        if not self.ok:
            return EXIT_VIOLATION
        if not self.trusted:
            return EXIT_INCONCLUSIVE
        return EXIT_PASS

    def canonical_dict(self) -> dict:
        """The deterministic payload: everything except volatile metadata."""
        return {
            "schema_version": SCHEMA_VERSION,
            "kind": self.kind,
            "config": self.config,
            "conditions": [c.as_dict() for c in self.conditions],
            "tables": self.tables,
            "constants": self.constants,
            "notes": self.notes,
            "ok": self.ok,
            "trusted": self.trusted,
        }

    def canonical_bytes(self) -> bytes:
        return (
            json.dumps(self.canonical_dict(), sort_keys=True, indent=2, ensure_ascii=False)
            + "\n"
        ).encode()


def emit_report(report: ExperimentReport, out_dir: str | Path) -> dict[str, Path]:
    """Write report.json (deterministic), meta.json (volatile), and CSV
    tables; returns the written paths.  Writes are atomic (tmp + rename)."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written: dict[str, Path] = {}

    report_path = out / "report.json"
    _atomic_write(report_path, report.canonical_bytes())
    written["report"] = report_path

    meta = {
        "library_version": __version__,
        "wall_time_seconds": report.wall_time,
        "written_at_unix": time.time(),
    }
    meta_path = out / "meta.json"
    _atomic_write(meta_path, (json.dumps(meta, sort_keys=True, indent=2) + "\n").encode())
    written["meta"] = meta_path

    cond_path = out / "conditions.csv"
    with _atomic_open(cond_path) as handle:
        writer = csv.writer(handle)
        writer.writerow(["id", "formula", "ok", "trusted", "witness"])
        for c in report.conditions:
            writer.writerow([
                c.id, c.formula, int(c.ok), int(c.trusted),
                json.dumps(c.witness, sort_keys=True) if c.witness else "",
            ])
    written["conditions"] = cond_path

    for name, table in sorted(report.tables.items()):
        if not isinstance(table, dict):
            continue
        path = out / f"table_{name}.csv"
        with _atomic_open(path) as handle:
            writer = csv.writer(handle)
            writer.writerow(["key", "value"])
            for k in sorted(table, key=str):
                writer.writerow([k, json.dumps(table[k], sort_keys=True)])
        written[f"table_{name}"] = path

    if report.constants:
        path = out / "constants.csv"
        with _atomic_open(path) as handle:
            writer = csv.writer(handle)
            writer.writerow(["constant", "value"])
            for k in sorted(report.constants):
                v = report.constants[k]
                if isinstance(v, (int, float, str)):
                    writer.writerow([k, v])
        written["constants"] = path
    return written


class _atomic_open:
    def __init__(self, path: Path):
        self.path = path
        self.tmp = path.with_suffix(path.suffix + ".tmp")

    def __enter__(self):
        self.handle = self.tmp.open("w", newline="")
        return self.handle

    def __exit__(self, exc_type, *args):
        self.handle.close()
        if exc_type is None:
            self.tmp.replace(self.path)
        else:
            self.tmp.unlink(missing_ok=True)
        return False


def _atomic_write(path: Path, data: bytes) -> None:
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_bytes(data)
    tmp.replace(path)


def diff_reports(path_a: str | Path, path_b: str | Path) -> list[str]:
    """Structural differences between two canonical reports, as dotted paths."""
    a = json.loads(Path(path_a).read_text())
    b = json.loads(Path(path_b).read_text())
    out: list[str] = []

    def walk(x, y, at: str):
        if type(x) is not type(y):
            out.append(f"{at}: type {type(x).__name__} != {type(y).__name__}")
            return
        if isinstance(x, dict):
            for k in sorted(set(x) | set(y)):
                if k not in x:
                    out.append(f"{at}.{k}: only in second")
                elif k not in y:
                    out.append(f"{at}.{k}: only in first")
                else:
                    walk(x[k], y[k], f"{at}.{k}")
        elif isinstance(x, list):
            if len(x) != len(y):
                out.append(f"{at}: length {len(x)} != {len(y)}")
            for i, (xi, yi) in enumerate(zip(x, y)):
                walk(xi, yi, f"{at}[{i}]")
        elif x != y:
            out.append(f"{at}: {x!r} != {y!r}")

    walk(a, b, "report")
    return out
