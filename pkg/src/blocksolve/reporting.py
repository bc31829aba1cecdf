"""Report assembly and deterministic serialization.

Every output document starts with a header recording the tool version, the
subcommand, the fully resolved configuration, and the seed. Timings are
never embedded in the main documents; they travel in a separate sidecar so
byte-comparisons of results ignore them.
"""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path

import numpy as np

from . import __version__
from .errors import ConfigError

SCHEMAS = {
    "spectrum": "blocksolve/spectrum-report/v1",
    "schedule": "blocksolve/schedule-report/v1",
    "fit-summary": "blocksolve/fit-summary/v1",
    "fit-trace": "blocksolve/fit-trace/v1",
    "noise": "blocksolve/noise-table/v1",
    "history": "blocksolve/eval-history/v1",
    "loads": "blocksolve/loads/v1",
    "error": "blocksolve/error/v1",
    "timings": "blocksolve/timings/v1",
}


def header(subcommand: str, config: dict, seed) -> dict:
    return {
        "tool": "blocksolve",
        "version": __version__,
        "subcommand": subcommand,
        "seed": seed,
        "config": config,
    }


def to_jsonable(obj):
    if isinstance(obj, dict):
        return {k: to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [to_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def dump_json(document: dict) -> str:
    # insertion order is deterministic and keeps schema/header at the top
    return json.dumps(to_jsonable(document), indent=2) + "\n"


def write_json(path, document: dict) -> None:
    Path(path).write_text(dump_json(document))


def write_timings(path, timings: dict, subcommand: str) -> None:
    """Sidecar next to the main output; excluded from golden comparisons."""
    doc = {"schema": SCHEMAS["timings"], "subcommand": subcommand,
           "timings_sec": to_jsonable(timings)}
    side = Path(str(path) + ".timings.json")
    side.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def proc_set_compact(procs) -> str:
    """Compact range string for an ordered processor set, e.g. '0-3' or '7'."""
    procs = list(procs)
    if not procs:
        return ""
    runs = []
    start = prev = procs[0]
    for p in procs[1:]:
        if p == prev + 1:
            prev = p
            continue
        runs.append((start, prev))
        start = prev = p
    runs.append((start, prev))
    return ",".join(f"{a}" if a == b else f"{a}-{b}" for a, b in runs)


def csv_document(head: dict, fieldnames: list[str], rows: list[dict], schema: str) -> str:
    """Delimited text with '#' comment header lines, then CSV rows."""
    buf = io.StringIO()
    buf.write(f"# schema={schema}\n")
    buf.write(f"# tool=blocksolve version={__version__}\n")
    buf.write(f"# subcommand={head['subcommand']} seed={head['seed']}\n")
    buf.write(f"# config={json.dumps(to_jsonable(head['config']), sort_keys=True)}\n")
    writer = csv.DictWriter(buf, fieldnames=fieldnames, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: _fmt(v) for k, v in row.items()})
    return buf.getvalue()


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (np.integer,)):
        return int(v)
    return v


def read_csv_document(path) -> tuple[dict, list[dict]]:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"file not found: {path}")
    meta = {}
    lines = path.read_text().splitlines()
    body_start = 0
    for i, line in enumerate(lines):
        if not line.startswith("#"):
            body_start = i
            break
        for token in line[1:].strip().split(" ", 1):
            if "=" in token:
                key, val = token.split("=", 1)
                meta[key] = val
    reader = csv.DictReader(io.StringIO("\n".join(lines[body_start:])))
    return meta, list(reader)


# ------------------------------------------------------------------ history


def write_history(path, records, n: int, o: int, head: dict) -> None:
    fieldnames = [f"x{i}" for i in range(n)] + [f"r{i}" for i in range(o)] + ["f"]
    rows = []
    for rec in records:
        row = {f"x{i}": repr(float(v)) for i, v in enumerate(rec.x)}
        row.update({f"r{i}": repr(float(v)) for i, v in enumerate(rec.residuals)})
        row["f"] = repr(float(rec.f))
        rows.append(row)
    Path(path).write_text(csv_document(head, fieldnames, rows, SCHEMAS["history"]))


def read_history(path, n: int, o: int):
    from .fitting.problem import EvaluationRecord

    _, rows = read_csv_document(path)
    records = []
    for idx, row in enumerate(rows):
        try:
            x = np.array([float(row[f"x{i}"]) for i in range(n)])
            r = np.array([float(row[f"r{i}"]) for i in range(o)])
            f = float(row["f"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(
                f"history row {idx} does not match problem shape (n={n}, o={o}): {exc}"
            ) from exc
        records.append(EvaluationRecord(x=x, residuals=r, f=f, index=idx))
    return records


# -------------------------------------------------------------------- loads


def write_loads(path, loads, head: dict) -> None:
    doc = {
        "schema": SCHEMAS["loads"],
        "header": head,
        "blocks": [
            {"id": b.id, "dim": b.dim, "work": b.work, "comm_weight": b.comm_weight}
            for b in loads
        ],
    }
    write_json(path, doc)


def read_loads(path):
    from .scheduling import BlockLoad

    path = Path(path)
    if not path.exists():
        raise ConfigError(f"loads file not found: {path}")
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed loads file {path}: {exc}") from exc
    if doc.get("schema") != SCHEMAS["loads"]:
        raise ConfigError(f"unsupported loads schema {doc.get('schema')!r}")
    try:
        return [
            BlockLoad(
                id=int(b["id"]), dim=int(b["dim"]), work=float(b["work"]),
                comm_weight=float(b.get("comm_weight", 0.0)),
            )
            for b in doc["blocks"]
        ]
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"malformed block entry in {path}: {exc}") from exc
