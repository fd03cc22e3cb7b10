"""Study output files.

============== ===========================================================
runs.csv       one row per RunRecord, columns in ``RUN_FIELDS`` order,
               sorted by (n, generator, data_kind, estimand, se_method, run)
summary.csv    one row per cell, columns in ``CELL_FIELDS`` order
summary.json   ``{"config", "cells", "power_laws", "quality"}``
convergence.csv one row per power-law fit, columns in ``CONVERGENCE_FIELDS``
manifest.json  config echo, version, seed, timestamps, sha256 per file
============== ===========================================================

Floats are written with 17 significant digits (``repr`` round trip), booleans
as ``true``/``false`` and missing values as empty cells.
"""

import csv
import datetime as _dt
import hashlib
import json
import math
from pathlib import Path

from synthdebias.study import CELL_FIELDS, RUN_FIELDS

CONVERGENCE_FIELDS = ("generator", "data_kind", "estimand", "se_method", "a", "a_low", "a_high", "log_c", "points")


def _cell(v):
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return "" if math.isnan(v) else format(v, ".17g")
    return str(v)


def _json_default(v):
    if hasattr(v, "item"):
        return v.item()
    raise TypeError(f"not JSON serialisable: {type(v).__name__}")


def _clean(obj):
    """Replace NaN by None so the JSON is standard."""
    if isinstance(obj, float) and math.isnan(obj):
        return None
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    return obj


def write_json(obj, path):
    Path(path).write_text(json.dumps(_clean(obj), indent=2, default=_json_default) + "\n")


def write_rows(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_cell(r[h]) for h in header])


def write_runs(records, path):
    rows = sorted(records, key=lambda r: r.key)
    write_rows(path, RUN_FIELDS, (r.to_dict() for r in rows))


def write_summary_csv(summary, path):
    write_rows(path, CELL_FIELDS, (c.to_dict() for c in summary.cells))


def write_convergence(summary, path):
    rows = []
    for (gen, kind, est, meth), fit in summary.power_laws.items():
        rows.append({"generator": gen, "data_kind": kind, "estimand": est, "se_method": meth, **fit.to_dict()})
    write_rows(path, CONVERGENCE_FIELDS, rows)


def sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def now():
    return _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")


def write_manifest(out_dir, config_echo, seed, files, started, version):
    out_dir = Path(out_dir)
    manifest = {
        "tool": "synthdebias",
        "version": version,
        "seed": seed,
        "config": config_echo,
        "started": started,
        "finished": now(),
        "files": [{"name": Path(f).name, "sha256": sha256(out_dir / Path(f).name)} for f in files],
    }
    write_json(manifest, out_dir / "manifest.json")
    return manifest


def write_study(out_dir, config, records, summary, started, version):
    """Write every study output to ``out_dir`` and return the manifest."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_runs(records, out_dir / "runs.csv")
    write_summary_csv(summary, out_dir / "summary.csv")
    write_json({"config": config.to_dict(), **summary.to_dict()}, out_dir / "summary.json")
    write_convergence(summary, out_dir / "convergence.csv")
    files = ["runs.csv", "summary.csv", "summary.json", "convergence.csv"]
    return write_manifest(out_dir, config.to_dict(), config.seed, files, started, version)
