"""Dataset files, result files and run manifests.

Two dataset layouts are understood.

matrix-CSV
    The header row holds the grid knots; every following row is one
    observation evaluated on that grid.  A header whose first cell is
    ``euclidean`` (the remaining cells are free labels) declares plain R^p
    data with unit weights.  If the first header cell is ``id`` the first
    column carries observation ids.

channel-JSON
    ``{"format": "hilbtrim-channels", "version": 1, "ids": [...],
    "channels": [{"name": ..., "grid": [...] | "euclidean", "values": [[...]]}]}``.
    Rows are aligned by position across channels and concatenated; the inner
    product is the sum of per-channel inner products.

Floats are written with 17 significant digits in CSV and with ``repr`` in
JSON; both round-trip exactly.
"""

from __future__ import annotations

import csv
import hashlib
import io as _io
import json
import math
from pathlib import Path
from typing import Iterable, Optional

import numpy as np

from . import __version__
from .exceptions import DatasetParseError, HilbtrimError
from .hilbert import Channel, Grid, WeightedSample

CHANNEL_FORMAT = "hilbtrim-channels"
SCHEMA_VERSION = 1
EUCLIDEAN = "euclidean"


def fmt(x: float) -> str:
    return format(float(x), ".17g")


def dumps_keyed(doc: dict) -> str:
    """JSON object with one top-level key per line and compact values."""
    body = ",\n".join(f" {json.dumps(k)}: {json.dumps(v)}" for k, v in doc.items())
    return "{\n" + body + "\n}\n"


def file_sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 16), b""):
            h.update(block)
    return h.hexdigest()


def detect_format(path, fmt_name: Optional[str] = None) -> str:
    if fmt_name:
        if fmt_name not in ("csv", "json"):
            raise DatasetParseError(f"unknown dataset format {fmt_name!r}", path)
        return fmt_name
    suffix = Path(path).suffix.lower()
    if suffix == ".json":
        return "json"
    if suffix in (".csv", ".txt"):
        return "csv"
    raise DatasetParseError("cannot infer format from extension; pass format='csv' or 'json'", path)


def load_dataset(path, format: Optional[str] = None) -> WeightedSample:
    kind = detect_format(path, format)
    try:
        text = Path(path).read_text(encoding="utf-8")
    except UnicodeDecodeError as exc:
        raise DatasetParseError(f"not UTF-8: {exc}", path) from None
    if kind == "csv":
        return parse_matrix_csv(text, path)
    return parse_channel_json(text, path)


def _number(cell: str, path, line: int, what: str) -> float:
    try:
        v = float(cell)
    except ValueError:
        raise DatasetParseError(f"non-numeric {what} {cell!r}", path, line) from None
    if not math.isfinite(v):
        raise DatasetParseError(f"non-finite {what} {cell!r}", path, line)
    return v


def parse_matrix_csv(text: str, path=None) -> WeightedSample:
    rows = [(i + 1, r) for i, r in enumerate(csv.reader(_io.StringIO(text))) if any(c.strip() for c in r)]
    if not rows:
        raise DatasetParseError("empty file", path, 1)
    line, header = rows[0]
    header = [c.strip() for c in header]
    has_ids = header[0].lower() == "id"
    if has_ids:
        header = header[1:]
    euclid = bool(header) and header[0].lower() == EUCLIDEAN
    grid = None
    if not euclid:
        if not header:
            raise DatasetParseError("header has no grid knots", path, line)
        knots = [_number(c, path, line, "grid knot") for c in header]
        if len(knots) < 2 or any(b <= a for a, b in zip(knots, knots[1:])):
            raise DatasetParseError("grid knots must be strictly increasing (at least 2)", path, line)
        grid = Grid(knots)
    values, ids = [], []
    width = len(grid) if grid is not None else None
    for line, row in rows[1:]:
        cells = [c.strip() for c in row]
        if has_ids:
            ids.append(cells[0])
            cells = cells[1:]
        if width is None:
            width = len(cells)
        if len(cells) != width:
            raise DatasetParseError(f"expected {width} values, found {len(cells)}", path, line)
        values.append([_number(c, path, line, "value") for c in cells])
    if not values:
        raise DatasetParseError("no observations", path, rows[0][0])
    ids = tuple(ids) if has_ids else None
    if grid is None:
        return WeightedSample.euclidean(np.array(values), ids=ids)
    return WeightedSample.on_grid(np.array(values), grid, ids=ids)


def _json_line(text: str, needle: str) -> Optional[int]:
    pos = text.find(needle)
    return text.count("\n", 0, pos) + 1 if pos >= 0 else None


def parse_channel_json(text: str, path=None) -> WeightedSample:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DatasetParseError(exc.msg, path, exc.lineno) from None
    if not isinstance(doc, dict) or not isinstance(doc.get("channels"), list) or not doc["channels"]:
        raise DatasetParseError("expected an object with a non-empty 'channels' list", path)
    if doc.get("format", CHANNEL_FORMAT) != CHANNEL_FORMAT:
        raise DatasetParseError(f"format must be {CHANNEL_FORMAT!r}", path)
    if doc.get("version", SCHEMA_VERSION) != SCHEMA_VERSION:
        raise DatasetParseError(f"unsupported version {doc.get('version')!r}", path)
    parts, names = [], []
    for k, ch in enumerate(doc["channels"]):
        where = f"channels[{k}]"
        if not isinstance(ch, dict):
            raise DatasetParseError(f"{where} must be an object", path)
        name = str(ch.get("name", f"ch{k}"))
        line = _json_line(text, f'"{name}"')
        vals = ch.get("values")
        if not isinstance(vals, list) or not vals or not all(isinstance(r, list) for r in vals):
            raise DatasetParseError(f"{where}.values must be a non-empty list of rows", path, line)
        widths = {len(r) for r in vals}
        if len(widths) != 1:
            raise DatasetParseError(f"{where}.values has ragged rows {sorted(widths)}", path, line)
        try:
            arr = np.array(vals, dtype=float)
        except (TypeError, ValueError):
            raise DatasetParseError(f"{where}.values has non-numeric cells", path, line) from None
        if not np.all(np.isfinite(arr)):
            raise DatasetParseError(f"{where}.values has non-finite cells", path, line)
        grid = ch.get("grid", EUCLIDEAN)
        if grid == EUCLIDEAN or grid is None:
            part = WeightedSample(arr, np.ones(arr.shape[1]), (Channel(name, 0, arr.shape[1]),))
        else:
            try:
                g = Grid(np.array(grid, dtype=float))
            except (TypeError, ValueError) as exc:
                raise DatasetParseError(f"{where}.grid: {exc}", path, line) from None
            if len(g) != arr.shape[1]:
                raise DatasetParseError(
                    f"{where} has {arr.shape[1]} values per row for a {len(g)}-knot grid", path, line
                )
            part = WeightedSample.on_grid(arr, g, name=name)
        parts.append(part)
        names.append(name)
    counts = [p.n for p in parts]
    if len(set(counts)) != 1:
        raise DatasetParseError(f"channels have different row counts {counts}", path)
    ids = doc.get("ids")
    if ids is not None:
        if not isinstance(ids, list) or len(ids) != counts[0]:
            raise DatasetParseError("ids must be a list with one entry per observation", path)
        ids = tuple(ids)
    return WeightedSample.concat_channels(parts, names, ids)


def dump_matrix_csv(sample: WeightedSample) -> str:
    if len(sample.channels) != 1:
        raise HilbtrimError("matrix-CSV holds a single channel; use channel-JSON")
    grid = sample.channels[0].grid
    out = _io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    head = [EUCLIDEAN] + [f"x{j}" for j in range(1, sample.p)] if grid is None else [fmt(t) for t in grid.knots]
    if sample.ids is not None:
        head = ["id"] + head
    w.writerow(head)
    for i, row in enumerate(sample.values):
        cells = [fmt(v) for v in row]
        if sample.ids is not None:
            cells = [str(sample.ids[i])] + cells
        w.writerow(cells)
    return out.getvalue()


def dump_channel_json(sample: WeightedSample) -> str:
    channels = []
    for ch in sample.channels:
        channels.append({
            "name": ch.name,
            "grid": EUCLIDEAN if ch.grid is None else ch.grid.knots.tolist(),
            "values": sample.values[:, ch.start : ch.stop].tolist(),
        })
    doc = {"format": CHANNEL_FORMAT, "version": SCHEMA_VERSION, "channels": channels}
    if sample.ids is not None:
        doc["ids"] = list(sample.ids)
    return json.dumps(doc, indent=1) + "\n"


def save_dataset(sample: WeightedSample, path, format: Optional[str] = None) -> None:
    kind = detect_format(path, format)
    text = dump_matrix_csv(sample) if kind == "csv" else dump_channel_json(sample)
    Path(path).write_text(text, encoding="utf-8", newline="\n")


# -- result tables ------------------------------------------------------------

def radii_csv(rows: Iterable) -> str:
    """``rows`` are ``(id, alpha, radius, rank)`` tuples, already ordered."""
    out = _io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["id", "alpha", "radius", "rank"])
    for oid, alpha, r, rank in rows:
        w.writerow([oid, fmt(alpha), fmt(r), int(rank)])
    return out.getvalue()


def histogram_csv(rows: Iterable) -> str:
    """``rows`` are ``(alpha, lo, hi, count)`` tuples."""
    out = _io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["alpha", "bin_lo", "bin_hi", "count"])
    for alpha, lo, hi, count in rows:
        w.writerow([fmt(alpha), fmt(lo), fmt(hi), int(count)])
    return out.getvalue()


def report_csv(report) -> str:
    out = _io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["estimator", "model", "epsilon", "rmse", "reps", "failures", "seed"])
    for r in report.rows:
        w.writerow([r.estimator, r.model, fmt(r.epsilon), fmt(r.rmse), r.reps, r.failures, r.seed])
    return out.getvalue()


def report_json(report) -> str:
    doc = {
        "schema": "hilbtrim.simreport/1",
        "seed": report.seed,
        "config_hash": report.config_hash,
        "config": report.config.to_mapping(),
        "rows": [
            {
                "estimator": r.estimator, "model": r.model, "epsilon": r.epsilon,
                "rmse": None if math.isnan(r.rmse) else r.rmse,
                "reps": r.reps, "failures": r.failures, "elapsed": r.elapsed,
            }
            for r in report.rows
        ],
    }
    return dumps_keyed(doc)


def load_report_csv(path) -> list:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    for r in rows:
        r["model"] = int(r["model"])
        r["epsilon"] = float(r["epsilon"])
        r["rmse"] = float(r["rmse"])
        r["reps"] = int(r["reps"])
        r["failures"] = int(r["failures"])
        r["seed"] = int(r["seed"])
    return rows


def channel_layout(sample: WeightedSample) -> list:
    return [
        {"name": ch.name, "start": ch.start, "stop": ch.stop,
         "grid": None if ch.grid is None else ch.grid.knots.tolist()}
        for ch in sample.channels
    ]


def write_manifest(path, command: str, params: dict, outputs: dict, dataset=None, seed=None) -> dict:
    """Write a JSON manifest; ``outputs`` maps a role to a deterministic file."""
    doc = {
        "schema": "hilbtrim.manifest/1",
        "tool_version": __version__,
        "command": command,
        "config": params,
        "dataset": None if dataset is None else {"path": str(Path(dataset).resolve()),
                                                  "sha256": file_sha256(dataset)},
        "seed": seed,
        "outputs": {role: {"path": str(Path(p).resolve()), "sha256": file_sha256(p)}
                    for role, p in outputs.items()},
    }
    Path(path).write_text(json.dumps(doc, indent=1) + "\n", encoding="utf-8")
    return doc


def read_manifest(path) -> dict:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    if doc.get("schema") != "hilbtrim.manifest/1":
        raise DatasetParseError("not a hilbtrim manifest", path)
    return doc
