"""Dataset CSV, checkpoint, history and result-JSON persistence.

Dataset files use the header ``id,label,domain,attr_<name>...,f_0..f_{d-1}``
with attribute values written as category labels. The attribute names and
the category order live in a sidecar ``<path>.schema.json``.
"""
from __future__ import annotations

import csv
import json
import os
from pathlib import Path

import numpy as np

from . import SPEC_VERSION
from .domain import AttributeSchema, Dataset
from .errors import EmptyDataset, ParseError, SchemaError
from .model.network import ModelParams
from .rebalance import PropensityTable, SubgroupMoments

HISTORY_FIELDS = ("epoch", "cls", "attr", "ortho", "total", "train_auc")


def schema_path(path) -> Path:
    return Path(str(path) + ".schema.json")


def header_for(schema: AttributeSchema, d_in: int) -> list[str]:
    return (["id", "label", "domain"] + [f"attr_{n}" for n in schema.names]
            + [f"f_{j}" for j in range(d_in)])


def save_dataset(ds: Dataset, path) -> None:
    """Write the CSV and its schema sidecar. Floats use repr, so reload is exact."""
    path = Path(path)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header_for(ds.schema, ds.d_in))
        for r in range(len(ds)):
            attrs = [ds.schema.label_of(k, int(a)) for k, a in enumerate(ds.attrs[r])]
            w.writerow([int(ds.ids[r]), int(ds.labels[r]), ds.domains[r], *attrs,
                        *(repr(float(v)) for v in ds.features[r])])
    write_json(schema_path(path), ds.schema.to_json(), versioned=False)


def load_schema(path) -> AttributeSchema:
    sp = schema_path(path)
    try:
        obj = json.loads(sp.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise SchemaError(f"missing schema sidecar {sp}") from None
    except json.JSONDecodeError as exc:
        raise ParseError(f"{sp}: {exc.msg}", line=exc.lineno) from None
    return AttributeSchema.from_json(obj)


def _check_header(header: list[str], schema: AttributeSchema) -> int:
    fixed = ["id", "label", "domain"] + [f"attr_{n}" for n in schema.names]
    for pos, col in enumerate(fixed):
        if pos >= len(header) or header[pos] != col:
            raise SchemaError(f"expected column {col!r} at position {pos}", column=col)
    feats = header[len(fixed):]
    if not feats:
        raise SchemaError("no feature columns", column="f_0")
    for j, col in enumerate(feats):
        if col != f"f_{j}":
            raise SchemaError(f"expected column 'f_{j}', found {col!r}", column=f"f_{j}")
    return len(feats)


def load_dataset(path, schema: AttributeSchema | None = None) -> Dataset:
    """Parse a dataset CSV; row order is preserved.

    Raises ParseError (with a 1-based line number) for malformed rows and
    SchemaError naming the column for header or category problems.
    """
    path = Path(path)
    schema = schema or load_schema(path)
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise EmptyDataset(f"{path} is empty") from None
        d = _check_header(header, schema)
        width = 3 + schema.K + d
        ids, labels, domains, attrs, feats = [], [], [], [], []
        for row in reader:
            line = reader.line_num
            if not row:
                continue
            if len(row) != width:
                raise ParseError(f"expected {width} fields, found {len(row)}", line=line)
            try:
                ids.append(int(row[0]))
            except ValueError:
                raise ParseError(f"id {row[0]!r} is not an integer", line=line) from None
            if row[1] not in ("0", "1"):
                raise ParseError(f"label {row[1]!r} is not 0 or 1", line=line)
            labels.append(int(row[1]))
            domains.append(row[2])
            try:
                attrs.append([schema.index_of(k, row[3 + k]) for k in range(schema.K)])
            except SchemaError as exc:
                raise ParseError(f"{exc} (column {exc.column})", line=line) from None
            try:
                feats.append([float(v) for v in row[3 + schema.K:]])
            except ValueError as exc:
                raise ParseError(f"bad feature value: {exc}", line=line) from None
    if not ids:
        raise EmptyDataset(f"{path} has no rows")
    X = np.array(feats, dtype=np.float64)
    if not np.all(np.isfinite(X)):
        bad = int(np.argwhere(~np.isfinite(X))[0][0])
        raise ParseError("non-finite feature value", line=bad + 2)
    return Dataset(schema, np.array(ids), X, np.array(labels), np.array(attrs), tuple(domains))


def write_json(path, obj: dict, versioned: bool = True) -> None:
    if versioned:
        obj = {"spec_version": SPEC_VERSION, **obj}
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def read_json(path) -> dict:
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: {exc.msg}", line=exc.lineno) from None


def save_checkpoint(path, params: ModelParams, config: dict, moments: SubgroupMoments | None = None,
                    propensity: PropensityTable | None = None) -> None:
    write_json(path, {
        "params": params.to_json(),
        "config": config,
        "moments": moments.to_json() if moments is not None else None,
        "propensity": propensity.to_json() if propensity is not None else None,
    })


def load_checkpoint(path) -> tuple[ModelParams, dict, SubgroupMoments | None]:
    obj = read_json(path)
    try:
        params = ModelParams.from_json(obj["params"])
        moments = SubgroupMoments.from_json(obj["moments"]) if obj.get("moments") else None
        return params, obj["config"], moments
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaError(f"malformed checkpoint {path}: {exc}") from None


def write_history(path, rows: list[dict]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=HISTORY_FIELDS, lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: repr(r[k]) if isinstance(r[k], float) else r[k] for k in HISTORY_FIELDS})


def write_rows(path, fieldnames, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=list(fieldnames), lineterminator="\n")
        w.writeheader()
        w.writerows(rows)


class ArtifactSet:
    """Tracks files a command writes so they can be removed if it fails."""

    def __init__(self, out_dir):
        self.out_dir = Path(out_dir)
        self.paths: list[Path] = []
        self._created_dir = False

    def __enter__(self):
        if not self.out_dir.exists():
            self.out_dir.mkdir(parents=True)
            self._created_dir = True
        return self

    def path(self, name) -> Path:
        p = self.out_dir / name
        self.paths.append(p)
        return p

    def __exit__(self, exc_type, exc, tb):
        if exc_type is None:
            return False
        for p in self.paths:
            try:
                os.remove(p)
            except FileNotFoundError:
                pass
        if self._created_dir:
            try:
                self.out_dir.rmdir()
            except OSError:
                pass
        return False
