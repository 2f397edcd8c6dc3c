"""Core data model: attribute schemas, samples, subgroup keys and datasets.

Datasets are stored column-wise (numpy arrays) because every numeric module
works on whole batches; ``Dataset.samples`` materializes the row view.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import EmptyDataset, SchemaError, ShapeMismatch


@dataclass(frozen=True)
class AttributeSchema:
    """Names and ordered category labels of the sensitive attributes."""

    names: tuple[str, ...]
    category_labels: tuple[tuple[str, ...], ...]

    def __post_init__(self):
        object.__setattr__(self, "names", tuple(self.names))
        object.__setattr__(self, "category_labels",
                           tuple(tuple(c) for c in self.category_labels))
        if len(self.names) < 1:
            raise SchemaError("schema needs at least one attribute")
        if len(self.names) != len(self.category_labels):
            raise SchemaError("names and category_labels differ in length")
        if len(set(self.names)) != len(self.names):
            raise SchemaError("duplicate attribute names")
        for name, cats in zip(self.names, self.category_labels):
            if len(cats) < 1:
                raise SchemaError(f"attribute {name!r} has no categories", column=f"attr_{name}")
            if len(set(cats)) != len(cats):
                raise SchemaError(f"attribute {name!r} has duplicate categories", column=f"attr_{name}")

    @property
    def K(self) -> int:
        return len(self.names)

    @property
    def cardinalities(self) -> tuple[int, ...]:
        return tuple(len(c) for c in self.category_labels)

    def label_of(self, k: int, index: int) -> str:
        return self.category_labels[k][index]

    def index_of(self, k: int, label: str) -> int:
        try:
            return self.category_labels[k].index(label)
        except ValueError:
            raise SchemaError(f"unknown category {label!r} for attribute {self.names[k]!r}",
                              column=f"attr_{self.names[k]}") from None

    def group_name(self, key: "SubgroupKey") -> str:
        return "-".join(self.label_of(k, v) for k, v in enumerate(key))

    def all_keys(self) -> list["SubgroupKey"]:
        """Every intersection in lexicographic order."""
        grids = np.indices(self.cardinalities).reshape(self.K, -1).T
        return sorted(SubgroupKey(row) for row in grids)

    def to_json(self) -> dict:
        return {"attributes": [{"name": n, "categories": list(c)}
                               for n, c in zip(self.names, self.category_labels)]}

    @classmethod
    def from_json(cls, obj: dict) -> "AttributeSchema":
        try:
            attrs = obj["attributes"]
            return cls(tuple(a["name"] for a in attrs), tuple(tuple(a["categories"]) for a in attrs))
        except (KeyError, TypeError) as exc:
            raise SchemaError(f"malformed schema JSON: {exc}") from None


class SubgroupKey(tuple):
    """K-tuple of category indices naming one demographic intersection.

    Ordering is the tuple (lexicographic) order.
    """

    def __new__(cls, values=()):
        return super().__new__(cls, (int(v) for v in values))

    @property
    def values(self) -> tuple[int, ...]:
        return tuple(self)

    def __repr__(self):
        return f"SubgroupKey{tuple.__repr__(tuple(self))}"


@dataclass(frozen=True)
class Sample:
    id: int
    features: np.ndarray
    label: int
    attrs: tuple[int, ...]
    domain: str = "source"


def subgroup_of(sample: Sample) -> SubgroupKey:
    return SubgroupKey(sample.attrs)


@dataclass(frozen=True, eq=False)
class Dataset:
    schema: AttributeSchema
    ids: np.ndarray
    features: np.ndarray
    labels: np.ndarray
    attrs: np.ndarray
    domains: tuple[str, ...] = field(default=())

    def __post_init__(self):
        ids = np.asarray(self.ids, dtype=np.int64).reshape(-1)
        X = np.asarray(self.features, dtype=np.float64)
        n = ids.shape[0]
        if X.ndim != 2 or X.shape[0] != n:
            raise ShapeMismatch(f"features must be (n, d_in) with n={n}, got {X.shape}")
        y = np.asarray(self.labels).reshape(-1)
        if y.shape[0] != n:
            raise ShapeMismatch("labels length differs from number of samples")
        if n and not np.all((y == 0) | (y == 1)):
            raise SchemaError("labels must be 0 or 1", column="label")
        A = np.asarray(self.attrs, dtype=np.int64).reshape(n, -1) if n else \
            np.zeros((0, self.schema.K), dtype=np.int64)
        if A.shape[1] != self.schema.K:
            raise ShapeMismatch(f"attrs must have K={self.schema.K} columns, got {A.shape[1]}")
        for k, card in enumerate(self.schema.cardinalities):
            if n and (A[:, k].min() < 0 or A[:, k].max() >= card):
                raise SchemaError(f"category index out of range for {self.schema.names[k]!r}",
                                  column=f"attr_{self.schema.names[k]}")
        if not np.all(np.isfinite(X)):
            raise SchemaError("features contain non-finite values")
        if len(np.unique(ids)) != n:
            raise SchemaError("duplicate sample ids", column="id")
        domains = tuple(self.domains) if len(self.domains) else ("source",) * n
        if len(domains) != n:
            raise ShapeMismatch("domains length differs from number of samples")
        for arr in (ids, X, A):
            arr.setflags(write=False)
        y = y.astype(np.int64)
        y.setflags(write=False)
        object.__setattr__(self, "ids", ids)
        object.__setattr__(self, "features", X)
        object.__setattr__(self, "labels", y)
        object.__setattr__(self, "attrs", A)
        object.__setattr__(self, "domains", domains)

    def __len__(self) -> int:
        return int(self.ids.shape[0])

    @property
    def n(self) -> int:
        return len(self)

    @property
    def d_in(self) -> int:
        return int(self.features.shape[1])

    @property
    def keys(self) -> list[SubgroupKey]:
        return [SubgroupKey(row) for row in self.attrs]

    @property
    def samples(self) -> list[Sample]:
        return [Sample(int(i), self.features[r], int(self.labels[r]), tuple(int(a) for a in self.attrs[r]),
                       self.domains[r]) for r, i in enumerate(self.ids)]

    def subset(self, index) -> "Dataset":
        index = np.asarray(index, dtype=np.int64)
        return Dataset(self.schema, self.ids[index], self.features[index], self.labels[index],
                       self.attrs[index], tuple(self.domains[i] for i in index))

    def group_ids(self) -> tuple[list[SubgroupKey], np.ndarray]:
        """Distinct keys (sorted) and, per sample, the position of its key in that list."""
        if len(self) == 0:
            return [], np.zeros(0, dtype=np.int64)
        uniq, inv = np.unique(self.attrs, axis=0, return_inverse=True)
        return [SubgroupKey(row) for row in uniq], inv.reshape(-1).astype(np.int64)

    @classmethod
    def from_samples(cls, schema: AttributeSchema, samples: Sequence[Sample]) -> "Dataset":
        if not samples:
            raise EmptyDataset("no samples")
        return cls(schema,
                   np.array([s.id for s in samples]),
                   np.stack([np.asarray(s.features, dtype=np.float64) for s in samples]),
                   np.array([s.label for s in samples]),
                   np.array([s.attrs for s in samples]),
                   tuple(s.domain for s in samples))

    def equals(self, other: "Dataset") -> bool:
        return (self.schema == other.schema
                and np.array_equal(self.ids, other.ids)
                and np.array_equal(self.features, other.features)
                and np.array_equal(self.labels, other.labels)
                and np.array_equal(self.attrs, other.attrs)
                and self.domains == other.domains)


def partition_by_subgroup(ds: Dataset) -> dict[SubgroupKey, np.ndarray]:
    """Sample indices per subgroup, keys in lexicographic order."""
    keys, gid = ds.group_ids()
    order = np.argsort(gid, kind="stable")
    bounds = np.searchsorted(gid[order], np.arange(len(keys) + 1))
    return {key: order[bounds[g]:bounds[g + 1]] for g, key in enumerate(keys)}


def concat(datasets: Sequence[Dataset]) -> Dataset:
    schema = datasets[0].schema
    if any(d.schema != schema for d in datasets):
        raise SchemaError("cannot concatenate datasets with different schemas")
    return Dataset(schema,
                   np.concatenate([d.ids for d in datasets]),
                   np.concatenate([d.features for d in datasets]),
                   np.concatenate([d.labels for d in datasets]),
                   np.concatenate([d.attrs for d in datasets]),
                   tuple(x for d in datasets for x in d.domains))
