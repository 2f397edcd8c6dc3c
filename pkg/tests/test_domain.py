import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from daid.domain import (AttributeSchema, Dataset, Sample, SubgroupKey, concat, partition_by_subgroup,
                         subgroup_of)
from daid.errors import EmptyDataset, SchemaError, ShapeMismatch

from conftest import GENDER_RACE, make_dataset


def test_subgroup_of_projects_attrs():
    assert subgroup_of(Sample(0, np.zeros(2), 1, (0, 2))) == SubgroupKey((0, 2))
    assert subgroup_of(Sample(1, np.zeros(2), 0, (1,))) == SubgroupKey((1,))
    a = Sample(2, np.ones(2), 0, (1, 1))
    b = Sample(3, np.zeros(2), 1, (1, 1))
    assert subgroup_of(a) == subgroup_of(b)


def test_partition_small_cases():
    schema = AttributeSchema(("g",), (("a", "b"),))
    ds = Dataset(schema, np.arange(4), np.zeros((4, 1)), [0, 1, 0, 1], [[0], [1], [1], [0]])
    parts = partition_by_subgroup(ds)
    assert sum(len(v) for v in parts.values()) == 4
    assert len(parts) == 2
    same = Dataset(schema, np.arange(3), np.zeros((3, 1)), [0, 1, 0], [[1], [1], [1]])
    assert [len(v) for v in partition_by_subgroup(same).values()] == [3]


def test_six_intersections_give_six_buckets():
    ds = make_dataset(n=300, seed=1)
    expected = {tuple(r) for r in ds.attrs.tolist()}
    assert len(expected) == 6
    parts = partition_by_subgroup(ds)
    assert len(parts) == 6
    assert list(parts) == sorted(parts)


@given(st.integers(1, 60), st.integers(0, 10_000))
def test_partition_is_exhaustive_and_disjoint(n, seed):
    ds = make_dataset(n=n, seed=seed)
    parts = partition_by_subgroup(ds)
    idx = np.concatenate(list(parts.values()))
    assert sorted(idx.tolist()) == list(range(n))
    for key, members in parts.items():
        assert all(SubgroupKey(ds.attrs[i]) == key for i in members)


def test_dataset_validation():
    with pytest.raises(SchemaError) as err:
        Dataset(GENDER_RACE, [0, 1], np.zeros((2, 2)), [0, 2], [[0, 0], [1, 1]])
    assert err.value.column == "label"
    with pytest.raises(SchemaError):
        Dataset(GENDER_RACE, [0, 1], np.zeros((2, 2)), [0, 1], [[0, 3], [1, 1]])
    with pytest.raises(ShapeMismatch):
        Dataset(GENDER_RACE, [0, 1], np.zeros((3, 2)), [0, 1], [[0, 0], [1, 1]])
    with pytest.raises(SchemaError):
        Dataset(GENDER_RACE, [0, 0], np.zeros((2, 2)), [0, 1], [[0, 0], [1, 1]])
    with pytest.raises(EmptyDataset):
        Dataset.from_samples(GENDER_RACE, [])


def test_dataset_is_read_only(small_ds):
    with pytest.raises(ValueError):
        small_ds.features[0, 0] = 1.0


def test_samples_round_trip(small_ds):
    back = Dataset.from_samples(small_ds.schema, small_ds.samples)
    assert back.equals(small_ds)


def test_subset_and_concat(small_ds):
    a = small_ds.subset(np.arange(10))
    b = small_ds.subset(np.arange(10, len(small_ds)))
    assert concat([a, b]).equals(small_ds)


def test_schema_names_and_json():
    assert GENDER_RACE.group_name(SubgroupKey((1, 2))) == "F-A"
    assert len(GENDER_RACE.all_keys()) == 6
    assert AttributeSchema.from_json(GENDER_RACE.to_json()) == GENDER_RACE
    with pytest.raises(SchemaError):
        GENDER_RACE.index_of(0, "X")
