import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from daid import io
from daid.config import AceConfig, ExperimentConfig, RunRecord, parse_config
from daid.domain import partition_by_subgroup
from daid.errors import ConfigError, EmptyDataset, ParseError, SchemaError
from daid.model import TrainConfig, init_params, train
from daid.rebalance import fit_moments

from conftest import make_dataset


def test_dataset_round_trip_is_exact(tmp_path, small_data):
    for ds in small_data:
        p = tmp_path / f"{ds.domains[0]}.csv"
        io.save_dataset(ds, p)
        assert io.load_dataset(p).equals(ds)


def test_header_layout(tmp_path, small_ds):
    p = tmp_path / "d.csv"
    io.save_dataset(small_ds, p)
    header = p.read_text().splitlines()[0]
    assert header == "id,label,domain,attr_gender,attr_race,f_0,f_1,f_2,f_3,f_4"
    assert json.loads(io.schema_path(p).read_text())["attributes"][1]["categories"] == ["W", "B", "A"]


def test_six_group_file_has_six_keys(tmp_path, small_data):
    p = tmp_path / "train.csv"
    io.save_dataset(small_data[0], p)
    assert len(partition_by_subgroup(io.load_dataset(p))) == 6


def _write(tmp_path, text, schema_from):
    p = tmp_path / "bad.csv"
    p.write_text(text)
    io.schema_path(p).write_text(io.schema_path(schema_from).read_text())
    return p


@pytest.fixture
def saved(tmp_path, small_ds):
    p = tmp_path / "ok.csv"
    io.save_dataset(small_ds, p)
    return p


def test_missing_feature_column(tmp_path, saved):
    lines = saved.read_text().splitlines()
    lines[0] = lines[0].replace("f_2", "f_x")
    with pytest.raises(SchemaError) as err:
        io.load_dataset(_write(tmp_path, "\n".join(lines), saved))
    assert err.value.column == "f_2"
    lines = saved.read_text().splitlines()
    lines[0] = lines[0].replace("attr_race", "attr_age")
    with pytest.raises(SchemaError) as err:
        io.load_dataset(_write(tmp_path, "\n".join(lines), saved))
    assert err.value.column == "attr_race"


@pytest.mark.parametrize("mutate", [
    lambda r: r[:5] + ["oops"] + r[6:],
    lambda r: r[:1] + ["2"] + r[2:],
    lambda r: r[:3] + ["X"] + r[4:],
    lambda r: r[:-1],
    lambda r: r[:5] + ["nan"] + r[6:],
])
def test_parse_errors_carry_line_numbers(tmp_path, saved, mutate):
    lines = saved.read_text().splitlines()
    lines[3] = ",".join(mutate(lines[3].split(",")))
    with pytest.raises(ParseError) as err:
        io.load_dataset(_write(tmp_path, "\n".join(lines), saved))
    assert err.value.line == 4


def test_empty_and_missing_sidecar(tmp_path, saved):
    with pytest.raises(EmptyDataset):
        io.load_dataset(_write(tmp_path, saved.read_text().splitlines()[0] + "\n", saved))
    lone = tmp_path / "lone.csv"
    lone.write_text(saved.read_text())
    with pytest.raises(SchemaError):
        io.load_dataset(lone)


def test_checkpoint_round_trip(tmp_path, small_data):
    res = train(small_data[0], TrainConfig(epochs=1, normalize=True))
    p = tmp_path / "ck.json"
    io.save_checkpoint(p, res.params, {"k": 1}, res.moments, res.propensity)
    params, cfg, moments = io.load_checkpoint(p)
    assert cfg == {"k": 1}
    assert all(np.array_equal(a, b) for a, b in zip(params.arrays(), res.params.arrays()))
    assert np.array_equal(io.read_json(p)["spec_version"], "1")
    from daid.model import predict
    assert np.array_equal(predict(params, small_data[1], moments), res.scores(small_data[1]))


def test_history_csv(tmp_path, small_data):
    res = train(small_data[0], TrainConfig(epochs=2))
    p = tmp_path / "h.csv"
    io.write_history(p, res.history_rows())
    lines = p.read_text().splitlines()
    assert lines[0] == "epoch,cls,attr,ortho,total,train_auc"
    assert float(lines[2].split(",")[1]) == res.history[1].cls


def test_artifact_set_removes_partial_outputs(tmp_path):
    out = tmp_path / "run"
    with pytest.raises(RuntimeError):
        with io.ArtifactSet(out) as a:
            a.path("x.json").write_text("{}")
            raise RuntimeError("boom")
    assert not out.exists()


def test_config_defaults():
    cfg = ExperimentConfig()
    assert cfg.train.lambda_attr == 0.7 and cfg.train.lambda_ortho == 0.2
    assert cfg.train.lr == 1e-3 and cfg.train.weight_decay == 4e-3 and cfg.train.batch_size == 64
    assert cfg.ace.B == 1000 and cfg.ace.alpha == 0.05
    assert cfg.metric.threshold == 0.5 and cfg.metric.rate_kind == "fpr"


def test_config_round_trip_and_overrides():
    text = "run.seed = 7\ntrain.reweight = true\ntrain.hidden = 8, 4\nscm.group_marginals = 0.5, 0.5; 1.0\n" \
           "scm.category_labels = a, b; c\nscm.attribute_names = g, h\nace.mc_grid = small\n"
    cfg = parse_config(text)
    assert cfg.seed == 7 and cfg.train.reweight and cfg.train.hidden == (8, 4)
    assert cfg.scm.group_marginals == ((0.5, 0.5), (1.0,))
    assert cfg.train_config.seed == 7 and cfg.scm_config.seed == 7
    assert parse_config(cfg.to_text()) == cfg


@given(st.floats(1e-6, 1.0), st.floats(0.0, 5.0), st.integers(0, 2 ** 32), st.booleans())
def test_config_text_round_trip(lr, lam, seed, flag):
    cfg = ExperimentConfig(seed=seed, train=TrainConfig(lr=lr, lambda_attr=lam, attr=flag))
    assert ExperimentConfig.from_text(cfg.to_text()) == cfg


@pytest.mark.parametrize("text", [
    "train.nope = 1", "bogus.lr = 1", "train.seed = 3", "train.lr = -1", "train.lr = abc",
    "train.reweight = yes", "ace.alpha = 1.5", "ace.B = 0", "metric.rate_kind = tpr",
    "scm.n_train = 0", "train.lr = 1\ntrain.lr = 2", "run.seed = -1",
])
def test_config_rejects_bad_input(text):
    with pytest.raises(ConfigError):
        parse_config(text)


def test_config_syntax_error_has_line():
    with pytest.raises(ParseError) as err:
        parse_config("# comment\ntrain.lr 0.1\n")
    assert err.value.line == 2


def test_run_record_reparses_config():
    cfg = ExperimentConfig(seed=3, ace=AceConfig(B=10))
    rec = RunRecord("train", cfg.to_text(), 3)
    back = RunRecord.from_json(json.loads(json.dumps(rec.to_json())))
    assert back.experiment_config == cfg
    assert rec.to_json()["spec_version"] == "1"
