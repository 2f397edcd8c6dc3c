import json
import math

import numpy as np
import pytest
from dataclasses import replace

from daid.causal import ace, run_intervention_experiment
from daid.errors import ConfigError
from daid.metrics import auc, evaluate
from daid.model import TrainConfig, train
from daid.synthgen import ScmConfig, couplings, describe, describe_json, directions, generate, null_config


def test_generation_is_bit_reproducible():
    a = generate(ScmConfig(n_train=300, n_test=100, seed=4))
    b = generate(ScmConfig(n_train=300, n_test=100, seed=4))
    assert all(x.equals(y) for x, y in zip(a, b))
    c = generate(ScmConfig(n_train=300, n_test=100, seed=5))
    assert not np.array_equal(a[0].features, c[0].features)


def test_train_draw_does_not_depend_on_test_size():
    a = generate(ScmConfig(n_train=300, n_test=100, seed=1))[0]
    b = generate(ScmConfig(n_train=300, n_test=900, seed=1))[0]
    assert a.equals(b)


def test_domains_and_ids():
    tr, src, sh = generate(ScmConfig(n_train=50, n_test=20, seed=0))
    assert set(tr.domains) == {"source"} and set(src.domains) == {"source"} and set(sh.domains) == {"shifted"}
    ids = np.concatenate([tr.ids, src.ids, sh.ids])
    assert len(np.unique(ids)) == 90


def test_group_frequencies_within_three_sigma():
    cfg = ScmConfig(n_train=10000, n_test=10, seed=7)
    tr = generate(cfg)[0]
    n = len(tr)
    for k, marg in enumerate(cfg.group_marginals):
        freq = np.bincount(tr.attrs[:, k], minlength=len(marg)) / n
        for p, q in zip(marg, freq):
            assert abs(p - q) < 3 * math.sqrt(p * (1 - p) / n)


def test_couplings_are_centred_and_scaled():
    c = couplings(((0.7, 0.3), (0.5, 0.3, 0.2), (0.5, 0.5)))
    assert np.allclose(c[0], [1.0, -1.0])
    assert np.allclose(c[1], [1.0, -1 / 5, -4 / 5])
    assert np.all(c[2] == 0)
    assert all(abs(v.sum()) < 1e-12 for v in c[:2])


def test_directions_are_orthonormal_and_rotated():
    cfg = ScmConfig()
    d = directions(cfg, np.random.default_rng(0))
    B = np.vstack([d.v_true, d.spurious])
    assert np.allclose(B @ B.T, np.eye(3), atol=1e-12)
    # at pi/2 the gender direction moves onto the race direction
    assert np.allclose(d.shifted[0], d.spurious[1], atol=1e-12)
    assert np.allclose(d.shifted @ d.v_true, 0, atol=1e-12)
    same = directions(replace(cfg, shift_angle=0.0), np.random.default_rng(0))
    assert np.allclose(same.shifted, same.spurious)


def test_bayes_direction_is_shift_invariant():
    cfg = null_config(n_train=10, n_test=20000, seed=2)
    _, src, sh = generate(cfg)
    v = directions(cfg, np.random.default_rng(np.random.SeedSequence(cfg.seed).spawn(4)[0])).v_true
    assert abs(auc(src.features @ v, src.labels) - auc(sh.features @ v, sh.labels)) < 0.02


def test_config_validation_and_json():
    with pytest.raises(ConfigError):
        ScmConfig(group_marginals=((0.5, 0.6),))
    with pytest.raises(ConfigError):
        ScmConfig(d_in=3)
    with pytest.raises(ConfigError):
        ScmConfig(shift_angle=4.0)
    cfg = ScmConfig(seed=9)
    assert ScmConfig.from_json(json.loads(json.dumps(cfg.to_json()))) == cfg


def test_describe():
    assert describe(null_config())["expected_effect_sign"] == "zero"
    assert describe(ScmConfig())["expected_effect_sign"] == "positive"
    assert describe(ScmConfig(shift_angle=0.0))["expected_effect_sign"] == "zero"
    assert json.loads(describe_json(ScmConfig())) == describe(ScmConfig())


def test_null_generator_has_no_shift_gap():
    gaps = []
    for seed in range(10):
        tr, src, sh = generate(null_config(seed=seed))
        res = train(tr, TrainConfig(seed=seed))
        gaps.append(auc(res.scores(src), src.labels) - auc(res.scores(sh), sh.labels))
    assert abs(np.mean(gaps)) < 0.03


def test_reweighting_beats_baseline_under_shift():
    wins = 0
    for seed in range(10):
        tr, _, sh = generate(ScmConfig(seed=seed))
        base = train(tr, TrainConfig(seed=seed))
        rw = train(tr, TrainConfig(seed=seed, reweight=True))
        wins += auc(rw.scores(sh), sh.labels) > auc(base.scores(sh), sh.labels)
    assert wins >= 9


def test_planted_shortcut_makes_baseline_unfair():
    tr, _, sh = generate(ScmConfig(seed=0))
    null_tr, _, null_sh = generate(null_config(seed=0))
    planted = evaluate(sh, train(tr, TrainConfig()).scores(sh)).skew
    null = evaluate(null_sh, train(null_tr, TrainConfig()).scores(null_sh)).skew
    assert planted > null


def test_null_ace_is_small_on_average():
    values = []
    for seed in range(10):
        tr, _, sh = generate(null_config(seed=seed))
        exp = run_intervention_experiment(tr, sh, seed=seed)
        values.append(ace(exp.outcomes, exp.strata)[0])
    assert abs(np.mean(values)) < 0.01
