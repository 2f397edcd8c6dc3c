import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from daid.causal import (AceReport, Dag, Stratum, ace, backdoor_adjust, backdoor_criterion, binarize_fairness,
                         bootstrap_p_value, d_separated, do_outcome, fairness_dag, parse_dag, strata_from_test,
                         stratified_bootstrap)
from daid.causal.experiment import run_intervention_experiment
from daid.domain import SubgroupKey, partition_by_subgroup
from daid.errors import MissingCell, ParseError, UnknownNode, WeightSumError
from daid.metrics import auc
from daid.model import TrainConfig

from conftest import make_dataset
from oracles import all_queries, backdoor_oracle, dsep_oracle, random_dag


def test_dag_validation():
    with pytest.raises(ValueError):
        Dag(["a", "b"], [("a", "b"), ("b", "a")])
    with pytest.raises(ValueError):
        Dag(["a"], [("a", "a")])
    with pytest.raises(ValueError):
        Dag(["a", "b"], [("a", "b"), ("a", "b")])
    g = Dag(["a", "b", "c"], [("a", "b"), ("b", "c")])
    assert g.descendants("a") == {"b", "c"}
    assert g.ancestors({"c"}) == {"a", "b", "c"}
    with pytest.raises(UnknownNode):
        g.children("z")


def test_parse_dag_round_trip_and_errors():
    g = fairness_dag()
    assert parse_dag(g.to_text()) == g
    with pytest.raises(ParseError) as err:
        parse_dag("node A\nedge A => B\n")
    assert err.value.line == 2


def test_fairness_graph_structure():
    g = fairness_dag()
    assert set(g.nodes) == {"F", "A", "DD", "MC"}
    assert set(g.edges) == {("DD", "F"), ("DD", "A"), ("MC", "F"), ("MC", "A"), ("F", "A")}


def test_d_separation_examples():
    g = Dag(["x", "y"], [("x", "y")])
    assert not d_separated(g, "x", "y")
    c = Dag(["x", "y", "c"], [("x", "c"), ("y", "c")])
    assert d_separated(c, "x", "y", set())
    assert not d_separated(c, "x", "y", {"c"})
    fig = fairness_dag().without_outgoing("F")
    assert d_separated(fig, "F", "A", {"DD", "MC"})


def test_d_separation_conditioning_on_collider_descendant():
    g = Dag(["x", "y", "c", "d"], [("x", "c"), ("y", "c"), ("c", "d")])
    assert d_separated(g, "x", "y", set())
    assert not d_separated(g, "x", "y", {"d"})


def test_d_separation_agrees_with_path_oracle():
    rng = np.random.default_rng(20)
    for _ in range(40):
        nodes, edges = random_dag(rng)
        g = Dag(nodes, edges)
        for x, y, z in all_queries(nodes):
            assert d_separated(g, x, y, z) == dsep_oracle(nodes, edges, x, y, z), (edges, x, y, z)


def test_backdoor_examples():
    fig = fairness_dag()
    assert backdoor_criterion(fig, "F", "A", {"DD", "MC"})
    v = backdoor_criterion(fig, "F", "A", {"DD"})
    assert not v and v.failed_condition == 2 and "MC" in v.witness
    chain = Dag(["x", "m", "y"], [("x", "m"), ("m", "y")])
    v = backdoor_criterion(chain, "x", "y", {"m"})
    assert not v and v.failed_condition == 1 and v.witness == "m"
    fork = Dag(["x", "u", "y"], [("u", "x"), ("u", "y")])
    v = backdoor_criterion(fork, "x", "y", set())
    assert not v and v.failed_condition == 2 and v.witness == "x <- u -> y"


def test_backdoor_agrees_with_oracle():
    rng = np.random.default_rng(21)
    for _ in range(40):
        nodes, edges = random_dag(rng)
        g = Dag(nodes, edges)
        for x, y, z in all_queries(nodes):
            assert bool(backdoor_criterion(g, x, y, z)) == backdoor_oracle(nodes, edges, x, y, z)


def _strata(weights):
    return [Stratum(SubgroupKey((i,)), "m", w) for i, w in enumerate(weights)]


def test_adjustment_examples():
    strata = _strata([0.6, 0.4])
    out = {(0, s.key): v for s, v in zip(strata, (0.8, 0.9))}
    out.update({(1, s.key): v for s, v in zip(strata, (0.82, 0.95))})
    assert abs(backdoor_adjust(out, strata, 0) - 0.84) <= 1e-12
    a, mu0 = ace(out, strata)
    assert abs(a - (0.6 * 0.02 + 0.4 * 0.05)) <= 1e-12
    assert abs(a - 0.032) <= 1e-12
    const = {(f, s.key): 0.7 for f in (0, 1) for s in strata}
    assert backdoor_adjust(const, strata, 1) == pytest.approx(0.7, abs=1e-15)
    assert ace(const, strata)[0] == pytest.approx(0.0, abs=1e-15)
    point = _strata([1.0, 0.0])
    assert backdoor_adjust(out, point, 1) == 0.82


def test_adjustment_errors():
    strata = _strata([0.5, 0.4])
    with pytest.raises(WeightSumError):
        backdoor_adjust({}, strata, 0)
    with pytest.raises(MissingCell):
        backdoor_adjust({(0, _strata([1.0])[0].key): 0.5}, _strata([0.5, 0.5]), 0)


outcome_tables = st.integers(1, 8).flatmap(lambda k: st.tuples(
    st.lists(st.integers(1, 100), min_size=k, max_size=k),
    st.lists(st.floats(0.5, 1.0), min_size=2 * k, max_size=2 * k)))


def _table(raw):
    counts, vals = raw
    total = sum(counts)
    weights = [c / total for c in counts]
    weights[-1] = 1.0 - sum(weights[:-1])
    strata = _strata(weights)
    out = {}
    for i, s in enumerate(strata):
        out[(0, s.key)] = vals[2 * i]
        out[(1, s.key)] = vals[2 * i + 1]
    return out, strata


@given(outcome_tables)
def test_linear_do_form_is_exact(raw):
    out, strata = _table(raw)
    a, mu0 = ace(out, strata)
    for f in (0, 1):
        assert backdoor_adjust(out, strata, f) - do_outcome(mu0, a, f) == 0.0


@given(outcome_tables, st.floats(0.5, 2.0), st.floats(-0.25, 0.25))
def test_ace_is_linear_in_outcomes(raw, c, shift):
    out, strata = _table(raw)
    a = ace(out, strata)[0]
    scaled = ace({k: c * v for k, v in out.items()}, strata)[0]
    shifted = ace({k: v + shift for k, v in out.items()}, strata)[0]
    assert scaled == pytest.approx(c * a, abs=1e-12)
    assert shifted == pytest.approx(a, abs=1e-12)


def test_binarize_fairness():
    assert binarize_fairness(0.0, 0.1) == 1
    assert binarize_fairness(0.5, 0.5) == 0
    assert binarize_fairness(0.289, 0.5) == 1
    assert binarize_fairness(-0.2, 0.5) == 1


def test_p_value_convention():
    assert bootstrap_p_value(np.ones(1000)) == 1 / 1000
    assert bootstrap_p_value(np.array([-1.0, 1.0, 2.0, 3.0])) == 0.5
    assert bootstrap_p_value(np.zeros(10)) == 1.0


def _score_closure(test, scores):
    y = test.labels

    def fn(groups):
        out = {}
        for dd, idx in groups.items():
            for f in (0, 1):
                out[(f, (dd, "m"))] = auc(scores[f][idx], y[idx])
        return out
    return fn


def _bootstrap_fixture():
    test = make_dataset(n=120, seed=4)
    rng = np.random.default_rng(0)
    scores = {0: rng.random(120), 1: rng.random(120) + 0.3 * test.labels}
    strata, _ = strata_from_test(test, ["m"])
    return test, scores, strata


def test_bootstrap_single_replicate():
    test, scores, strata = _bootstrap_fixture()
    rep = stratified_bootstrap(_score_closure(test, scores), test, strata, B=1, alpha=0.05, seed=3)
    assert rep.ci_low == rep.ci_high == rep.replicates[0]


def test_bootstrap_is_deterministic_and_stratified():
    test, scores, strata = _bootstrap_fixture()
    seen = []

    def spy(groups):
        seen.append({dd: len(idx) for dd, idx in groups.items()})
        return _score_closure(test, scores)(groups)

    a = stratified_bootstrap(spy, test, strata, B=50, seed=9)
    b = stratified_bootstrap(_score_closure(test, scores), test, strata, B=50, seed=9)
    assert np.array_equal(a.replicates, b.replicates)
    assert (a.ace, a.ci_low, a.ci_high, a.p_value) == (b.ace, b.ci_low, b.ci_high, b.p_value)
    sizes = {dd: len(idx) for dd, idx in partition_by_subgroup(test).items()}
    assert all(s == {dd: sizes[dd] for dd in s} for s in seen)


def test_bootstrap_replicate_streams_are_independent_of_order():
    # replicate b only depends on (seed, b): computing a prefix gives the same values
    test, scores, strata = _bootstrap_fixture()
    fn = _score_closure(test, scores)
    long = stratified_bootstrap(fn, test, strata, B=40, seed=1)
    short = stratified_bootstrap(fn, test, strata, B=10, seed=1)
    assert np.array_equal(long.replicates[:10], short.replicates)


def test_report_json_and_summary():
    test, scores, strata = _bootstrap_fixture()
    rep = stratified_bootstrap(_score_closure(test, scores), test, strata, B=20, seed=0)
    js = rep.to_json(test.schema)
    assert js["B"] == 20 and len(js["per_stratum"]) == len(strata)
    assert "95% CI" in rep.summary()
    assert isinstance(rep, AceReport)


def test_strata_weights_and_degenerate_drop(small_ds):
    strata, dropped = strata_from_test(small_ds, ["small", "large"])
    assert abs(sum(s.weight for s in strata) - 1.0) < 1e-12
    ds = small_ds.subset(np.flatnonzero(~((small_ds.attrs[:, 0] == 0) & (small_ds.attrs[:, 1] == 0)
                                          & (small_ds.labels == 1))))
    strata, dropped = strata_from_test(ds, ["small"])
    assert dropped == [SubgroupKey((0, 0))]
    assert abs(sum(s.weight for s in strata) - 1.0) < 1e-12


def test_intervention_grid_is_complete(small_data):
    train_ds, _, test = small_data
    exp = run_intervention_experiment(train_ds, test, ("small", "large"), seed=0, base=TrainConfig(epochs=1))
    n_strata = len(partition_by_subgroup(test)) - len(exp.dropped)
    assert len(exp.outcomes) == 2 * 2 * n_strata
    assert set(exp.scores) == {(f, mc) for f in (0, 1) for mc in ("small", "large")}
