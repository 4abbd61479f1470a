import numpy as np
import pytest

from causal_al import regress
from causal_al.errors import ConfigError, DegenerateTarget, EmptyTable
from causal_al.regress import accuracy_trace, fit_forest, predict, r2, tree_predictions
from tests.conftest import make_table


def line_table(n=500, slope=3.0, seed=12, noise=0.0):
    rng = np.random.default_rng(seed)
    x = rng.uniform(-2, 2, n)
    y = slope * x + (rng.normal(scale=noise, size=n) if noise else 0.0)
    return make_table(np.column_stack([x, y]), ("x", "y"), target_names=("y",))


def test_constant_target_predicts_constant():
    table = make_table(
        np.column_stack([np.arange(50.0), np.full(50, 7.5)]), ("x", "y"),
        target_names=("y",),
    )
    model = fit_forest(table, ("x",), "y", n_trees=10, seed=0)
    assert np.all(predict(model, table) == 7.5)


def test_linear_fit_high_train_r2():
    table = line_table()
    model = fit_forest(table, ("x",), "y", n_trees=30, max_depth=8, seed=5)
    score = r2(model, table)
    # frozen for this seeded oracle
    assert score == pytest.approx(0.9999941877126498, abs=1e-9)
    assert score >= 0.95


def test_same_seed_identical_predictions():
    table = line_table(noise=0.5)
    m1 = fit_forest(table, ("x",), "y", n_trees=20, seed=3)
    m2 = fit_forest(table, ("x",), "y", n_trees=20, seed=3)
    assert np.array_equal(predict(m1, table), predict(m2, table))


def test_jobs_do_not_change_predictions():
    table = line_table(noise=0.5)
    m1 = fit_forest(table, ("x",), "y", n_trees=16, seed=3, jobs=1)
    m4 = fit_forest(table, ("x",), "y", n_trees=16, seed=3, jobs=4)
    assert np.array_equal(predict(m1, table), predict(m4, table))


def test_forest_prediction_is_mean_of_trees():
    table = line_table(noise=0.5)
    model = fit_forest(table, ("x",), "y", n_trees=7, seed=1)
    per_tree = tree_predictions(model, table)
    assert per_tree.shape == (7, table.n_rows)
    assert np.allclose(per_tree.mean(axis=0), predict(model, table))


def test_empty_feature_list():
    with pytest.raises(ConfigError):
        fit_forest(line_table(), (), "y")


def test_r2_perfect_and_mean_predictor():
    y = np.array([1.0, 2.0, 3.0, 4.0])
    assert regress.r2_of(y, y) == 1.0
    assert regress.r2_of(y, np.full(4, y.mean())) == 0.0


def test_r2_hand_computation():
    table = line_table(n=200, noise=0.3, seed=8)
    train, test = table.select_rows(range(150)), table.select_rows(range(150, 200))
    model = fit_forest(train, ("x",), "y", n_trees=25, seed=2)
    y = test.column("y")
    pred = predict(model, test)
    by_hand = 1.0 - np.sum((y - pred) ** 2) / np.sum((y - y.mean()) ** 2)
    assert r2(model, test) == pytest.approx(by_hand, abs=1e-12)


def test_r2_constant_test_target():
    table = line_table()
    model = fit_forest(table, ("x",), "y", n_trees=5, seed=0)
    flat = make_table(
        np.column_stack([np.arange(10.0), np.ones(10)]), ("x", "y"), target_names=("y",)
    )
    with pytest.raises(DegenerateTarget):
        r2(model, flat)


def test_r2_empty_test():
    table = line_table()
    model = fit_forest(table, ("x",), "y", n_trees=5, seed=0)
    with pytest.raises(EmptyTable):
        r2(model, table.select_rows([]))


def test_accuracy_trace_lengths_and_reference():
    from causal_al.active import ActiveLearningRun, IterationRecord

    table = line_table(n=120, noise=0.4, seed=4)
    # a fake 3-iteration run committing 40 rows per iteration covers the pool
    records = tuple(
        IterationRecord(iteration=i, losses=(0.0,), chosen=0, loss=0.0, size=(i + 1) * 40)
        for i in range(3)
    )
    run = ActiveLearningRun(
        mode="active", seed=0, m_per_iter=40, n_iter=3, n_subsets=1,
        selected_row_ids=table.row_ids, records=records,
    )
    test = line_table(n=60, noise=0.4, seed=99)
    trace, reference = accuracy_trace(
        run, table, test, ("x",), "y", n_trees=15, seed=1
    )
    assert len(trace) == 3
    # final snapshot is the whole pool, so it matches the all-data reference
    assert trace[-1] == pytest.approx(reference, abs=1e-12)
