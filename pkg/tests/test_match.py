import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from causal_al import match
from causal_al.dataio import FingerprintTable
from causal_al.errors import (
    ConfigError,
    DisjointFeatures,
    InsufficientData,
    MissingColumn,
    SchemaError,
)
from causal_al.intervene import InterventionPlan
from causal_al.match import (
    NeighborResult,
    intervention_report,
    nearest_in_reference,
    pca_project,
    tanimoto,
)
from tests.conftest import make_table


def brute_force_knn(zq, zr, k):
    """Independent oracle: per-query scan with pure-python distance math."""
    out = []
    for q in zq:
        dists = []
        for j, r in enumerate(zr):
            d = math.sqrt(sum((a - b) ** 2 for a, b in zip(q, r)))
            dists.append((d, j))
        dists.sort()
        out.append(dists[:k])
    return out


# ---------------------------------------------------------------------------
# k-NN
# ---------------------------------------------------------------------------


def test_exact_copy_matches_at_distance_zero():
    rng = np.random.default_rng(0)
    ref_vals = rng.normal(size=(10, 3))
    queries = make_table(ref_vals[[4, 7]], ("a", "b", "c"), prefix="q")
    reference = make_table(ref_vals, ("a", "b", "c"), prefix="ref")
    results = nearest_in_reference(queries, reference, k=1)
    assert results[0].neighbor_ids == ("ref4",)
    assert results[0].distances[0] == 0.0
    assert results[1].neighbor_ids == ("ref7",)


def test_knn_agrees_with_pure_python_oracle():
    rng = np.random.default_rng(7)
    q = make_table(rng.normal(size=(5, 4)), ("a", "b", "c", "d"), prefix="q")
    r = make_table(rng.normal(size=(20, 4)), ("a", "b", "c", "d"), prefix="ref")
    results = nearest_in_reference(q, r, k=3)
    # mirror the implementation's normalization, then brute-force
    mean = q.values.mean(axis=0)
    std = q.values.std(axis=0, ddof=1)
    zq = (q.values - mean) / std
    zr = (r.values - mean) / std
    expected = brute_force_knn(zq.tolist(), zr.tolist(), 3)
    for res, exp in zip(results, expected):
        assert res.neighbor_ids == tuple(f"ref{j}" for _, j in exp)
        for got, (want, _) in zip(res.distances, exp):
            assert got == pytest.approx(want, abs=1e-12)


def test_k_clamped_to_reference_size():
    rng = np.random.default_rng(1)
    q = make_table(rng.normal(size=(2, 2)), ("a", "b"), prefix="q")
    r = make_table(rng.normal(size=(4, 2)), ("a", "b"), prefix="ref")
    results = nearest_in_reference(q, r, k=10)
    assert all(len(res.neighbor_ids) == 4 for res in results)
    for res in results:
        assert list(res.distances) == sorted(res.distances)


def test_k_must_be_positive():
    t = make_table([[1.0]], ("a",))
    with pytest.raises(ConfigError):
        nearest_in_reference(t, t, k=0)


def test_disjoint_features_rejected():
    q = make_table([[1.0], [2.0]], ("a",), prefix="q")
    r = make_table([[1.0], [2.0]], ("b",), prefix="ref")
    with pytest.raises(DisjointFeatures):
        nearest_in_reference(q, r, k=1)


def test_normalization_uses_intervened_population():
    # spread in `a` is 100x smaller among the queries than in the
    # reference pool, so query-population stats stretch that axis hard:
    # the flat-in-a reference wins, while pooled stats prefer flat-in-b
    q = make_table([[0.0, 0.0], [0.1, 10.0]], ("a", "b"), prefix="q")
    r = make_table([[0.1, 0.0], [0.0, 9.0], [50.0, 0.0], [-50.0, 5.0]], ("a", "b"), prefix="ref")
    by_query = nearest_in_reference(q, r, k=1)
    by_pooled = nearest_in_reference(q, r, k=1, pooled_stats=True)
    assert by_query[0].neighbor_ids == ("ref1",)
    assert by_pooled[0].neighbor_ids == ("ref0",)


def test_ref_targets_attached():
    q = make_table([[1.0, 5.0], [8.0, 0.0]], ("a", "y"), target_names=("y",), prefix="q")
    r = make_table([[1.0, 2.5], [9.0, 7.5]], ("a", "y"), target_names=("y",), prefix="ref")
    res = nearest_in_reference(q, r, k=2, features=("a",), ref_target="y")[0]
    assert res.ref_targets == (2.5, 7.5)


def test_constant_intervened_column_takes_reference_scale():
    # a clamped single-lever batch can leave a column constant; matching
    # must stay defined, scaled by the reference spread instead
    q = make_table([[5.0, 0.0], [5.0, 1.0]], ("a", "b"), prefix="q")
    r = make_table([[5.0, 0.5], [7.0, 0.5], [3.0, 0.2]], ("a", "b"), prefix="ref")
    res = nearest_in_reference(q, r, k=3)
    assert res[0].neighbor_ids[0] == "ref0"  # same `a`, nearest `b`
    assert all(np.isfinite(d) for nr in res for d in nr.distances)


def test_tie_breaks_toward_earlier_reference_row():
    q = make_table([[0.0, 0.0], [4.0, 4.0]], ("a", "b"), prefix="q")
    dup = make_table([[1.0, 1.0], [1.0, 1.0], [2.0, 3.0]], ("a", "b"), prefix="ref")
    res = nearest_in_reference(q, dup, k=2)[0]
    assert res.neighbor_ids == ("ref0", "ref1")
    assert res.distances[0] == res.distances[1]


# ---------------------------------------------------------------------------
# tanimoto
# ---------------------------------------------------------------------------


def test_tanimoto_hand_cases():
    assert tanimoto(np.array([1, 1, 0, 1]), np.array([1, 1, 0, 1])) == 1.0
    assert tanimoto(np.array([1, 1, 0, 0]), np.array([0, 0, 1, 1])) == 0.0
    assert tanimoto(np.array([1, 1, 0, 0]), np.array([1, 0, 1, 0])) == pytest.approx(1 / 3)
    assert tanimoto(np.zeros(8), np.zeros(8)) == 1.0


def test_tanimoto_width_mismatch():
    with pytest.raises(SchemaError):
        tanimoto(np.zeros(8), np.zeros(16))


@settings(max_examples=100, deadline=None)
@given(st.lists(st.booleans(), min_size=1, max_size=64), st.data())
def test_tanimoto_symmetry_and_identity(bits_a, data):
    a = np.array(bits_a, dtype=np.uint8)
    b = np.array(data.draw(
        st.lists(st.booleans(), min_size=len(bits_a), max_size=len(bits_a))
    ), dtype=np.uint8)
    assert tanimoto(a, b) == tanimoto(b, a)
    assert 0.0 <= tanimoto(a, b) <= 1.0
    if a.any():
        assert tanimoto(a, a) == 1.0


# ---------------------------------------------------------------------------
# PCA
# ---------------------------------------------------------------------------


def test_pca_line_data():
    t = np.linspace(-1, 1, 40)
    data = np.column_stack([3.0 * t, 4.0 * t])
    proj = pca_project(data)
    direction = proj.components[0]
    assert abs(direction @ np.array([0.6, 0.8])) == pytest.approx(1.0, abs=1e-9)
    assert proj.explained_variances[1] == pytest.approx(0.0, abs=1e-12)


def test_pca_reconstruction_error_equals_discarded_variance():
    rng = np.random.default_rng(3)
    x = rng.normal(size=(100, 6))
    proj = pca_project(x, n_components=2)
    xc = x - x.mean(axis=0)
    recon = proj.coordinates @ proj.components
    resid = xc - recon
    discarded = np.trace(xc.T @ xc / 99) - proj.explained_variances.sum()
    assert np.sum(resid**2) / 99 == pytest.approx(discarded, abs=1e-8)


def test_pca_matches_independent_eigendecomposition():
    rng = np.random.default_rng(42)
    x = rng.normal(size=(100, 10)) @ np.diag(np.linspace(3, 0.5, 10))
    proj = pca_project(x, n_components=2)
    # independent oracle: full eigendecomposition of the covariance
    xc = x - x.mean(axis=0)
    vals, vecs = np.linalg.eig(np.cov(x, rowvar=False))
    order = np.argsort(vals.real)[::-1]
    for i in range(2):
        v = vecs[:, order[i]].real
        coords = xc @ v
        agreement = abs(np.dot(coords, proj.coordinates[:, i])) / (
            np.linalg.norm(coords) * np.linalg.norm(proj.coordinates[:, i])
        )
        assert agreement == pytest.approx(1.0, abs=1e-8)  # equal up to sign
        assert proj.explained_variances[i] == pytest.approx(vals.real[order[i]], abs=1e-8)


def test_pca_row_order_invariance_and_orthonormality():
    rng = np.random.default_rng(5)
    x = rng.normal(size=(50, 4))
    proj1 = pca_project(x)
    perm = rng.permutation(50)
    proj2 = pca_project(x[perm])
    assert np.allclose(proj1.components, proj2.components, atol=1e-10)
    assert np.allclose(proj1.coordinates[perm], proj2.coordinates, atol=1e-10)
    gram = proj1.components @ proj1.components.T
    assert np.allclose(gram, np.eye(2), atol=1e-9)
    assert proj1.explained_variances[0] >= proj1.explained_variances[1]


def test_pca_fingerprints_as_reals():
    rng = np.random.default_rng(6)
    fps = FingerprintTable(
        tuple(f"m{i}" for i in range(30)),
        (rng.random((30, 16)) < 0.4).astype(np.uint8),
    )
    proj = pca_project(fps)
    assert proj.coordinates.shape == (30, 2)


def test_pca_too_few_rows():
    with pytest.raises(InsufficientData):
        pca_project(np.ones((1, 3)))


# ---------------------------------------------------------------------------
# report
# ---------------------------------------------------------------------------


def plan(rid, before, after, goal=3.0):
    return InterventionPlan(
        row_id=rid, chosen_feature="x", original_value=0.0,
        intervened_value=after - before, predicted_target_before=before,
        predicted_target_after=after, target_goal=goal, effect=1.0,
    )


def test_report_identity_scenario():
    # reference = original dataset and zero-delta plans: matched values are
    # the originals; success count = molecules already above threshold
    plans = [plan("a", 2.0, 2.0), plan("b", 3.5, 3.5)]
    neighbors = [
        NeighborResult("a", ("a",), (0.0,), (2.0,)),
        NeighborResult("b", ("b",), (0.0,), (3.5,)),
    ]
    rep = intervention_report(plans, neighbors, {"a": 2.0, "b": 3.5}, threshold=3.0)
    assert rep.matched_targets == (2.0, 3.5)
    assert rep.above_threshold_ids == ("b",)
    assert rep.above_threshold_count == 1


def test_report_three_molecule_hand_tally():
    plans = [plan("a", 1.0, 3.2), plan("b", 0.5, 3.1), plan("c", 2.0, 3.0)]
    neighbors = [
        NeighborResult("a", ("r1", "r2"), (0.1, 0.4)),
        NeighborResult("b", ("r2",), (0.2,)),
        NeighborResult("c", ("r3",), (0.3,)),
    ]
    ref_targets = {"r1": 4.0, "r2": 3.5, "r3": 1.0}
    rep = intervention_report(plans, neighbors, ref_targets, threshold=3.0)
    assert rep.original_targets == (1.0, 0.5, 2.0)
    assert rep.intervened_targets == (3.2, 3.1, 3.0)
    assert rep.matched_targets == (4.0, 3.5, 1.0)
    # two distinct matched molecules exceed 3 Debye
    assert rep.above_threshold_ids == ("r1", "r2")
    assert [p[2] for p in rep.pairs] == [0.1, 0.2, 0.3]


def test_report_with_fingerprints_and_suffixed_queries():
    plans = [plan("a", 1.0, 3.2)]
    neighbors = [NeighborResult("a::do", ("r1",), (0.5,))]  # intervened id
    qfps = FingerprintTable(("a",), np.array([[1, 1, 0, 0]], dtype=np.uint8))
    rfps = FingerprintTable(("r1",), np.array([[1, 0, 1, 0]], dtype=np.uint8))
    rep = intervention_report(
        plans, neighbors, {"r1": 5.0}, threshold=3.0,
        query_fps=qfps, reference_fps=rfps,
    )
    assert rep.pairs[0][1] == pytest.approx(1 / 3)
    assert rep.above_threshold_ids == ("r1",)


def test_report_missing_reference_target():
    plans = [plan("a", 1.0, 3.2)]
    neighbors = [NeighborResult("a", ("r1",), (0.5,))]
    with pytest.raises(MissingColumn):
        intervention_report(plans, neighbors, {"other": 1.0})


def test_neighbors_round_trip(tmp_path):
    neighbors = [
        NeighborResult("a", ("r1", "r2"), (0.125, 0.5), (3.25, 1.0)),
        NeighborResult("b", ("r3",), (0.75,), (2.0,)),
    ]
    p = tmp_path / "nn.csv"
    match.save_neighbors(p, neighbors)
    loaded = match.load_neighbors(p)
    assert loaded == neighbors
