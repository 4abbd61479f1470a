"""Map intervened feature vectors back to real molecules.

Matching is exact k-nearest-neighbor search under Euclidean distance in a
normalized feature space; normalization statistics come from the
intervened population itself (pooled statistics are available behind a
flag). Structural similarity is reported through Tanimoto scores over
ingested fingerprints, and fingerprint populations can be projected onto
their top two principal components for trajectory plots.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

from .dataio import FeatureTable, FingerprintTable
from .errors import (
    ConfigError,
    DisjointFeatures,
    InsufficientData,
    MissingColumn,
    SchemaError,
)
from .intervene import original_id
from .util import fmt, parallel_map


@dataclass(frozen=True)
class NeighborResult:
    """Ranked reference matches for one query row (distances nondecreasing)."""

    query_id: str
    neighbor_ids: tuple[str, ...]
    distances: tuple[float, ...]
    ref_targets: tuple[float, ...] | None = None


def nearest_in_reference(
    intervened: FeatureTable,
    reference: FeatureTable,
    k: int = 1,
    features=None,
    ref_target: str | None = None,
    pooled_stats: bool = False,
    jobs: int = 1,
) -> list[NeighborResult]:
    """Exact k-NN of each intervened row against the reference table.

    Both tables are normalized with the intervened population's statistics
    (or pooled statistics when `pooled_stats`). A column left constant in
    the intervened population (clamped single-lever batches do this) takes
    the reference population's scale instead, so matching stays defined.
    k is clamped to the reference size; ties break toward the earlier
    reference row.
    """
    if k <= 0:
        raise ConfigError(f"k must be positive, got {k}")
    if reference.n_rows == 0:
        raise SchemaError("reference table is empty")
    if intervened.n_rows < 2:
        raise InsufficientData("need at least 2 intervened rows for population statistics")
    if features is None:
        ref_names = set(reference.feature_names)
        features = tuple(
            f for f in intervened.plain_feature_names if f in ref_names
        )
    features = tuple(features)
    if not features:
        raise DisjointFeatures("no shared feature columns to match on")
    for f in features:
        if f not in reference.feature_names:
            raise MissingColumn(f"reference lacks feature {f!r}")

    xq = intervened.matrix(features)
    xr = reference.matrix(features)
    stats = np.vstack([xq, xr]) if pooled_stats else xq
    mean = stats.mean(axis=0)
    std = stats.std(axis=0, ddof=1)
    fallback = xr.std(axis=0, ddof=1) if reference.n_rows > 1 else np.ones(len(features))
    std = np.where(std == 0.0, fallback, std)
    std = np.where(std == 0.0, 1.0, std)
    zq = (xq - mean) / std
    zr = (xr - mean) / std

    k_eff = min(k, reference.n_rows)
    targets = reference.column(ref_target) if ref_target is not None else None

    def query_block(block: np.ndarray) -> np.ndarray:
        return cdist(block, zr)

    n_chunks = max(1, min(jobs, zq.shape[0]))
    chunks = np.array_split(zq, n_chunks)
    dists = np.vstack(parallel_map(query_block, chunks, jobs=jobs))

    results: list[NeighborResult] = []
    ref_idx = np.arange(reference.n_rows)
    for qi, qid in enumerate(intervened.row_ids):
        order = np.lexsort((ref_idx, dists[qi]))[:k_eff]
        results.append(
            NeighborResult(
                query_id=qid,
                neighbor_ids=tuple(reference.row_ids[j] for j in order),
                distances=tuple(float(dists[qi, j]) for j in order),
                ref_targets=tuple(float(targets[j]) for j in order) if targets is not None else None,
            )
        )
    return results


def tanimoto(a: np.ndarray, b: np.ndarray) -> float:
    """|a AND b| / |a OR b| over 0/1 bitvectors; 1.0 when both are empty."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise SchemaError(f"fingerprint widths differ: {a.shape} vs {b.shape}")
    a = a.astype(bool)
    b = b.astype(bool)
    union = int(np.count_nonzero(a | b))
    if union == 0:
        return 1.0
    return float(np.count_nonzero(a & b)) / union


# ---------------------------------------------------------------------------
# PCA
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PcaProjection:
    components: np.ndarray           # n_components x dim, orthonormal rows
    explained_variances: np.ndarray  # nonincreasing
    coordinates: np.ndarray          # rows x n_components


def _as_matrix(data) -> np.ndarray:
    if isinstance(data, FeatureTable):
        return data.values.astype(np.float64)
    if isinstance(data, FingerprintTable):
        return data.bits.astype(np.float64)
    return np.asarray(data, dtype=np.float64)


def pca_project(data, n_components: int = 2) -> PcaProjection:
    """Covariance-eigendecomposition PCA with a deterministic sign convention.

    Each component's largest-magnitude loading is made positive, so the
    projection is reproducible and invariant to row order.
    """
    x = _as_matrix(data)
    n, d = x.shape
    if n_components < 1:
        raise ConfigError("n_components must be >= 1")
    if n < 2 or n < n_components:
        raise InsufficientData(f"{n} rows cannot support {n_components} components")
    center = x.mean(axis=0)
    xc = x - center
    cov = xc.T @ xc / (n - 1)
    eigvals, eigvecs = np.linalg.eigh(cov)
    order = np.argsort(eigvals)[::-1][:n_components]
    comps = eigvecs[:, order].T.copy()
    for i in range(comps.shape[0]):
        j = int(np.argmax(np.abs(comps[i])))
        if comps[i, j] < 0:
            comps[i] = -comps[i]
    return PcaProjection(
        components=comps,
        explained_variances=np.maximum(eigvals[order], 0.0),
        coordinates=xc @ comps.T,
    )


def project_onto(projection: PcaProjection, data, center_source) -> np.ndarray:
    """Project new rows with an existing projection's components.

    `center_source` supplies the mean used at fit time (the original data).
    """
    x = _as_matrix(data)
    mean = _as_matrix(center_source).mean(axis=0)
    return (x - mean) @ projection.components.T


# ---------------------------------------------------------------------------
# Reporting
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class InterventionReport:
    """Distribution data and per-molecule similarity pairs for one batch."""

    threshold: float
    original_targets: tuple[float, ...]
    intervened_targets: tuple[float, ...]
    matched_targets: tuple[float, ...]
    pairs: tuple[tuple[str, float, float], ...]  # (query_id, tanimoto, distance)
    above_threshold_ids: tuple[str, ...]

    @property
    def above_threshold_count(self) -> int:
        return len(self.above_threshold_ids)


def intervention_report(
    plans,
    neighbors,
    reference_targets: dict[str, float],
    threshold: float = 3.0,
    query_fps: FingerprintTable | None = None,
    reference_fps: FingerprintTable | None = None,
) -> InterventionReport:
    """Summarize matched interventions against a reference population.

    For each plan/neighbor pair, collects the predicted target before and
    after intervention and the matched reference molecule's recorded
    target; lists the distinct matched molecules whose reference target
    strictly exceeds `threshold`. Tanimoto pairs are filled in when both
    fingerprint tables are supplied (NaN otherwise). Neighbor query ids
    may carry the intervention marker; they are matched to plans by the
    underlying original row id.
    """
    by_query = {original_id(nr.query_id): nr for nr in neighbors}
    originals: list[float] = []
    intervened: list[float] = []
    matched: list[float] = []
    pairs: list[tuple[str, float, float]] = []
    above: list[str] = []
    seen_above: set[str] = set()
    for plan in plans:
        nr = by_query.get(plan.row_id)
        if nr is None:
            raise SchemaError(f"no neighbor result for plan row {plan.row_id!r}")
        best_id = nr.neighbor_ids[0]
        if best_id not in reference_targets:
            raise MissingColumn(f"reference target missing for {best_id!r}")
        ref_value = float(reference_targets[best_id])
        originals.append(plan.predicted_target_before)
        intervened.append(plan.predicted_target_after)
        matched.append(ref_value)
        if query_fps is not None and reference_fps is not None:
            sim = tanimoto(query_fps.row(plan.row_id), reference_fps.row(best_id))
        else:
            sim = float("nan")
        pairs.append((plan.row_id, sim, nr.distances[0]))
        if ref_value > threshold and best_id not in seen_above:
            seen_above.add(best_id)
            above.append(best_id)
    return InterventionReport(
        threshold=threshold,
        original_targets=tuple(originals),
        intervened_targets=tuple(intervened),
        matched_targets=tuple(matched),
        pairs=tuple(pairs),
        above_threshold_ids=tuple(above),
    )


# ---------------------------------------------------------------------------
# Persistence
# ---------------------------------------------------------------------------


def save_neighbors(path, neighbors) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("query_id,rank,ref_id,distance,ref_target\n")
        for nr in neighbors:
            for rank, (rid, dist) in enumerate(zip(nr.neighbor_ids, nr.distances), start=1):
                tval = "" if nr.ref_targets is None else fmt(nr.ref_targets[rank - 1])
                fh.write(f"{nr.query_id},{rank},{rid},{fmt(dist)},{tval}\n")


def load_neighbors(path) -> list[NeighborResult]:
    grouped: dict[str, list[tuple[int, str, float, float | None]]] = {}
    order: list[str] = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["query_id", "rank", "ref_id", "distance", "ref_target"]:
            raise SchemaError(f"{path}: unexpected neighbors header")
        for qid, rank, rid, dist, tval in reader:
            if qid not in grouped:
                grouped[qid] = []
                order.append(qid)
            grouped[qid].append((int(rank), rid, float(dist), float(tval) if tval else None))
    results = []
    for qid in order:
        rows = sorted(grouped[qid])
        has_targets = all(r[3] is not None for r in rows)
        results.append(
            NeighborResult(
                query_id=qid,
                neighbor_ids=tuple(r[1] for r in rows),
                distances=tuple(r[2] for r in rows),
                ref_targets=tuple(r[3] for r in rows) if has_targets else None,
            )
        )
    return results
