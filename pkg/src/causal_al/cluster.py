"""Gaussian mixture clustering over pivot features.

Pivot columns are standardized before fitting (their scales differ by
orders of magnitude on chemical descriptors), components are seeded
k-means++ style, and EM runs with full covariances regularized by a
diagonal floor. Fitted parameters are stored back on the raw pivot scale;
posterior assignment works directly on raw tables.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .dataio import FeatureTable, fit_normalizer
from .errors import (
    ConfigError,
    DegenerateComponent,
    InsufficientData,
    MissingColumn,
    SchemaError,
)
from .util import fmt

COVARIANCE_FLOOR = 1e-6


@dataclass(frozen=True)
class GmmModel:
    """Mixture weights/means/covariances over pivot features (raw scale)."""

    weights: np.ndarray
    means: np.ndarray        # components x dim
    covariances: np.ndarray  # components x dim x dim
    pivot_features: tuple[str, ...]
    pivot_means: np.ndarray
    pivot_stds: np.ndarray
    seed: int
    log_likelihoods: tuple[float, ...]  # per-iteration trajectory (standardized space)

    @property
    def n_components(self) -> int:
        return len(self.weights)


def _log_gauss(z: np.ndarray, mean: np.ndarray, cov: np.ndarray) -> np.ndarray:
    """Log density of rows of z under N(mean, cov), via Cholesky."""
    dim = z.shape[1]
    try:
        chol = np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        raise DegenerateComponent("covariance is not positive definite") from None
    diff = z - mean
    sol = np.linalg.solve(chol, diff.T)
    log_det = 2.0 * np.sum(np.log(np.diag(chol)))
    return -0.5 * (dim * np.log(2.0 * np.pi) + log_det + np.sum(sol**2, axis=0))


def _kmeanspp_centers(z: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = z.shape[0]
    centers = [z[rng.integers(n)]]
    for _ in range(k - 1):
        d2 = np.min(
            [np.sum((z - c) ** 2, axis=1) for c in centers], axis=0
        )
        total = d2.sum()
        if total <= 0.0:
            centers.append(z[rng.integers(n)])
            continue
        centers.append(z[rng.choice(n, p=d2 / total)])
    return np.array(centers)


def fit_gmm(
    table: FeatureTable,
    pivot_features,
    n_components: int = 3,
    seed: int = 0,
    max_iter: int = 200,
    tol: float = 1e-6,
) -> GmmModel:
    """Fit a full-covariance mixture by EM on standardized pivot columns.

    The per-iteration log-likelihood trajectory is recorded on the model;
    it is non-decreasing up to a small numerical slack.
    """
    pivots = tuple(pivot_features)
    if n_components < 1:
        raise ConfigError(f"n_components must be >= 1, got {n_components}")
    for p in pivots:
        if p not in table.feature_names:
            raise MissingColumn(f"pivot feature {p!r} not in table")
    n = table.n_rows
    if n < n_components:
        raise InsufficientData(f"{n} rows cannot support {n_components} components")

    norm = fit_normalizer(table, pivots)  # raises DegenerateFeature on constant pivots
    z = (table.matrix(pivots) - norm.mean) / norm.std
    dim = z.shape[1]

    rng = np.random.default_rng(seed)
    means = _kmeanspp_centers(z, n_components, rng)
    base_cov = np.cov(z, rowvar=False, ddof=1).reshape(dim, dim) + COVARIANCE_FLOOR * np.eye(dim)
    covs = np.repeat(base_cov[None, :, :], n_components, axis=0)
    weights = np.full(n_components, 1.0 / n_components)

    trajectory: list[float] = []
    prev_ll = -np.inf
    for _ in range(max_iter):
        log_probs = np.column_stack(
            [np.log(weights[k]) + _log_gauss(z, means[k], covs[k]) for k in range(n_components)]
        )
        row_norm = logsumexp(log_probs, axis=1)
        ll = float(np.sum(row_norm))
        if not np.isfinite(ll):
            raise DegenerateComponent("log-likelihood diverged")
        trajectory.append(ll)
        if ll - prev_ll < tol and np.isfinite(prev_ll):
            break
        prev_ll = ll

        resp = np.exp(log_probs - row_norm[:, None])
        nk = resp.sum(axis=0)
        if np.any(nk <= 0.0):
            raise DegenerateComponent("a component lost all responsibility")
        weights = nk / n
        means = (resp.T @ z) / nk[:, None]
        for k in range(n_components):
            diff = z - means[k]
            cov = (resp[:, k][:, None] * diff).T @ diff / nk[k]
            covs[k] = 0.5 * (cov + cov.T) + COVARIANCE_FLOOR * np.eye(dim)

    # report parameters on the raw pivot scale
    scale = np.diag(norm.std)
    raw_means = means * norm.std + norm.mean
    raw_covs = np.array([scale @ c @ scale for c in covs])
    return GmmModel(
        weights=weights,
        means=raw_means,
        covariances=raw_covs,
        pivot_features=pivots,
        pivot_means=norm.mean,
        pivot_stds=norm.std,
        seed=seed,
        log_likelihoods=tuple(trajectory),
    )


def responsibilities(model: GmmModel, table: FeatureTable) -> np.ndarray:
    """Posterior component probabilities per row (rows sum to 1)."""
    for p in model.pivot_features:
        if p not in table.feature_names:
            raise MissingColumn(f"pivot feature {p!r} not in table")
    x = table.matrix(model.pivot_features)
    log_probs = np.column_stack(
        [
            np.log(model.weights[k]) + _log_gauss(x, model.means[k], model.covariances[k])
            for k in range(model.n_components)
        ]
    )
    return np.exp(log_probs - logsumexp(log_probs, axis=1)[:, None])


def assign_subsets(model: GmmModel, table: FeatureTable) -> np.ndarray:
    """Label each row with its argmax-responsibility component (ties: lowest index)."""
    return np.argmax(responsibilities(model, table), axis=1)


# ---------------------------------------------------------------------------
# Persistence
# ---------------------------------------------------------------------------


def save_gmm(path, model: GmmModel) -> None:
    """Plain-text matrix blocks, one component at a time."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"pivot_features = {','.join(model.pivot_features)}\n")
        fh.write(f"seed = {model.seed}\n")
        fh.write(f"weights = {','.join(fmt(w) for w in model.weights)}\n")
        fh.write(f"pivot_means = {','.join(fmt(v) for v in model.pivot_means)}\n")
        fh.write(f"pivot_stds = {','.join(fmt(v) for v in model.pivot_stds)}\n")
        fh.write(f"log_likelihoods = {','.join(fmt(v) for v in model.log_likelihoods)}\n")
        for k in range(model.n_components):
            fh.write(f"component = {k}\n")
            fh.write("mean = " + ",".join(fmt(v) for v in model.means[k]) + "\n")
            for row in model.covariances[k]:
                fh.write("cov = " + ",".join(fmt(v) for v in row) + "\n")


def load_gmm(path) -> GmmModel:
    kv: dict[str, str] = {}
    comp_means: list[list[float]] = []
    comp_covs: list[list[list[float]]] = []
    with open(path, "r", encoding="utf-8") as fh:
        for raw in fh:
            line = raw.strip()
            if not line:
                continue
            key, _, value = line.partition("=")
            key, value = key.strip(), value.strip()
            if key == "component":
                comp_means.append([])
                comp_covs.append([])
            elif key == "mean":
                comp_means[-1] = [float(v) for v in value.split(",")]
            elif key == "cov":
                comp_covs[-1].append([float(v) for v in value.split(",")])
            else:
                kv[key] = value
    if not comp_means:
        raise SchemaError(f"{path}: no components found")
    return GmmModel(
        weights=np.array([float(v) for v in kv["weights"].split(",")]),
        means=np.array(comp_means),
        covariances=np.array(comp_covs),
        pivot_features=tuple(kv["pivot_features"].split(",")),
        pivot_means=np.array([float(v) for v in kv["pivot_means"].split(",")]),
        pivot_stds=np.array([float(v) for v in kv["pivot_stds"].split(",")]),
        seed=int(kv.get("seed", "0")),
        log_likelihoods=tuple(
            float(v) for v in kv.get("log_likelihoods", "").split(",") if v
        ),
    )


def write_labels(path, row_ids, labels) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("id,subset\n")
        for rid, lab in zip(row_ids, labels):
            fh.write(f"{rid},{int(lab)}\n")


def read_labels(path) -> dict[str, int]:
    out: dict[str, int] = {}
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["id", "subset"]:
            raise SchemaError(f"{path}: expected header `id,subset`")
        for rid, lab in reader:
            out[rid] = int(lab)
    return out
