"""Spectral distance between weighted graphs.

The spectrum of a directed weighted adjacency is taken as its singular
values: a DAG adjacency is non-symmetric (strictly triangular up to node
order, so its eigenvalues are all zero and carry no information), while
singular values are real, ordered, and invariant under node relabeling.
An eigenvalue-magnitude mode is kept behind a flag for comparison.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .causal import WeightedDag
from .errors import ConfigError, NodeMismatch

_MODES = ("singular", "eigenvalue")


@dataclass(frozen=True)
class Spectrum:
    """Top-N spectrum values, sorted descending, zero-padded to length N."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 1:
            raise ConfigError("spectrum must be a vector")
        if np.any(v[:-1] < v[1:]):
            raise ConfigError("spectrum must be sorted descending")
        v = v.copy()
        v.setflags(write=False)
        object.__setattr__(self, "values", v)


def _raw_spectrum(b: np.ndarray, mode: str) -> np.ndarray:
    if b.size == 0:
        return np.zeros(0)
    if mode == "singular":
        return np.linalg.svd(b, compute_uv=False)
    vals = np.sort(np.abs(np.linalg.eigvals(b)))[::-1]
    return vals


def spectrum(dag: WeightedDag, n: int, mode: str = "singular") -> Spectrum:
    """Top-n spectrum of the weighted adjacency, zero-padded below node count."""
    if mode not in _MODES:
        raise ConfigError(f"unknown spectrum mode {mode!r}")
    if n < 1:
        raise ConfigError(f"n must be >= 1, got {n}")
    vals = _raw_spectrum(np.asarray(dag.B, dtype=np.float64), mode)
    if vals.size < n:
        vals = np.concatenate([vals, np.zeros(n - vals.size)])
    return Spectrum(values=vals[:n])


def spectral_distance(
    g1: WeightedDag,
    g2: WeightedDag,
    n: int | None = None,
    mode: str = "singular",
) -> float:
    """l2 distance between the aligned top-n spectra of two graphs.

    Graphs are aligned by node name; nodes present in only one graph
    contribute zero rows/columns, which leaves the spectrum values
    unchanged. Entirely disjoint node sets cannot be compared.
    """
    s1, s2 = set(g1.node_names), set(g2.node_names)
    if not s1 & s2:
        raise NodeMismatch("graphs share no nodes")
    if n is None:
        n = max(len(s1 | s2), 1)
    a = spectrum(g1, n, mode).values
    b = spectrum(g2, n, mode).values
    return float(np.sqrt(np.sum((a - b) ** 2)))
