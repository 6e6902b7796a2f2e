"""Spherical k-means: Lloyd iteration over unit-normalized vectors with cosine similarity."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

logger = logging.getLogger(__name__)


@dataclass
class ClusterAssignment:
    """Result of one spherical k-means run.

    ``objective`` is the sum of cosines between each vector and its
    cluster's center; ``objective_history`` records it after every Lloyd
    iteration of the winning restart.
    """

    k: int
    centers: np.ndarray
    member_of: dict[int, int]
    objective: float
    n_iter: int
    objective_history: list[float] = field(default_factory=list)

    def members(self, cluster: int) -> list[int]:
        return [t for t, c in self.member_of.items() if c == cluster]


def _normalize_rows(X: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(X, axis=1)
    if np.any(norms == 0.0):
        raise ValueError("zero vector among clustering inputs")
    return X / norms[:, None]


def _kmeanspp_init(X: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """k-means++ seeding with cosine distance (1 - cos) as the weight."""
    n = len(X)
    centers = np.empty((k, X.shape[1]), dtype=X.dtype)
    centers[0] = X[int(rng.integers(n))]
    best_cos = X @ centers[0]
    for j in range(1, k):
        dist = np.maximum(1.0 - best_cos, 0.0)
        total = dist.sum()
        if total <= 0.0:
            idx = int(rng.integers(n))
        else:
            u = rng.random()
            idx = min(int(np.searchsorted(np.cumsum(dist / total), u, side="right")), n - 1)
        centers[j] = X[idx]
        best_cos = np.maximum(best_cos, X @ centers[j])
    return centers


def _repair_empty(labels: np.ndarray, sims: np.ndarray, k: int) -> np.ndarray:
    """Reassign the worst-fitting point (lowest cosine to its center) to each
    empty cluster. Points already used for repair are not stolen again."""
    fit = sims[np.arange(len(labels)), labels].copy()
    guard = 0
    while True:
        occupied = np.bincount(labels, minlength=k)
        empties = np.flatnonzero(occupied == 0)
        if empties.size == 0:
            return labels
        worst = int(np.argmin(fit))
        labels[worst] = int(empties[0])
        fit[worst] = 2.0
        guard += 1
        if guard > k:
            raise RuntimeError("failed to repair empty clusters")


def _recenter(X: np.ndarray, labels: np.ndarray, centers: np.ndarray, k: int) -> np.ndarray:
    new_centers = centers.copy()
    for j in range(k):
        members = X[labels == j]
        if len(members) == 0:
            continue
        mean = members.sum(axis=0)
        norm = np.linalg.norm(mean)
        if norm > 0.0:
            new_centers[j] = mean / norm
        # antipodal cancellation: keep the previous center direction
    return new_centers


def _lloyd(X: np.ndarray, centers: np.ndarray, max_iter: int):
    k = len(centers)
    labels = None
    history: list[float] = []
    for it in range(1, max_iter + 1):
        sims = X @ centers.T
        new_labels = np.argmax(sims, axis=1)  # ties resolve to the lowest index
        new_labels = _repair_empty(new_labels, sims, k)
        if labels is not None and np.array_equal(new_labels, labels):
            return labels, centers, it - 1, history
        labels = new_labels
        centers = _recenter(X, labels, centers, k)
        objective = float((X @ centers.T)[np.arange(len(X)), labels].sum())
        if history and objective < history[-1] - 1e-9:
            raise RuntimeError(
                f"spherical k-means objective decreased: {history[-1]} -> {objective}"
            )
        history.append(objective)
    return labels, centers, max_iter, history


def spherical_kmeans(
    vectors: Mapping[int, np.ndarray],
    k: int,
    seed: int,
    max_iter: int = 100,
    restarts: int = 3,
    init_centers: np.ndarray | None = None,
) -> ClusterAssignment:
    """Cluster term vectors on the unit sphere into k groups.

    Vectors are normalized on entry, so any positive rescaling of an input
    leaves the result unchanged. Restarts are seeded ``seed .. seed+restarts-1``
    and the assignment with the best objective wins (ties keep the earliest
    restart); passing ``init_centers`` skips seeding and runs a single Lloyd
    descent from those centers.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    ids = sorted(vectors)
    if len(ids) < k:
        raise ValueError(f"fewer vectors ({len(ids)}) than clusters ({k})")
    X = _normalize_rows(np.array([np.asarray(vectors[t], dtype=np.float64) for t in ids]))

    best = None
    if init_centers is not None:
        centers0 = np.asarray(init_centers, dtype=np.float64)
        if centers0.shape != (k, X.shape[1]):
            raise ValueError(f"init_centers must have shape ({k}, {X.shape[1]})")
        best = _lloyd(X, _normalize_rows(centers0.copy()), max_iter)
    else:
        for r in range(max(restarts, 1)):
            rng = np.random.default_rng(seed + r)
            run = _lloyd(X, _kmeanspp_init(X, k, rng), max_iter)
            if best is None or run[3][-1] > best[3][-1]:
                best = run
    labels, centers, n_iter, history = best
    member_of = {int(t): int(c) for t, c in zip(ids, labels)}
    return ClusterAssignment(k, centers, member_of, history[-1], n_iter, history)
