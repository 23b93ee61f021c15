"""ReliefF feature ranking for labeled feature vectors."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np

from .errors import RankingError

DEFAULT_NEIGHBORS = 10


@dataclass(frozen=True)
class FeatureRanking:
    names: Tuple[str, ...]
    weights: Tuple[float, ...]

    def __post_init__(self):
        if len(self.names) != len(self.weights):
            raise RankingError("names and weights differ in length")
        if not all(np.isfinite(self.weights)):
            raise RankingError("non-finite feature weight")

    @property
    def top(self) -> str:
        return self.names[0]

    def as_dict(self) -> dict:
        return dict(zip(self.names, self.weights))


def relieff_weights(x: np.ndarray, labels: Sequence, k: int = DEFAULT_NEIGHBORS) -> np.ndarray:
    """ReliefF weights with every instance used once as a probe (m = n).

    Neighbours are found with Euclidean distance on standardized columns;
    per-feature differences are ``|a - b| / (max - min)``.  Miss
    contributions are weighted by the prior of the miss class renormalized
    over the classes other than the probe's, and each class contributes at
    most ``k`` neighbours (fewer if the class is smaller).
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(labels)
    if x.ndim != 2 or x.shape[0] != y.shape[0]:
        raise RankingError("x must be (n, d) with one label per row")
    if not np.all(np.isfinite(x)):
        raise RankingError("non-finite feature values")
    classes, y_idx, counts = np.unique(y, return_inverse=True, return_counts=True)
    if classes.shape[0] < 2:
        raise RankingError("ReliefF needs at least two classes")
    n, d = x.shape
    if k < 1:
        raise RankingError("k must be positive")
    prior = counts / n

    span = x.max(axis=0) - x.min(axis=0)
    span = np.where(span > 0, span, 1.0)
    std = x.std(axis=0)
    z = (x - x.mean(axis=0)) / np.where(std > 0, std, 1.0)
    sq = np.sum(z * z, axis=1)
    dist = sq[:, None] + sq[None, :] - 2.0 * z @ z.T
    np.fill_diagonal(dist, np.inf)

    w = np.zeros(d)
    for i in range(n):
        ci = y_idx[i]
        for c in range(classes.shape[0]):
            members = np.flatnonzero(y_idx == c)
            if c == ci:
                members = members[members != i]
            if members.size == 0:
                continue
            kk = min(k, members.size)
            order = np.argsort(dist[i, members], kind="stable")[:kk]
            diffs = np.abs(x[members[order]] - x[i]) / span
            contrib = diffs.mean(axis=0)
            if c == ci:
                w -= contrib
            else:
                w += prior[c] / (1.0 - prior[ci]) * contrib
    return w / n


def rank_features(x: np.ndarray, labels: Sequence, names: Sequence[str],
                  k: int = DEFAULT_NEIGHBORS) -> FeatureRanking:
    """Feature names sorted by descending ReliefF weight (ties keep column order)."""
    names = tuple(names)
    w = relieff_weights(x, labels, k)
    if w.shape[0] != len(names):
        raise RankingError("one name per feature column required")
    order = np.argsort(-w, kind="stable")
    return FeatureRanking(tuple(names[j] for j in order), tuple(float(w[j]) for j in order))
