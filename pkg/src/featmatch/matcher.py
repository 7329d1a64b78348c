"""Brute-force Hamming matching, cross-check, k-NN and match filtering.

Ties always resolve to the lowest index on the side being searched.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .descriptor import N_BITS, hamming_matrix

ABSOLUTE = "absolute"
LOWE_RATIO = "ratio"


@dataclass(frozen=True)
class Match:
    query_idx: int
    train_idx: int
    distance_bits: int

    @property
    def distance_norm(self) -> float:
        return self.distance_bits / N_BITS


@dataclass(frozen=True)
class MatchFilterConfig:
    """``absolute`` keeps ``distance_norm < threshold``; ``ratio`` is Lowe's
    best-to-second-best test on the two nearest neighbours."""

    mode: str = ABSOLUTE
    threshold: float = 0.7

    def __post_init__(self) -> None:
        if self.mode == ABSOLUTE:
            if not 0.0 < self.threshold <= 1.0:
                raise ValueError("absolute threshold must lie in (0, 1]")
        elif self.mode == LOWE_RATIO:
            if not 0.0 < self.threshold < 1.0:
                raise ValueError("ratio threshold must lie in (0, 1)")
        else:
            raise ValueError(f"unknown filter mode {self.mode!r}")


def _as_descriptors(d) -> np.ndarray:
    arr = np.asarray(d, dtype=np.uint8)
    if arr.ndim == 1 and arr.size == 0:
        return arr.reshape(0, 0)
    if arr.ndim != 2:
        raise ValueError(f"descriptor list must be 2-D, got shape {arr.shape}")
    return arr


def match_brute_force(query, train, cross_check: bool = True) -> list[Match]:
    """Nearest train descriptor for each query, optionally mutual-best only."""
    q = _as_descriptors(query)
    t = _as_descriptors(train)
    if len(q) == 0 or len(t) == 0:
        return []
    if q.shape[1] != t.shape[1]:
        raise ValueError(f"descriptor length mismatch: {q.shape[1]} vs {t.shape[1]} bytes")
    dist = hamming_matrix(q, t)
    best_train = dist.argmin(axis=1)
    rows = np.arange(len(q))
    if cross_check:
        best_query = dist.argmin(axis=0)
        rows = rows[best_query[best_train] == rows]
    return [Match(int(i), int(best_train[i]), int(dist[i, best_train[i]])) for i in rows]


def knn_match(query, train, k: int) -> list[list[Match]]:
    q = _as_descriptors(query)
    t = _as_descriptors(train)
    if k < 1:
        raise ValueError("k must be >= 1")
    if k > len(t):
        raise ValueError(f"k={k} exceeds the {len(t)} train descriptors")
    if len(q) == 0:
        return []
    dist = hamming_matrix(q, t)
    order = np.argsort(dist, axis=1, kind="stable")[:, :k]
    return [
        [Match(i, int(j), int(dist[i, j])) for j in order[i]]
        for i in range(len(q))
    ]


def filter_matches(
    matches: Sequence[Match],
    cfg: MatchFilterConfig = MatchFilterConfig(),
    knn_pairs: Optional[Sequence[Sequence[Match]]] = None,
) -> list[Match]:
    """Subsequence of ``matches`` that passes the configured test."""
    if cfg.mode == ABSOLUTE:
        return [m for m in matches if m.distance_norm < cfg.threshold]
    if knn_pairs is None:
        raise ValueError("ratio filtering needs the two nearest neighbours per query")
    passing = set()
    for pair in knn_pairs:
        if len(pair) < 2:
            raise ValueError("ratio filtering needs k=2 neighbours per query")
        best, second = pair[0], pair[1]
        if best.distance_bits < cfg.threshold * second.distance_bits:
            passing.add(best.query_idx)
    return [m for m in matches if m.query_idx in passing]


def sort_matches(matches: Sequence[Match]) -> list[Match]:
    return sorted(matches, key=lambda m: m.distance_bits)
