"""Pre-clustering of a corpus before synthesis.

Pairwise Hamming distances feed an agglomerative merge tree; the tree is
cut at the candidate count with the best Dunn index, clusters smaller
than a floor are folded into one catch-all group, and weighted draws over
the resulting clusters steer which sub-corpus each synthesized sequence
borrows from.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import Corpus
from .errors import ConfigError, DataFormatError

__all__ = [
    "DistanceMatrix",
    "Dendrogram",
    "ClusterAssignment",
    "ClusterWeights",
    "pairwise_distance",
    "hierarchical_cluster",
    "dunn_index",
    "dunn_profile",
    "select_clusters",
    "sample_cluster",
    "LINKAGES",
]

LINKAGES = ("complete", "average")


@dataclass(frozen=True, eq=False)
class DistanceMatrix:
    """Symmetric non-negative distances with a zero diagonal."""

    values: np.ndarray

    def __post_init__(self):
        arr = np.array(self.values, dtype=np.float64, copy=True)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise DataFormatError("distance matrix must be square")
        if not np.allclose(arr, arr.T, rtol=0.0, atol=1e-9):
            raise DataFormatError("distance matrix must be symmetric")
        if np.diagonal(arr).any():
            raise DataFormatError("distance matrix diagonal must be zero")
        if arr.min() < 0:
            raise DataFormatError("distances must be non-negative")
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    @property
    def n(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True)
class Dendrogram:
    """Agglomerative merge tree.

    Each merge step is ``(a, b, height)`` where ``a < b`` are cluster ids:
    leaves are ``0..n-1`` and the cluster created by step ``s`` has id
    ``n + s``.  Heights are non-decreasing for the supported linkages.
    """

    merges: tuple[tuple[int, int, float], ...]
    n_leaves: int

    def __post_init__(self):
        merges = tuple((int(a), int(b), float(h)) for a, b, h in self.merges)
        object.__setattr__(self, "merges", merges)
        if len(merges) != self.n_leaves - 1:
            raise DataFormatError("dendrogram must contain exactly n-1 merges")
        prev = -math.inf
        for step, (a, b, h) in enumerate(merges):
            if not (0 <= a < b < self.n_leaves + step):
                raise DataFormatError(f"merge step {step} references invalid ids")
            if h < prev - 1e-9:
                raise DataFormatError("merge heights must be non-decreasing")
            prev = max(prev, h)

    def cut(self, k: int) -> np.ndarray:
        """Partition the leaves into k clusters.

        Applies the first ``n - k`` merges; clusters are labelled 0..k-1
        in order of their smallest member index.
        """
        n = self.n_leaves
        if not 1 <= k <= n:
            raise ConfigError(f"cannot cut {n}-leaf dendrogram into {k} clusters")
        n_apply = n - k
        parent = list(range(n + n_apply))

        def find(x: int) -> int:
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        for step in range(n_apply):
            a, b, _ = self.merges[step]
            new = n + step
            parent[find(a)] = new
            parent[find(b)] = new

        labels = np.empty(n, dtype=np.int64)
        relabel: dict[int, int] = {}
        for leaf in range(n):
            root = find(leaf)
            if root not in relabel:
                relabel[root] = len(relabel)
            labels[leaf] = relabel[root]
        return labels


@dataclass(frozen=True, eq=False)
class ClusterAssignment:
    """Cluster index per sequence; labels must use every value in [0, k)."""

    labels: np.ndarray

    def __post_init__(self):
        arr = np.array(self.labels, dtype=np.int64, copy=True)
        if arr.ndim != 1 or arr.size == 0:
            raise DataFormatError("cluster labels must be a non-empty 1-D vector")
        if arr.min() < 0:
            raise DataFormatError("cluster labels must be non-negative")
        k = int(arr.max()) + 1
        sizes = np.bincount(arr, minlength=k)
        if (sizes == 0).any():
            raise DataFormatError("every cluster in [0, k) must be non-empty")
        arr.setflags(write=False)
        sizes.setflags(write=False)
        object.__setattr__(self, "labels", arr)
        object.__setattr__(self, "_k", k)
        object.__setattr__(self, "_sizes", sizes)

    @property
    def k(self) -> int:
        return self._k

    @property
    def sizes(self) -> np.ndarray:
        return self._sizes

    @property
    def n(self) -> int:
        return int(self.labels.size)

    @classmethod
    def from_labels(cls, labels: Sequence[int]) -> "ClusterAssignment":
        """Remap arbitrary integer labels to contiguous 0..k-1 (sorted order)."""
        arr = np.asarray(labels, dtype=np.int64)
        uniq = np.unique(arr)
        remap = {int(v): i for i, v in enumerate(uniq)}
        return cls(np.array([remap[int(v)] for v in arr]))


@dataclass(frozen=True, eq=False)
class ClusterWeights:
    """Non-negative sampling weights over clusters; at least one positive."""

    weights: np.ndarray

    def __post_init__(self):
        arr = np.array(self.weights, dtype=np.float64, copy=True)
        if arr.ndim != 1 or arr.size == 0:
            raise DataFormatError("weights must be a non-empty 1-D vector")
        if not np.isfinite(arr).all() or arr.min() < 0:
            raise DataFormatError("weights must be finite and non-negative")
        if arr.max() <= 0:
            raise DataFormatError("all-zero weights")
        arr.setflags(write=False)
        object.__setattr__(self, "weights", arr)

    @property
    def k(self) -> int:
        return int(self.weights.size)

    def normalized(self) -> np.ndarray:
        return self.weights / self.weights.sum()

    @classmethod
    def from_assignment(cls, assignment: ClusterAssignment) -> "ClusterWeights":
        """Default weighting: cluster sizes (size-proportional draws)."""
        return cls(assignment.sizes.astype(np.float64))


def pairwise_distance(corpus: Corpus, metric: str = "hamming") -> DistanceMatrix:
    """Pairwise distances between corpus sequences.

    The Hamming metric counts positions where two sequences hold
    different states; it is the only metric built in, selected because
    sequences are aligned and equal length.
    """
    if metric != "hamming":
        raise ConfigError(f"unsupported metric {metric!r}")
    if len(corpus) < 2:
        raise DataFormatError("need at least two sequences")
    mat = corpus.states_matrix
    n, length = mat.shape
    # matches(i, j) = sum_s <row_i == s> . <row_j == s>; exact in float32
    # because counts never exceed the sequence length
    matches = np.zeros((n, n), dtype=np.float64)
    for s in range(corpus.alphabet.size):
        one_hot = (mat == s).astype(np.float32)
        matches += (one_hot @ one_hot.T).astype(np.float64)
    dist = np.rint(length - matches)
    dist = (dist + dist.T) / 2.0
    np.fill_diagonal(dist, 0.0)
    return DistanceMatrix(dist)


def hierarchical_cluster(dmat: DistanceMatrix, linkage: str = "complete") -> Dendrogram:
    """Agglomerative merge tree under complete or average linkage.

    Greedy globally-minimal merges with Lance-Williams distance updates.
    Ties are broken by the lexicographically smallest (id-a, id-b) pair,
    which makes the tree deterministic on integer-valued distances.
    """
    if linkage not in LINKAGES:
        raise ConfigError(f"unsupported linkage {linkage!r}")
    n = dmat.n
    if n < 2:
        raise DataFormatError("need at least two observations to cluster")

    d = dmat.values.copy()
    np.fill_diagonal(d, np.inf)
    ids = np.arange(n, dtype=np.int64)
    sizes = np.ones(n, dtype=np.int64)
    merges: list[tuple[int, int, float]] = []

    for step in range(n - 1):
        height = d.min()
        tied = np.argwhere(d == height)
        best_pos = None
        best_key = None
        for i, j in tied:
            if i >= j:
                continue
            a, b = int(ids[i]), int(ids[j])
            key = (a, b) if a < b else (b, a)
            if best_key is None or key < best_key:
                best_key = key
                best_pos = (int(i), int(j))
        i, j = best_pos
        merges.append((best_key[0], best_key[1], float(height)))

        if linkage == "complete":
            row = np.maximum(d[i], d[j])
        else:
            row = (sizes[i] * d[i] + sizes[j] * d[j]) / (sizes[i] + sizes[j])
        row[i] = np.inf
        row[j] = np.inf
        d[i, :] = row
        d[:, i] = row
        d[j, :] = np.inf
        d[:, j] = np.inf
        sizes[i] += sizes[j]
        ids[i] = n + step

    return Dendrogram(tuple(merges), n)


def dunn_index(dmat: DistanceMatrix, assignment: ClusterAssignment) -> float:
    """Minimum inter-cluster distance over maximum intra-cluster diameter.

    Returns ``math.inf`` when every cluster has zero diameter (e.g. all
    singletons), mirroring the convention that perfectly tight clusters
    are infinitely well separated.
    """
    if assignment.k < 2:
        raise ConfigError("Dunn index requires at least two clusters")
    if assignment.n != dmat.n:
        raise DataFormatError("assignment size does not match distance matrix")
    labels = assignment.labels
    d = dmat.values
    same = labels[:, None] == labels[None, :]
    min_inter = d[~same].min()
    off_diag = ~np.eye(dmat.n, dtype=bool)
    intra = d[same & off_diag]
    max_diam = intra.max() if intra.size else 0.0
    if max_diam == 0.0:
        return math.inf
    return float(min_inter / max_diam)


def dunn_profile(
    dend: Dendrogram, dmat: DistanceMatrix, k_range: tuple[int, int]
) -> dict[int, float]:
    """Dunn index of the dendrogram cut at each k in the inclusive range."""
    lo, hi = int(k_range[0]), int(k_range[1])
    hi = min(hi, dend.n_leaves)
    if lo < 2 or lo > hi:
        raise ConfigError(f"empty or invalid k_range ({k_range[0]}, {k_range[1]})")
    return {
        k: dunn_index(dmat, ClusterAssignment(dend.cut(k))) for k in range(lo, hi + 1)
    }


def select_clusters(
    dend: Dendrogram,
    dmat: DistanceMatrix,
    k_range: tuple[int, int] = (2, 10),
    min_size: int | None = None,
) -> ClusterAssignment:
    """Pick the cut with the best Dunn index, then fold small clusters.

    Ties go to the smallest k.  Clusters smaller than ``min_size``
    (default: 5% of the corpus, at least 1) are merged into a single
    catch-all group, relabelled as the last cluster index.
    """
    profile = dunn_profile(dend, dmat, k_range)
    best_k = None
    best_value = -math.inf
    for k in sorted(profile):
        if profile[k] > best_value:
            best_value = profile[k]
            best_k = k
    assignment = ClusterAssignment(dend.cut(best_k))

    n = assignment.n
    if min_size is None:
        min_size = max(1, math.ceil(0.05 * n))
    sizes = assignment.sizes
    small = sizes < min_size
    if not small.any():
        return assignment
    if small.all():
        return ClusterAssignment(np.zeros(n, dtype=np.int64))
    kept = np.flatnonzero(~small)
    remap = {int(c): i for i, c in enumerate(kept)}
    catch_all = len(kept)
    labels = np.array(
        [remap.get(int(c), catch_all) for c in assignment.labels], dtype=np.int64
    )
    return ClusterAssignment(labels)


def sample_cluster(weights: ClusterWeights, rng: np.random.Generator) -> int:
    """Categorical draw over clusters proportional to the weights."""
    cum = np.cumsum(weights.normalized())
    idx = int(np.searchsorted(cum, rng.random(), side="right"))
    return min(idx, weights.k - 1)
