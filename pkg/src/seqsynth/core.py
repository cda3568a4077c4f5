"""Categorical sequence types, run-length coding, and preprocessing.

A sequence is a fixed-length vector of alphabet indices, one entry per
sampling interval (e.g. 1440 one-minute slots for a day).  The episode
view chains (state, duration) pairs; both views round-trip losslessly
through :func:`rle_encode` / :func:`rle_decode`.  Continuous series
(e.g. accelerometer counts per minute) become interval sequences via
rolling-mean smoothing and threshold discretization.

All types are immutable after construction and safe to share across
workers.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import DataFormatError

__all__ = [
    "StateAlphabet",
    "IntervalSequence",
    "Episode",
    "EpisodeSequence",
    "Corpus",
    "ContinuousSeries",
    "rle_encode",
    "rle_decode",
    "run_bounds",
    "smooth_rolling",
    "discretize",
    "discretize_corpus",
    "threshold_alphabet",
]


def _frozen_array(values, dtype) -> np.ndarray:
    arr = np.array(values, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class StateAlphabet:
    """Ordered collection of distinct state labels."""

    labels: tuple[str, ...]

    def __post_init__(self):
        labels = tuple(str(x) for x in self.labels)
        object.__setattr__(self, "labels", labels)
        if not labels:
            raise DataFormatError("alphabet must contain at least one label")
        if any(not lab for lab in labels):
            raise DataFormatError("state labels must be non-empty strings")
        if len(set(labels)) != len(labels):
            raise DataFormatError("state labels must be unique")

    @property
    def size(self) -> int:
        return len(self.labels)

    @cached_property
    def _lookup(self) -> dict[str, int]:
        return {lab: i for i, lab in enumerate(self.labels)}

    def index(self, label: str) -> int:
        try:
            return self._lookup[label]
        except KeyError:
            raise DataFormatError(f"unknown state label {label!r}") from None

    def label(self, index: int) -> str:
        return self.labels[index]

    def __contains__(self, label: str) -> bool:
        return label in self._lookup

    def __len__(self) -> int:
        return len(self.labels)

    @classmethod
    def from_observed(cls, labels: Iterable[str]) -> "StateAlphabet":
        """Alphabet from the set of observed labels, sorted for determinism."""
        return cls(tuple(sorted(set(labels))))


@dataclass(frozen=True, eq=False)
class IntervalSequence:
    """Fixed-length vector of alphabet indices, one per sampling interval."""

    states: np.ndarray
    interval_minutes: int = 1
    id: str | None = None

    def __post_init__(self):
        arr = _frozen_array(self.states, np.int64)
        if arr.ndim != 1 or arr.size == 0:
            raise DataFormatError("interval sequence must be a non-empty 1-D vector")
        if arr.min() < 0:
            raise DataFormatError("state indices must be non-negative")
        if self.interval_minutes < 1:
            raise DataFormatError("interval_minutes must be positive")
        object.__setattr__(self, "states", arr)

    def __len__(self) -> int:
        return int(self.states.size)

    def __eq__(self, other) -> bool:
        if not isinstance(other, IntervalSequence):
            return NotImplemented
        return (
            self.interval_minutes == other.interval_minutes
            and self.id == other.id
            and np.array_equal(self.states, other.states)
        )

    __hash__ = None  # type: ignore[assignment]


@dataclass(frozen=True)
class Episode:
    """A maximal run of one state: (state, duration, start offset)."""

    state: int
    duration: int
    start: int

    def __post_init__(self):
        if self.state < 0:
            raise DataFormatError("episode state must be non-negative")
        if self.duration < 1:
            raise DataFormatError("episode duration must be at least 1")
        if self.start < 0:
            raise DataFormatError("episode start must be non-negative")


@dataclass(frozen=True)
class EpisodeSequence:
    """Run-length encoded chain of episodes covering a whole sequence."""

    episodes: tuple[Episode, ...]
    total_length: int
    interval_minutes: int = 1
    id: str | None = None

    def __post_init__(self):
        eps = tuple(self.episodes)
        object.__setattr__(self, "episodes", eps)
        if not eps:
            raise DataFormatError("episode sequence must contain at least one episode")
        t = 0
        prev_state = None
        for ep in eps:
            if ep.state == prev_state:
                raise DataFormatError("adjacent episodes must have different states")
            if ep.start != t:
                raise DataFormatError(
                    f"episode start {ep.start} inconsistent with running total {t}"
                )
            t += ep.duration
            prev_state = ep.state
        if t != self.total_length:
            raise DataFormatError(
                f"episode durations sum to {t}, expected total_length {self.total_length}"
            )

    def __len__(self) -> int:
        return len(self.episodes)


@dataclass(frozen=True, eq=False)
class ContinuousSeries:
    """Non-negative real-valued series (e.g. activity counts per minute)."""

    values: np.ndarray
    id: str | None = None

    def __post_init__(self):
        arr = _frozen_array(self.values, np.float64)
        if arr.ndim != 1 or arr.size == 0:
            raise DataFormatError("continuous series must be a non-empty 1-D vector")
        if not np.isfinite(arr).all():
            raise DataFormatError("continuous series contains missing or non-finite values")
        if arr.min() < 0:
            raise DataFormatError("continuous series contains negative values")
        object.__setattr__(self, "values", arr)

    def __len__(self) -> int:
        return int(self.values.size)

    def __eq__(self, other) -> bool:
        if not isinstance(other, ContinuousSeries):
            return NotImplemented
        return self.id == other.id and np.array_equal(self.values, other.values)

    __hash__ = None  # type: ignore[assignment]


@dataclass(frozen=True, eq=False)
class Corpus:
    """Aligned interval sequences sharing one alphabet.

    Every sequence must carry a unique id and all sequences must have the
    same length and interval duration.  ``cluster_labels``, when present,
    maps every sequence id to a cluster index.
    """

    alphabet: StateAlphabet
    sequences: tuple[IntervalSequence, ...]
    cluster_labels: Mapping[str, int] | None = None

    def __post_init__(self):
        seqs = tuple(self.sequences)
        object.__setattr__(self, "sequences", seqs)
        ids = [s.id for s in seqs]
        if any(i is None for i in ids):
            raise DataFormatError("every corpus sequence must have an id")
        if len(set(ids)) != len(ids):
            dupes = sorted({i for i in ids if ids.count(i) > 1})
            raise DataFormatError(f"duplicate sequence ids: {dupes[:5]}")
        if seqs:
            n = len(seqs[0])
            im = seqs[0].interval_minutes
            for s in seqs:
                if len(s) != n:
                    raise DataFormatError(
                        f"sequence {s.id!r} has length {len(s)}, expected {n}"
                    )
                if s.interval_minutes != im:
                    raise DataFormatError("sequences disagree on interval_minutes")
                if s.states.max() >= self.alphabet.size:
                    raise DataFormatError(
                        f"sequence {s.id!r} uses a state outside the alphabet"
                    )
        if self.cluster_labels is not None:
            labels = dict(self.cluster_labels)
            missing = [i for i in ids if i not in labels]
            if missing:
                raise DataFormatError(f"cluster labels missing for ids: {missing[:5]}")
            extra = sorted(set(labels) - set(ids))
            if extra:
                raise DataFormatError(f"cluster labels for unknown ids: {extra[:5]}")
            if any(int(v) < 0 for v in labels.values()):
                raise DataFormatError("cluster labels must be non-negative")
            object.__setattr__(self, "cluster_labels", labels)

    def __len__(self) -> int:
        return len(self.sequences)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Corpus):
            return NotImplemented
        return (
            self.alphabet == other.alphabet
            and self.sequences == other.sequences
            and self.cluster_labels == other.cluster_labels
        )

    __hash__ = None  # type: ignore[assignment]

    @property
    def length(self) -> int:
        """Number of intervals per sequence (0 for an empty corpus)."""
        return len(self.sequences[0]) if self.sequences else 0

    @property
    def interval_minutes(self) -> int:
        return self.sequences[0].interval_minutes if self.sequences else 1

    @property
    def ids(self) -> tuple[str, ...]:
        return tuple(s.id for s in self.sequences)

    @cached_property
    def states_matrix(self) -> np.ndarray:
        """All sequences stacked as an (n_sequences, length) readonly array."""
        if not self.sequences:
            return _frozen_array(np.empty((0, 0)), np.int64)
        mat = np.vstack([s.states for s in self.sequences])
        mat.setflags(write=False)
        return mat

    def subset(self, indices: Sequence[int]) -> "Corpus":
        """Sub-corpus of the given sequence positions, preserving labels."""
        seqs = tuple(self.sequences[int(i)] for i in indices)
        labels = None
        if self.cluster_labels is not None:
            labels = {s.id: self.cluster_labels[s.id] for s in seqs}
        return Corpus(self.alphabet, seqs, labels)

    def with_cluster_labels(self, labels: Mapping[str, int] | None) -> "Corpus":
        return Corpus(self.alphabet, self.sequences, labels)

    @classmethod
    def from_arrays(
        cls,
        alphabet: StateAlphabet,
        arrays: Iterable[Sequence[int]],
        ids: Sequence[str] | None = None,
        interval_minutes: int = 1,
    ) -> "Corpus":
        arrays = list(arrays)
        if ids is None:
            ids = [f"seq-{i:05d}" for i in range(len(arrays))]
        elif len(ids) != len(arrays):
            raise DataFormatError(
                f"{len(ids)} ids given for {len(arrays)} sequences"
            )
        seqs = tuple(
            IntervalSequence(a, interval_minutes, str(i)) for a, i in zip(arrays, ids)
        )
        return cls(alphabet, seqs)


def run_bounds(states: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Start offsets and lengths of the maximal constant runs of a vector."""
    states = np.asarray(states)
    change = np.flatnonzero(states[1:] != states[:-1]) + 1
    starts = np.concatenate(([0], change))
    lengths = np.concatenate((change, [states.size])) - starts
    return starts, lengths


def rle_encode(seq: IntervalSequence) -> EpisodeSequence:
    """Run-length encode an interval sequence into its episode chain."""
    starts, lengths = run_bounds(seq.states)
    episodes = tuple(
        Episode(int(seq.states[s]), int(d), int(s)) for s, d in zip(starts, lengths)
    )
    return EpisodeSequence(episodes, len(seq), seq.interval_minutes, seq.id)


def rle_decode(eseq: EpisodeSequence) -> IntervalSequence:
    """Expand an episode chain back into its interval sequence (exact inverse)."""
    states = np.repeat(
        np.fromiter((e.state for e in eseq.episodes), np.int64, len(eseq.episodes)),
        np.fromiter((e.duration for e in eseq.episodes), np.int64, len(eseq.episodes)),
    )
    return IntervalSequence(states, eseq.interval_minutes, eseq.id)


def smooth_rolling(series: ContinuousSeries, window: int) -> ContinuousSeries:
    """Rolling arithmetic mean over full windows only.

    The output has length ``len(series) - window + 1``; entry ``i`` is the
    mean of ``values[i .. i+window-1]``.  No padding is applied, so a
    1440-entry series smoothed with window 5 yields 1436 entries.
    """
    if window < 1:
        raise DataFormatError("window must be at least 1")
    v = series.values
    if window > v.size:
        raise DataFormatError(
            f"window exceeds series: window={window}, length={v.size}"
        )
    csum = np.concatenate(([0.0], np.cumsum(v, dtype=np.float64)))
    out = (csum[window:] - csum[:-window]) / window
    # rounding can leave a mean a hair outside [min, max]; clip to be safe
    out = np.clip(out, v.min(), v.max())
    return ContinuousSeries(out, series.id)


def threshold_alphabet(thresholds: Sequence[float]) -> StateAlphabet:
    """Alphabet induced by a threshold list: labels "1" .. "k+1"."""
    return StateAlphabet(tuple(str(i + 1) for i in range(len(thresholds) + 1)))


def discretize(
    series: ContinuousSeries, thresholds: Sequence[float]
) -> IntervalSequence:
    """Map a continuous series onto threshold-bounded categories.

    Categories are left-open/right-closed above each threshold: with
    thresholds ``[0, 760, 2020]`` a value of 0 maps to state "1",
    values in (0, 760] to "2", (760, 2020] to "3" and anything above
    2020 to "4".  The mapping is monotone in the input value.
    """
    th = np.asarray(thresholds, dtype=np.float64)
    if th.ndim != 1 or th.size == 0:
        raise DataFormatError("thresholds must be a non-empty 1-D list")
    if not (np.diff(th) > 0).all():
        raise DataFormatError("thresholds must be strictly ascending")
    states = np.searchsorted(th, series.values, side="left")
    return IntervalSequence(states, 1, series.id)


def discretize_corpus(
    series_list: Iterable[ContinuousSeries],
    thresholds: Sequence[float],
    interval_minutes: int = 1,
) -> Corpus:
    """Discretize a batch of continuous series into one corpus."""
    alphabet = threshold_alphabet(thresholds)
    seqs = []
    for i, series in enumerate(series_list):
        iv = discretize(series, thresholds)
        sid = series.id if series.id is not None else f"seq-{i:05d}"
        seqs.append(IntervalSequence(iv.states, interval_minutes, sid))
    return Corpus(alphabet, tuple(seqs))
