"""Sequence generation engines.

Two engines are provided:

* ``paired-mc`` - the paired state/duration engine.  Source sequences
  are run-length encoded into episode chains; generation alternates a
  state draw (from transitions observed within a clock-time window of
  the current end time, conditioned on the preceding one or more
  episode states) with a duration draw for the chosen state.  Source
  sequences are first extended by one window length with per-interval
  baseline steps so the window statistics near the end of the day are
  unbiased; generation runs to the extended horizon and the output is
  truncated back to the target length.

* ``tvmc`` - a time-varying Markov chain baseline that draws each
  interval's state conditioned on the previous interval's state and the
  clock time.

Reproducibility contract: every output sequence is generated from an
independent random stream derived from ``(config.seed, ordinal)``, so a
batch is byte-identical for a given (corpus, config, count) regardless
of how many workers run it.
"""

from __future__ import annotations

import math
import multiprocessing
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Mapping, NamedTuple, Sequence

import numpy as np

from .clustering import ClusterAssignment, ClusterWeights, sample_cluster
from .core import Corpus, Episode, IntervalSequence, run_bounds
from .errors import ConfigError, DataFormatError, GenerationStallError

__all__ = [
    "ENGINES",
    "MAX_ORDER",
    "SynthesisConfig",
    "config_from_dict",
    "config_to_dict",
    "TvmcModel",
    "FirstEpisodeTable",
    "Candidates",
    "CandidateIndex",
    "build_index",
    "candidates",
    "initialize",
    "DurationSampler",
    "silverman_bandwidth",
    "sample_transition",
    "extend_with_buffer",
    "SynthesisState",
    "GenerationResult",
    "PairedMcEngine",
    "TvmcEngine",
    "synthesize_paired_mc",
    "synthesize_tvmc",
    "verify_realizable",
    "SequenceProvenance",
    "BatchProvenance",
    "synthesize_batch",
]

ENGINES = ("paired-mc", "tvmc")
MAX_ORDER = 3
SAMPLERS = ("direct", "kde")
BUFFERS = ("tvmc", "none")
DURATION_POOLS = ("window", "all_day")

_WIDEN_FACTORS = (1, 2, 4)
# stream tags keep buffer imputation and per-sequence generation independent
_BUFFER_STREAM = 0
_SEQUENCE_STREAM = 1


def _stream(seed: int, *key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence((seed,) + key))


@dataclass(frozen=True)
class SynthesisConfig:
    """Knobs for one synthesis run.

    delta          half-width (in intervals) of the candidate time window
    order          number of preceding episode states conditioned on
    target_length  output length in intervals
    sampler        duration sampler: "direct" or "kde"
    kde_bandwidth  fixed Gaussian bandwidth; None selects Silverman's rule
    buffer         "tvmc" extends sources by delta before indexing; "none" skips
    seed           master seed; all randomness derives from it
    duration_pool  "window" draws durations from the windowed candidates,
                   "all_day" from all observed durations of the chosen state
    """

    delta: int = 60
    order: int = 1
    target_length: int = 1440
    sampler: str = "direct"
    kde_bandwidth: float | None = None
    buffer: str = "tvmc"
    seed: int = 0
    duration_pool: str = "window"

    def __post_init__(self):
        if self.delta < 0:
            raise ConfigError("delta must be non-negative")
        if not 1 <= self.order <= MAX_ORDER:
            raise ConfigError(f"order must be in [1, {MAX_ORDER}]")
        if self.target_length < 1:
            raise ConfigError("target_length must be positive")
        if self.sampler not in SAMPLERS:
            raise ConfigError(f"unknown sampler {self.sampler!r}")
        if self.kde_bandwidth is not None and not self.kde_bandwidth > 0:
            raise ConfigError("kde bandwidth must be positive")
        if self.buffer not in BUFFERS:
            raise ConfigError(f"unknown buffer strategy {self.buffer!r}")
        if not isinstance(self.seed, int) or self.seed < 0 or self.seed >= 2**64:
            raise ConfigError("seed must be a non-negative 64-bit integer")
        if self.duration_pool not in DURATION_POOLS:
            raise ConfigError(f"unknown duration pool {self.duration_pool!r}")


def config_from_dict(data: Mapping) -> tuple[SynthesisConfig, int | None, list | None]:
    """Parse the JSON config mapping; returns (config, count, weights)."""
    sampler = data.get("sampler", "direct")
    bandwidth = None
    if isinstance(sampler, Mapping):
        rule = sampler.get("bandwidth_rule", "silverman")
        if rule not in (None, "silverman"):
            bandwidth = float(rule)
        sampler = sampler.get("type", "direct")
    cfg = SynthesisConfig(
        delta=int(data.get("delta", 60)),
        order=int(data.get("order", 1)),
        target_length=int(data.get("target_length", 1440)),
        sampler=str(sampler),
        kde_bandwidth=bandwidth,
        buffer=str(data.get("buffer", "tvmc")),
        seed=int(data.get("seed", 0)),
        duration_pool=str(data.get("duration_pool", "window")),
    )
    count = data.get("count")
    weights = data.get("weights")
    return cfg, (None if count is None else int(count)), weights


def config_to_dict(
    config: SynthesisConfig, count: int | None = None, weights=None
) -> dict:
    """Canonical JSON-ready form of a config (inverse of config_from_dict)."""
    rule = "silverman" if config.kde_bandwidth is None else config.kde_bandwidth
    out: dict = {
        "delta": config.delta,
        "order": config.order,
        "target_length": config.target_length,
        "sampler": {"type": config.sampler, "bandwidth_rule": rule},
        "buffer": config.buffer,
        "seed": config.seed,
        "duration_pool": config.duration_pool,
    }
    if count is not None:
        out["count"] = int(count)
    if weights is not None:
        out["weights"] = [float(w) for w in weights]
    return out


class TvmcModel:
    """Empirical per-interval transition counts with daily wrap-around.

    ``step(state, t, u)`` draws the state at interval ``t`` given
    ``state`` at ``t - 1``.  Times at or past the sequence length reuse
    the statistics of ``t mod length``; the transition into interval 0
    is estimated from the day wrap (last interval -> first interval).
    When no transition was ever observed from ``state`` at that time,
    the draw falls back to the marginal distribution of states observed
    at that interval, and the fallback is reported.
    """

    def __init__(self, trans_cum, first_cum, marginal_cum, length, n_states):
        self.trans_cum = trans_cum
        self.first_cum = first_cum
        self.marginal_cum = marginal_cum
        self.length = length
        self.n_states = n_states

    @classmethod
    def fit(cls, corpus: Corpus) -> "TvmcModel":
        mat = corpus.states_matrix
        n_seq, length = mat.shape
        n_states = corpus.alphabet.size
        prev = np.roll(mat, 1, axis=1)  # prev[:, 0] wraps to the last interval
        flat = prev * n_states + mat
        counts = np.empty((length, n_states, n_states), dtype=np.int64)
        for t in range(length):
            counts[t] = np.bincount(flat[:, t], minlength=n_states * n_states).reshape(
                n_states, n_states
            )
        marginal = counts.sum(axis=1)  # distribution of states at interval t
        first = np.bincount(mat[:, 0], minlength=n_states)
        return cls(
            counts.cumsum(axis=2),
            first.cumsum(),
            marginal.cumsum(axis=1),
            length,
            n_states,
        )

    def initial_state(self, u: float) -> int:
        row = self.first_cum
        return int(np.searchsorted(row, u * row[-1], side="right"))

    def step(self, state: int, t: int, u: float) -> tuple[int, bool]:
        t = t % self.length
        row = self.trans_cum[t, state]
        total = row[-1]
        fallback = total == 0
        if fallback:
            row = self.marginal_cum[t]
            total = row[-1]
        nxt = int(np.searchsorted(row, u * total, side="right"))
        return nxt, bool(fallback)


class FirstEpisodeTable:
    """Empirical (state, duration) distribution of sequence-opening episodes."""

    def __init__(self, corpus: Corpus):
        mat = corpus.states_matrix
        n_seq, length = mat.shape
        states = mat[:, 0]
        changed = mat != mat[:, :1]
        durations = np.where(changed.any(axis=1), changed.argmax(axis=1), length)
        counts = np.bincount(states, minlength=corpus.alphabet.size)
        self.state_cum = counts.cumsum()
        order = np.argsort(states, kind="stable")
        bounds = np.concatenate(([0], self.state_cum))
        self.durations_by_state = [
            durations[order[bounds[s] : bounds[s + 1]]]
            for s in range(corpus.alphabet.size)
        ]

    def draw(self, rng: np.random.Generator) -> tuple[int, int]:
        row = self.state_cum
        state = int(np.searchsorted(row, rng.random() * row[-1], side="right"))
        pool = self.durations_by_state[state]
        return state, int(pool[rng.integers(pool.size)])


def initialize(corpus: Corpus, rng: np.random.Generator) -> tuple[int, int]:
    """Draw an opening (state, duration) pair.

    The state is proportional to the frequency of first-interval states
    across the corpus; the duration is drawn from the observed opening
    episode durations of that state.
    """
    if len(corpus) == 0:
        raise DataFormatError("cannot initialize from an empty corpus")
    return FirstEpisodeTable(corpus).draw(rng)


class Candidates(NamedTuple):
    """Multiset of windowed (state, duration) transition candidates."""

    states: np.ndarray
    durations: np.ndarray

    @property
    def size(self) -> int:
        return int(self.states.size)


_EMPTY_CANDIDATES = Candidates(
    np.empty(0, dtype=np.int64), np.empty(0, dtype=np.int64)
)


class _Block(NamedTuple):
    starts: np.ndarray
    next_states: np.ndarray
    durations: np.ndarray
    prev2: np.ndarray
    prev3: np.ndarray
    sources: np.ndarray


class CandidateIndex:
    """Observed transitions keyed by the immediately preceding state.

    One record exists per episode that has a predecessor: its state,
    duration, start time, up to two further preceding states (-1 when
    the episode is too close to the start of its sequence), and the
    source sequence position.  Records are sorted by start time within
    each preceding-state block so a window query is two binary searches.
    """

    def __init__(self, blocks: dict[int, _Block], n_states: int, horizon: int, delta: int):
        self._blocks = blocks
        self.n_states = n_states
        self.horizon = horizon
        self.delta = delta

    @property
    def n_records(self) -> int:
        return sum(b.starts.size for b in self._blocks.values())

    def candidates(
        self,
        a_c: int,
        context: Sequence[int] = (),
        t_c: int = 0,
        delta: int | None = None,
        order: int = 1,
    ) -> Candidates:
        """All records with |start - t_c| <= delta whose predecessors match.

        ``context`` lists the states before the current one, most recent
        first; order k uses up to k-1 of them.  Records that do not have
        enough predecessors to check a requested context entry are
        excluded.
        """
        if not 1 <= order <= MAX_ORDER:
            raise ConfigError(f"order must be in [1, {MAX_ORDER}]")
        if any(int(c) < 0 for c in context):
            # -1 marks "no predecessor" internally and must not be queryable
            raise ConfigError("context states must be non-negative")
        if delta is None:
            delta = self.delta
        block = self._blocks.get(int(a_c))
        if block is None:
            return _EMPTY_CANDIDATES
        lo = int(np.searchsorted(block.starts, t_c - delta, side="left"))
        hi = int(np.searchsorted(block.starts, t_c + delta, side="right"))
        if lo >= hi:
            return _EMPTY_CANDIDATES
        states = block.next_states[lo:hi]
        durations = block.durations[lo:hi]
        if order >= 2 and len(context) >= 1:
            mask = block.prev2[lo:hi] == int(context[0])
            if order >= 3 and len(context) >= 2:
                mask &= block.prev3[lo:hi] == int(context[1])
            states = states[mask]
            durations = durations[mask]
        return Candidates(states, durations)


def build_index(corpus: Corpus, delta: int) -> CandidateIndex:
    """Index every transition in the corpus for windowed lookup."""
    if len(corpus) == 0:
        raise DataFormatError("cannot index an empty corpus")
    starts_l, next_l, dur_l, prev1_l, prev2_l, prev3_l, src_l = ([] for _ in range(7))
    for si, seq in enumerate(corpus.sequences):
        ep_starts, ep_durs = run_bounds(seq.states)
        m = ep_starts.size
        if m < 2:
            continue
        ep_states = seq.states[ep_starts]
        starts_l.append(ep_starts[1:])
        next_l.append(ep_states[1:])
        dur_l.append(ep_durs[1:])
        prev1_l.append(ep_states[:-1])
        pad = np.full(1, -1, dtype=np.int64)
        prev2_l.append(np.concatenate((pad, ep_states[: m - 2])))
        prev3_l.append(
            np.concatenate((pad, pad, ep_states[: max(m - 3, 0)]))[: m - 1]
        )
        src_l.append(np.full(m - 1, si, dtype=np.int64))

    blocks: dict[int, _Block] = {}
    if starts_l:
        starts = np.concatenate(starts_l)
        nxt = np.concatenate(next_l)
        dur = np.concatenate(dur_l)
        prev1 = np.concatenate(prev1_l)
        prev2 = np.concatenate(prev2_l)
        prev3 = np.concatenate(prev3_l)
        src = np.concatenate(src_l)
        order = np.lexsort((starts, prev1))
        starts, nxt, dur, prev1, prev2, prev3, src = (
            a[order] for a in (starts, nxt, dur, prev1, prev2, prev3, src)
        )
        for state in np.unique(prev1):
            lo = int(np.searchsorted(prev1, state, side="left"))
            hi = int(np.searchsorted(prev1, state, side="right"))
            blocks[int(state)] = _Block(
                starts[lo:hi],
                nxt[lo:hi],
                dur[lo:hi],
                prev2[lo:hi],
                prev3[lo:hi],
                src[lo:hi],
            )
    return CandidateIndex(blocks, corpus.alphabet.size, corpus.length, delta)


def candidates(
    index: CandidateIndex,
    a_c: int,
    context: Sequence[int] = (),
    t_c: int = 0,
    delta: int | None = None,
    order: int = 1,
) -> Candidates:
    """Module-level alias for :meth:`CandidateIndex.candidates`."""
    return index.candidates(a_c, context, t_c, delta, order)


def silverman_bandwidth(values: np.ndarray) -> float:
    """Rule-of-thumb Gaussian bandwidth: 0.9 * min(sd, IQR/1.34) * m^(-1/5)."""
    values = np.asarray(values, dtype=np.float64)
    m = values.size
    if m < 2:
        return 0.0
    sd = float(np.std(values, ddof=1))
    q75, q25 = np.percentile(values, [75.0, 25.0])
    iqr = float(q75 - q25)
    spread = min(sd, iqr / 1.34)
    if spread <= 0.0:
        spread = max(sd, iqr / 1.34)
    return 0.9 * spread * m ** (-0.2)


@dataclass(frozen=True)
class DurationSampler:
    """Duration draw strategy: the observed value itself, or KDE-smoothed.

    The direct sampler only ever returns observed durations.  The KDE
    sampler adds Gaussian kernel noise to a uniformly chosen observation,
    rounds to the nearest integer interval, and clamps to at least 1.
    """

    kind: str = "direct"
    bandwidth: float | None = None

    def __post_init__(self):
        if self.kind not in SAMPLERS:
            raise ConfigError(f"unknown sampler {self.kind!r}")
        if self.bandwidth is not None and not self.bandwidth > 0:
            raise ConfigError("kde bandwidth must be positive")

    def draw(self, durations: np.ndarray, rng: np.random.Generator) -> int:
        value = int(durations[rng.integers(durations.size)])
        if self.kind == "direct":
            return value
        h = self.bandwidth if self.bandwidth is not None else silverman_bandwidth(durations)
        if h > 0.0:
            value = int(np.rint(value + h * rng.standard_normal()))
        return max(value, 1)


def sample_transition(
    cands: Candidates,
    sampler: DurationSampler,
    rng: np.random.Generator,
    duration_pools: Mapping[int, np.ndarray] | None = None,
) -> tuple[int, int]:
    """Two-stage draw from a candidate multiset.

    The state is chosen proportional to its multiplicity among the
    candidates; the duration is then drawn from that state's candidate
    durations (or, when ``duration_pools`` is given, from the supplied
    per-state pool instead).
    """
    if cands.size == 0:
        raise ValueError("no candidates")
    uniq, counts = np.unique(cands.states, return_counts=True)
    cum = counts.cumsum()
    state = int(uniq[np.searchsorted(cum, rng.random() * cum[-1], side="right")])
    if duration_pools is not None:
        pool = np.asarray(duration_pools[state])
    else:
        pool = cands.durations[cands.states == state]
    return state, sampler.draw(pool, rng)


def extend_with_buffer(
    corpus: Corpus, delta: int, rng: np.random.Generator
) -> Corpus:
    """Continue every sequence for ``delta`` intervals with baseline steps.

    Transition statistics for times past the end of the day wrap around
    (interval ``t`` reuses the statistics of ``t mod length``).  The
    original prefix of each sequence is unchanged.

    All sequences advance in lockstep so the inner loop is vectorized;
    sequence i consumes the i-th row of one uniform draw, which matches
    a sequence-by-sequence walk of the same stream.
    """
    if delta == 0:
        return corpus
    model = TvmcModel.fit(corpus)
    n = corpus.length
    n_seq = len(corpus)
    u = rng.random((n_seq, delta))
    trans = model.trans_cum
    marg = model.marginal_cum
    ext = np.empty((n_seq, delta), dtype=np.int64)
    cur = corpus.states_matrix[:, -1].copy()
    for k in range(delta):
        t = (n + k) % n
        rows = trans[t, cur]
        totals = rows[:, -1]
        missing = totals == 0
        if missing.any():
            rows = rows.copy()
            rows[missing] = marg[t]
            totals = rows[:, -1]
        # count of cumulative cells <= u*total == searchsorted(..., 'right')
        cur = (rows <= (u[:, k] * totals)[:, None]).sum(axis=1)
        ext[:, k] = cur
    out = []
    for i, seq in enumerate(corpus.sequences):
        states = np.concatenate((seq.states, ext[i]))
        out.append(IntervalSequence(states, seq.interval_minutes, seq.id))
    return Corpus(corpus.alphabet, tuple(out), corpus.cluster_labels)


class SynthesisState:
    """Mutable per-generation state of the episode engine.

    Tracks the emitted episodes, the current state, the current end time
    (always the sum of emitted durations), and the most recent preceding
    states (newest first, capped at the maximum supported context).
    Local to one generation; never shared across threads.
    """

    __slots__ = ("states", "durations", "starts", "current_state", "end_time", "context")

    def __init__(self, state: int, duration: int):
        self.states = [state]
        self.durations = [duration]
        self.starts = [0]
        self.current_state = state
        self.end_time = duration
        self.context: list[int] = []

    def advance(self, state: int, duration: int) -> None:
        """Append a new episode and shift the context window."""
        self.context = [self.current_state] + self.context[: MAX_ORDER - 2]
        self.states.append(state)
        self.durations.append(duration)
        self.starts.append(self.end_time)
        self.current_state = state
        self.end_time += duration

    def extend_current(self, amount: int = 1) -> None:
        """Lengthen the episode in progress without a state change."""
        self.durations[-1] += amount
        self.end_time += amount

    def episodes(self) -> tuple[Episode, ...]:
        return tuple(
            Episode(s, d, t)
            for s, d, t in zip(self.states, self.durations, self.starts)
        )


@dataclass(frozen=True)
class GenerationResult:
    """One generated sequence plus its internal episode chain.

    ``states`` has exactly the target length.  ``episodes`` (engines
    that work in episodes only) is the internal chain before truncation:
    durations are as sampled, so the final episode may overrun the
    horizon.  ``fallbacks`` counts how often each recovery rule fired.
    """

    states: np.ndarray
    episodes: tuple[Episode, ...] | None
    fallbacks: dict[str, int]

    @property
    def fallback_total(self) -> int:
        return sum(self.fallbacks.values())


def _check_engine_inputs(corpus: Corpus, config: SynthesisConfig) -> None:
    if len(corpus) == 0:
        raise DataFormatError("cannot synthesize from an empty corpus")
    if corpus.length != config.target_length:
        raise DataFormatError(
            f"target_length {config.target_length} does not match corpus "
            f"length {corpus.length}"
        )


class PairedMcEngine:
    """Windowed episode-resampling generator built from one corpus.

    Building the engine performs the buffer imputation (when enabled),
    fits the per-interval baseline used by the fallback ladder, and
    indexes every observed transition.  ``generate`` may then be called
    any number of times with independent random streams.
    """

    name = "paired-mc"

    def __init__(self, corpus: Corpus, config: SynthesisConfig, stream_key: int = 0):
        _check_engine_inputs(corpus, config)
        self.config = config
        self.n = corpus.length
        self.tvmc = TvmcModel.fit(corpus)
        self.first = FirstEpisodeTable(corpus)
        if config.buffer == "tvmc" and config.delta > 0:
            buffered = extend_with_buffer(
                corpus,
                config.delta,
                _stream(config.seed, _BUFFER_STREAM, stream_key),
            )
            self.stop = self.n + config.delta
        else:
            buffered = corpus
            self.stop = self.n
        self.index = build_index(buffered, config.delta)
        self.sampler = DurationSampler(config.sampler, config.kde_bandwidth)
        self.duration_pools = (
            _all_day_durations(corpus) if config.duration_pool == "all_day" else None
        )
        # every widened window is tried before dropping an order
        self._widen = (1,) if config.delta == 0 else _WIDEN_FACTORS

    def generate(self, rng: np.random.Generator) -> GenerationResult:
        cfg = self.config
        index = self.index
        stop = self.stop
        delta = cfg.delta
        fast = cfg.sampler == "direct" and self.duration_pools is None

        run = SynthesisState(*self.first.draw(rng))
        fallbacks = {"window_widened": 0, "order_reduced": 0, "tvmc_steps": 0}

        while run.end_time < stop:
            cands = None
            used_order = cfg.order
            widened = False
            for k in range(cfg.order, 0, -1):
                ctx_k = run.context[: k - 1]
                for w in self._widen:
                    c = index.candidates(
                        run.current_state, ctx_k, run.end_time, delta * w, k
                    )
                    if c.states.size:
                        cands = c
                        used_order = k
                        widened = w > 1
                        break
                if cands is not None:
                    break

            if cands is None:
                # final resort: a single baseline interval, then resume
                nxt, _ = self.tvmc.step(run.current_state, run.end_time, rng.random())
                fallbacks["tvmc_steps"] += 1
                if nxt == run.current_state:
                    run.extend_current(1)
                else:
                    run.advance(nxt, 1)
                continue

            if used_order < cfg.order:
                fallbacks["order_reduced"] += 1
            elif widened:
                fallbacks["window_widened"] += 1

            if fast:
                # uniform record draw == state-by-multiplicity then
                # duration-within-state when both use the windowed set
                i = int(rng.integers(cands.states.size))
                state, dur = int(cands.states[i]), int(cands.durations[i])
            else:
                state, dur = sample_transition(
                    cands, self.sampler, rng, self.duration_pools
                )
            run.advance(state, dur)

        states = np.repeat(
            np.asarray(run.states, dtype=np.int64),
            np.asarray(run.durations, dtype=np.int64),
        )[: self.n]
        return GenerationResult(states, run.episodes(), fallbacks)


def _all_day_durations(corpus: Corpus) -> dict[int, np.ndarray]:
    """Durations of every episode in the corpus, grouped by state."""
    states_l, durs_l = [], []
    for seq in corpus.sequences:
        starts, lengths = run_bounds(seq.states)
        states_l.append(seq.states[starts])
        durs_l.append(lengths)
    states = np.concatenate(states_l)
    durs = np.concatenate(durs_l)
    return {
        int(s): durs[states == s] for s in np.unique(states)
    }


class TvmcEngine:
    """Per-interval baseline generator (time-varying Markov chain)."""

    name = "tvmc"

    def __init__(self, corpus: Corpus, config: SynthesisConfig, stream_key: int = 0):
        _check_engine_inputs(corpus, config)
        self.config = config
        self.n = corpus.length
        self.model = TvmcModel.fit(corpus)

    def generate(self, rng: np.random.Generator) -> GenerationResult:
        n = self.n
        trans = self.model.trans_cum
        marg = self.model.marginal_cum
        searchsorted = np.searchsorted
        states = np.empty(n, dtype=np.int64)
        cur = self.model.initial_state(rng.random())
        states[0] = cur
        us = rng.random(n - 1)
        fallback_count = 0
        for t in range(1, n):
            row = trans[t, cur]
            total = row[-1]
            if total == 0:
                row = marg[t]
                total = row[-1]
                fallback_count += 1
            cur = int(searchsorted(row, us[t - 1] * total, side="right"))
            states[t] = cur
        return GenerationResult(states, None, {"marginal": fallback_count})


_ENGINE_CLASSES = {"paired-mc": PairedMcEngine, "tvmc": TvmcEngine}


def synthesize_paired_mc(
    corpus: Corpus, config: SynthesisConfig, rng: np.random.Generator | None = None
) -> IntervalSequence:
    """Build a paired-MC engine over the corpus and generate one sequence."""
    engine = PairedMcEngine(corpus, config)
    if rng is None:
        rng = _stream(config.seed, _SEQUENCE_STREAM, 0)
    result = engine.generate(rng)
    return IntervalSequence(result.states, corpus.interval_minutes)


def synthesize_tvmc(
    corpus: Corpus, config: SynthesisConfig, rng: np.random.Generator | None = None
) -> IntervalSequence:
    """Generate one sequence with the per-interval baseline."""
    engine = TvmcEngine(corpus, config)
    if rng is None:
        rng = _stream(config.seed, _SEQUENCE_STREAM, 0)
    result = engine.generate(rng)
    return IntervalSequence(result.states, corpus.interval_minutes)


def verify_realizable(
    result: GenerationResult, index: CandidateIndex, config: SynthesisConfig
) -> bool:
    """Replay an order-1 direct generation against the index.

    True when every non-initial internal episode matches at least one
    index record with the right preceding state, state, duration, and a
    start within the base window.  Only meaningful for generations with
    zero fallbacks (fallback episodes are legitimately unindexed).
    """
    episodes = result.episodes or ()
    for i in range(1, len(episodes)):
        ep = episodes[i]
        cands = index.candidates(episodes[i - 1].state, (), ep.start, config.delta, 1)
        if not np.any((cands.states == ep.state) & (cands.durations == ep.duration)):
            return False
    return True


@dataclass(frozen=True)
class SequenceProvenance:
    id: str
    ordinal: int
    cluster: int
    fallbacks: Mapping[str, int]


@dataclass(frozen=True)
class BatchProvenance:
    """What produced a synthesized corpus, per sequence and in total."""

    engine: str
    config: SynthesisConfig
    count: int
    weights: tuple[float, ...]
    sequences: tuple[SequenceProvenance, ...]

    def fallback_totals(self) -> dict[str, int]:
        totals: dict[str, int] = {}
        for sp in self.sequences:
            for key, value in sp.fallbacks.items():
                totals[key] = totals.get(key, 0) + int(value)
        return totals

    def to_dict(self) -> dict:
        return {
            "engine": self.engine,
            "config": config_to_dict(self.config),
            "count": self.count,
            "weights": list(self.weights),
            "fallback_totals": self.fallback_totals(),
            "sequences": [
                {
                    "id": sp.id,
                    "ordinal": sp.ordinal,
                    "cluster": sp.cluster,
                    "fallbacks": dict(sp.fallbacks),
                }
                for sp in self.sequences
            ],
        }


def _resolve_assignment(
    corpus: Corpus, assignment
) -> np.ndarray | None:
    """Per-sequence cluster vector aligned to corpus order, or None."""
    if assignment is None:
        return None
    if isinstance(assignment, ClusterAssignment):
        if assignment.n != len(corpus):
            raise DataFormatError("assignment size does not match corpus")
        return assignment.labels
    labels = dict(assignment)
    missing = [i for i in corpus.ids if i not in labels]
    if missing:
        raise DataFormatError(f"assignment missing ids: {missing[:5]}")
    vec = np.array([int(labels[i]) for i in corpus.ids], dtype=np.int64)
    return ClusterAssignment.from_labels(vec).labels


# worker state lives at module level so forked workers inherit it without
# re-pickling; the spawn fallback rebuilds it in the initializer
_WORKER: dict = {}


def _engine_for(cluster: int) -> object:
    engines = _WORKER["engines"]
    if cluster not in engines:
        cls = _ENGINE_CLASSES[_WORKER["engine_name"]]
        engines[cluster] = cls(
            _WORKER["clusters"][cluster], _WORKER["config"], stream_key=cluster
        )
    return engines[cluster]


def _generate_one(ordinal: int) -> tuple[int, int, np.ndarray, dict]:
    config = _WORKER["config"]
    rng = _stream(config.seed, _SEQUENCE_STREAM, ordinal)
    if _WORKER["draw_cluster"]:
        cluster = sample_cluster(_WORKER["weights"], rng)
    else:
        cluster = 0
    try:
        result = _engine_for(cluster).generate(rng)
    except GenerationStallError as exc:
        raise GenerationStallError(str(exc), exc.stall_time, ordinal) from None
    return ordinal, cluster, result.states, result.fallbacks


# one stacked matrix per chunk keeps inter-process transfer cheap
_ChunkResult = tuple[list[int], list[int], np.ndarray, list[dict]]


def _worker_chunk(ordinals: Sequence[int]) -> _ChunkResult:
    config = _WORKER["config"]
    n_states = _WORKER["clusters"][0].alphabet.size
    dtype = np.int16 if n_states < 2**15 else np.int64
    states = np.empty((len(ordinals), config.target_length), dtype=dtype)
    ords: list[int] = []
    clusters: list[int] = []
    fallbacks: list[dict] = []
    for row, ordinal in enumerate(ordinals):
        i, cluster, seq_states, fb = _generate_one(ordinal)
        ords.append(i)
        clusters.append(cluster)
        states[row] = seq_states
        fallbacks.append(fb)
    return ords, clusters, states, fallbacks


def _worker_init(clusters, config, engine_name, weights, draw_cluster) -> None:
    _WORKER.clear()
    _WORKER.update(
        clusters=clusters,
        config=config,
        engine_name=engine_name,
        weights=weights,
        draw_cluster=draw_cluster,
        engines={},
    )


def synthesize_batch(
    corpus: Corpus,
    config: SynthesisConfig,
    count: int,
    engine: str = "paired-mc",
    assignment=None,
    weights=None,
    workers: int = 1,
    id_prefix: str = "synth",
) -> tuple[Corpus, BatchProvenance]:
    """Generate ``count`` sequences, optionally spread over clusters.

    With an assignment, each output first draws a cluster (weights
    default to cluster sizes) and then synthesizes from that cluster's
    sub-corpus.  Output ``i`` depends only on (corpus, config, i), so
    results are byte-identical for any ``workers`` value.  Engine errors
    propagate with the ordinal of the failing sequence attached.
    """
    if engine not in ENGINES:
        raise ConfigError(f"unknown engine {engine!r}")
    if count < 0:
        raise ConfigError("count must be non-negative")
    _check_engine_inputs(corpus, config)

    labels_vec = _resolve_assignment(corpus, assignment)
    if labels_vec is None:
        clusters = [corpus]
        cluster_weights = ClusterWeights(np.ones(1))
        draw_cluster = False
    else:
        k = int(labels_vec.max()) + 1
        clusters = [
            corpus.subset(np.flatnonzero(labels_vec == c)) for c in range(k)
        ]
        if weights is None:
            cluster_weights = ClusterWeights(
                np.bincount(labels_vec, minlength=k).astype(np.float64)
            )
        elif isinstance(weights, ClusterWeights):
            cluster_weights = weights
        else:
            cluster_weights = ClusterWeights(np.asarray(weights, dtype=np.float64))
        if cluster_weights.k != k:
            raise ConfigError(
                f"{cluster_weights.k} weights given for {k} clusters"
            )
        draw_cluster = True

    _worker_init(clusters, config, engine, cluster_weights, draw_cluster)
    if count == 0:
        chunk_results: list[_ChunkResult] = []
    elif workers <= 1:
        chunk_results = [_worker_chunk(range(count))]
    else:
        # build every engine before the pool starts so forked workers
        # inherit them instead of rebuilding per process
        for c in range(len(clusters)):
            _engine_for(c)
        chunk_size = max(1, math.ceil(count / (workers * 4)))
        chunks = [
            range(lo, min(lo + chunk_size, count))
            for lo in range(0, count, chunk_size)
        ]
        try:
            ctx = multiprocessing.get_context("fork")
            init, initargs = None, ()
        except ValueError:
            ctx = multiprocessing.get_context("spawn")
            init = _worker_init
            initargs = (clusters, config, engine, cluster_weights, draw_cluster)
        with ProcessPoolExecutor(
            max_workers=workers, mp_context=ctx, initializer=init, initargs=initargs
        ) as pool:
            chunk_results = list(pool.map(_worker_chunk, chunks))
    _WORKER.clear()

    results = [
        (ordinal, cluster, states, fb)
        for ords, clusts, matrix, fbs in chunk_results
        for ordinal, cluster, states, fb in zip(ords, clusts, matrix, fbs)
    ]
    results.sort(key=lambda r: r[0])
    seqs = []
    provenance = []
    for ordinal, cluster, states, fallbacks in results:
        sid = f"{id_prefix}-{ordinal:06d}"
        seqs.append(IntervalSequence(states, corpus.interval_minutes, sid))
        provenance.append(
            SequenceProvenance(sid, ordinal, cluster, dict(fallbacks))
        )
    labels = {sp.id: sp.cluster for sp in provenance} if seqs else None
    out_corpus = Corpus(corpus.alphabet, tuple(seqs), labels)
    batch = BatchProvenance(
        engine,
        config,
        count,
        tuple(float(w) for w in cluster_weights.weights),
        tuple(provenance),
    )
    return out_corpus, batch
