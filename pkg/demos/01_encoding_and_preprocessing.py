"""Sequence representations and preprocessing.

A categorical day can be viewed two ways: as a vector with one state per
minute, or as a chain of (state, duration) episodes.  This script round
trips between the views, then walks the continuous-input path: rolling
mean smoothing followed by threshold discretization, exactly the steps
used to turn per-minute activity counts into a 4-state corpus.

Run from the repository root:  python demos/01_encoding_and_preprocessing.py
"""

from pathlib import Path

import numpy as np

from seqsynth import (
    StateAlphabet,
    IntervalSequence,
    discretize,
    rle_decode,
    rle_encode,
    smooth_rolling,
)
from seqsynth.io import load_continuous

FIXTURE = Path(__file__).resolve().parents[1] / "fixtures" / "activity_counts.csv"

# -- interval view vs episode view ------------------------------------------

alphabet = StateAlphabet(("home", "car", "work"))
minutes = [0] * 420 + [1] * 30 + [2] * 510 + [1] * 30 + [0] * 450
day = IntervalSequence(minutes, interval_minutes=1, id="example-day")

episodes = rle_encode(day)
print(f"{len(day)} one-minute intervals compress to {len(episodes)} episodes:")
for ep in episodes.episodes:
    label = alphabet.label(ep.state)
    print(f"  {label:<5} for {ep.duration:>3} min starting at minute {ep.start}")

assert rle_decode(episodes) == day
print("round trip episode -> interval -> episode is exact\n")

# -- continuous counts to categories -----------------------------------------

series = load_continuous(FIXTURE)[0]
print(f"loaded {series.id!r}: {len(series)} minutes of activity counts")

smoothed = smooth_rolling(series, window=5)
print(f"5-minute rolling mean: {len(series)} -> {len(smoothed)} values")

# zero stays its own category; then 1-760, 761-2020, >2020 counts/min
thresholds = [0.0, 760.0, 2020.0]
states = discretize(smoothed, thresholds)
share = np.bincount(states.states, minlength=4) / len(states)
print("time share per intensity category:")
for idx, fraction in enumerate(share):
    print(f"  category {idx + 1}: {fraction:6.1%}")

chain = rle_encode(states)
print(f"as episodes: {len(chain)} bouts, mean length "
      f"{np.mean([e.duration for e in chain.episodes]):.1f} min")
