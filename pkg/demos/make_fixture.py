"""Regenerate the shipped synthetic fixture (fixtures/activity_counts.csv).

The fixture imitates wearable accelerometer output: per-minute activity
counts for 24 hours plus 4 extra minutes (so a 5-minute rolling mean
yields exactly 1440 intervals).  Three behavioural profiles give the
corpus a clusterable structure:

* day-mover   - rests at night, light/moderate activity by day, a
                vigorous evening block
* sedentary   - mostly stationary with occasional light bouts
* night-shift - the day-mover pattern shifted into the night

Activity arrives in bouts (episodes) whose intensity level maps onto the
0 / 1-760 / 761-2020 / >2020 counts-per-minute categories.

Run from the repository root:  python demos/make_fixture.py
"""

from pathlib import Path

import numpy as np

LENGTH = 1444
N_PER_PROFILE = (60, 55, 45)  # day-mover, sedentary, night-shift
SEED = 20260808

# per-level (low, high) counts/min; level 0 is stationary
LEVEL_RANGES = ((0, 0), (120, 700), (800, 1900), (2100, 3600))
# mean bout lengths in minutes per level
BOUT_MEANS = (120, 35, 20, 12)


def _bout_length(rng, level):
    return max(3, int(rng.exponential(BOUT_MEANS[level])))


def _daypart_weights(profile, minute):
    """Relative chance of each activity level given profile and clock time."""
    hour = (minute // 60) % 24
    if profile == "day-mover":
        if hour < 7 or hour >= 23:
            return (0.92, 0.06, 0.02, 0.0)
        if 17 <= hour < 19:
            return (0.10, 0.25, 0.30, 0.35)
        return (0.25, 0.40, 0.30, 0.05)
    if profile == "sedentary":
        if hour < 8 or hour >= 22:
            return (0.97, 0.03, 0.0, 0.0)
        return (0.65, 0.30, 0.05, 0.0)
    # night-shift: active 22:00-06:00, resting by day
    if 8 <= hour < 16:
        return (0.92, 0.06, 0.02, 0.0)
    if hour >= 22 or hour < 2:
        return (0.15, 0.30, 0.35, 0.20)
    return (0.30, 0.40, 0.25, 0.05)


def make_sequence(rng, profile):
    values = np.zeros(LENGTH, dtype=np.int64)
    t = 0
    prev_level = None
    while t < LENGTH:
        weights = np.array(_daypart_weights(profile, t), dtype=float)
        if prev_level is not None:
            weights = weights.copy()
            weights[prev_level] = 0.0  # force a level change per bout
            if weights.sum() == 0.0:
                weights = np.ones(4)
        level = rng.choice(4, p=weights / weights.sum())
        length = min(_bout_length(rng, level), LENGTH - t)
        lo, hi = LEVEL_RANGES[level]
        if level == 0:
            values[t : t + length] = 0
        else:
            center = rng.uniform(lo, hi)
            noise = rng.normal(0, (hi - lo) * 0.04, length)
            values[t : t + length] = np.clip(
                np.rint(center + noise), max(lo, 1), hi
            ).astype(np.int64)
        prev_level = level
        t += length
    return values


def main():
    rng = np.random.default_rng(SEED)
    rows = []
    for profile, count in zip(("day-mover", "sedentary", "night-shift"), N_PER_PROFILE):
        for i in range(count):
            rows.append((f"{profile}-{i:03d}", make_sequence(rng, profile)))

    out = Path(__file__).resolve().parents[1] / "fixtures" / "activity_counts.csv"
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", encoding="utf-8", newline="") as fh:
        fh.write("id," + ",".join(f"v{i + 1}" for i in range(LENGTH)) + "\n")
        for sid, values in rows:
            fh.write(sid + "," + ",".join(str(int(v)) for v in values) + "\n")
    print(f"wrote {out} ({len(rows)} sequences x {LENGTH} minutes)")


if __name__ == "__main__":
    main()
