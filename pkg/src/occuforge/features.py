"""Day-type occupancy profiles and per-step samples.

Feature layout of the 147-long time vector, for a step ``t``::

    [slot_of_day(t) / 144, day_of_week(t) / 6, weekend(t), profile(t)[0:144]]

where ``profile(t)`` is the weekday or weekend occupancy-rate profile picked
by the day type of ``t``.  The history window is most-recent-first:
``x1 = (y[t-1], y[t-2], ..., y[t-m])``.  Targets are ``y[t], ..., y[t+k-1]``.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .ingest import OccupancySeries

DEFAULT_HISTORY = 12


class CoverageError(ValueError):
    pass


@dataclass(frozen=True)
class DayTypeProfiles:
    weekday: np.ndarray
    weekend: np.ndarray
    source: str = ""

    @property
    def slots_per_day(self) -> int:
        return len(self.weekday)

    def to_csv(self, stream) -> None:
        w = csv.writer(stream, lineterminator="\n")
        w.writerow(["slot", "weekday_rate", "weekend_rate"])
        for s, (a, b) in enumerate(zip(self.weekday, self.weekend), start=1):
            w.writerow([s, repr(float(a)), repr(float(b))])

    @classmethod
    def from_csv(cls, stream, source: str = "") -> "DayTypeProfiles":
        rows = list(csv.DictReader(stream))
        rows.sort(key=lambda r: int(r["slot"]))
        return cls(np.array([float(r["weekday_rate"]) for r in rows]),
                   np.array([float(r["weekend_rate"]) for r in rows]), source)


def day_type_profile(train: OccupancySeries) -> DayTypeProfiles:
    """Mean occupancy per slot of day, separately for weekdays and weekends."""
    t = np.arange(len(train))
    slots = train.slot_of_day(t) - 1
    weekend = train.is_weekend(t)
    per_day = train.slots_per_day
    profiles = []
    for mask, label in ((~weekend, "weekday"), (weekend, "weekend")):
        counts = np.bincount(slots[mask], minlength=per_day)
        if np.any(counts == 0):
            raise CoverageError(f"insufficient day-type coverage: {label} slots missing from training data")
        sums = np.bincount(slots[mask], weights=train.states[mask], minlength=per_day)
        profiles.append(sums / counts)
    source = f"{train.charger_id}:{train.timestamp(0).isoformat()}+{len(train)}"
    return DayTypeProfiles(profiles[0], profiles[1], source)


def time_features(series: OccupancySeries, profiles: DayTypeProfiles, steps) -> np.ndarray:
    """The 147-long (for 144 slots) time/tendency vector for each step in ``steps``."""
    steps = np.atleast_1d(np.asarray(steps))
    per_day = series.slots_per_day
    weekend = series.is_weekend(steps)
    out = np.empty((len(steps), 3 + per_day))
    out[:, 0] = series.slot_of_day(steps) / per_day
    out[:, 1] = series.day_of_week(steps) / 6.0
    out[:, 2] = weekend
    out[:, 3:] = np.where(weekend[:, None], profiles.weekend[None, :], profiles.weekday[None, :])
    return out


@dataclass
class Sample:
    x1: np.ndarray
    x2: np.ndarray
    y: np.ndarray | None
    origin: tuple[str, int]


def _check_bounds(series_len: int, t: int, m: int, k: int | None) -> None:
    if t - m < 0:
        raise IndexError(f"history bound violated: t - m = {t - m} precedes series start")
    if t > series_len:
        raise IndexError(f"step {t} lies past the series end")
    if k is not None and t + k - 1 > series_len - 1:
        raise IndexError(f"horizon bound violated: t + k - 1 = {t + k - 1} exceeds series end {series_len - 1}")


def build_sample(series: OccupancySeries, profiles: DayTypeProfiles, t: int,
                 m: int = DEFAULT_HISTORY, k: int = 1) -> Sample:
    _check_bounds(len(series), t, m, k)
    x1 = series.states[t - m:t][::-1].astype(float)
    x2 = time_features(series, profiles, [t])[0]
    y = series.states[t:t + k].astype(float)
    return Sample(x1, x2, y, (series.charger_id, t))


@dataclass
class Dataset:
    """Samples stored column-wise; row ``j`` is the sample at ``origins[j]``."""

    x1: np.ndarray
    x2: np.ndarray
    y: np.ndarray | None
    origins: np.ndarray
    m: int
    k: int
    series: OccupancySeries | None = field(default=None, repr=False)
    profiles: DayTypeProfiles | None = field(default=None, repr=False)

    def __len__(self) -> int:
        return len(self.origins)

    def __getitem__(self, j: int) -> Sample:
        cid = self.series.charger_id if self.series is not None else ""
        y = None if self.y is None else self.y[j]
        return Sample(self.x1[j], self.x2[j], y, (cid, int(self.origins[j])))

    @property
    def samples(self) -> list[Sample]:
        return [self[j] for j in range(len(self))]

    def subset(self, idx) -> "Dataset":
        return Dataset(self.x1[idx], self.x2[idx], None if self.y is None else self.y[idx],
                       self.origins[idx], self.m, self.k, self.series, self.profiles)

    @classmethod
    def from_samples(cls, samples: list[Sample]) -> "Dataset":
        if not samples:
            raise ValueError("no samples")
        y = None if samples[0].y is None else np.stack([s.y for s in samples])
        return cls(np.stack([s.x1 for s in samples]), np.stack([s.x2 for s in samples]), y,
                   np.array([s.origin[1] for s in samples]), len(samples[0].x1),
                   0 if y is None else y.shape[1])

    def frames(self, n_frames: int) -> np.ndarray:
        """Per-step feature frames ``V_s = (time features of s, y[s-1])``.

        Shape ``(N, n_frames, 148)`` ordered oldest first, ending at the origin.
        """
        if self.series is None or self.profiles is None:
            raise ValueError("frames need the source series and profiles")
        if n_frames > self.m:
            raise ValueError("n_frames exceeds the history window")
        parts = []
        for lag in range(n_frames - 1, -1, -1):
            tf = time_features(self.series, self.profiles, self.origins - lag)
            parts.append(np.concatenate([tf, self.x1[:, lag:lag + 1]], axis=1))
        return np.stack(parts, axis=1)

    @staticmethod
    def concat(datasets: list["Dataset"]) -> "PooledDataset":
        return PooledDataset(datasets)


class PooledDataset:
    """Several per-charger datasets trained as one."""

    def __init__(self, parts: list[Dataset]):
        if not parts:
            raise ValueError("nothing to pool")
        self.parts = parts
        self.m, self.k = parts[0].m, parts[0].k
        self._owner = np.concatenate([np.full(len(p), i) for i, p in enumerate(parts)])
        self._local = np.concatenate([np.arange(len(p)) for p in parts])
        self.x1 = np.concatenate([p.x1 for p in parts])
        self.x2 = np.concatenate([p.x2 for p in parts])
        self.y = np.concatenate([p.y for p in parts])

    def __len__(self) -> int:
        return len(self._owner)

    def subset(self, idx):
        idx = np.asarray(idx)
        return _PooledBatch(self, idx)


class _PooledBatch:
    def __init__(self, pool: PooledDataset, idx):
        self.pool, self.idx = pool, idx
        self.x1, self.x2, self.y = pool.x1[idx], pool.x2[idx], pool.y[idx]
        self.m, self.k = pool.m, pool.k

    def __len__(self) -> int:
        return len(self.idx)

    def frames(self, n_frames: int) -> np.ndarray:
        out = np.empty((len(self.idx), n_frames, self.x2.shape[1] + 1))
        for i, part in enumerate(self.pool.parts):
            sel = self.pool._owner[self.idx] == i
            if np.any(sel):
                out[sel] = part.subset(self.pool._local[self.idx][sel]).frames(n_frames)
        return out


def make_inputs(series: OccupancySeries, profiles: DayTypeProfiles, origins,
                m: int = DEFAULT_HISTORY, k: int | None = None) -> Dataset:
    """Vectorised sample construction for many origins (targets only if ``k``)."""
    origins = np.asarray(origins, dtype=int)
    for t in (origins.min(), origins.max()):
        _check_bounds(len(series), int(t), m, k)
    lags = np.arange(1, m + 1)
    x1 = series.states[origins[:, None] - lags[None, :]].astype(float)
    x2 = time_features(series, profiles, origins)
    y = None
    if k is not None:
        y = series.states[origins[:, None] + np.arange(k)[None, :]].astype(float)
    return Dataset(x1, x2, y, origins, m, k or 0, series, profiles)


def build_dataset(series: OccupancySeries, profiles: DayTypeProfiles, m: int = DEFAULT_HISTORY,
                  k: int = 1, lo: int = 0, hi: int | None = None) -> Dataset:
    """One sample per admissible origin, stride 1, using only steps in ``[lo, hi)``.

    A sample qualifies when its whole history and target window lie inside
    the range, so a range of length ``L`` yields ``L - m - k + 1`` samples.
    """
    hi = len(series) if hi is None else min(hi, len(series))
    lo = max(lo, 0)
    if hi - lo < m + k:
        raise ValueError(f"series too short: {hi - lo} steps available, need m + k = {m + k}")
    return make_inputs(series, profiles, np.arange(lo + m, hi - k + 1), m, k)


def train_dataset(series: OccupancySeries, profiles: DayTypeProfiles, n_train: int,
                  m: int = DEFAULT_HISTORY, k: int = 1) -> Dataset:
    """Samples whose history and targets all fall inside the first ``n_train`` steps."""
    return build_dataset(series, profiles, m, k, 0, n_train)


def test_origins(series_len: int, n_train: int, m: int, k: int) -> np.ndarray:
    """Window starts scored on the test split.

    History may reach back into the training tail, so every test step that
    still has ``k`` targets ahead is an origin: ``test_len - k + 1`` windows.
    """
    lo = max(n_train, m)
    hi = series_len - k + 1
    if hi <= lo:
        raise ValueError("no admissible test windows")
    return np.arange(lo, hi)


test_origins.__test__ = False
