"""Charging-session parsing, outlier removal, discretisation and splitting."""
from __future__ import annotations

import csv
import io
import math
import statistics
from dataclasses import dataclass, field
from datetime import date, datetime, timedelta
from typing import Iterable, Sequence

import numpy as np

MINUTES_PER_DAY = 1440
CHARGER_CLASSES = ("slow", "fast", "rapid")
MANDATORY_FIELDS = ("charger_id", "plug_in", "plug_out")
OPTIONAL_FIELDS = ("energy_kwh", "charger_class")
DEFAULT_COLUMN_MAP = {f: f for f in MANDATORY_FIELDS + OPTIONAL_FIELDS}


class ConfigurationError(ValueError):
    pass


@dataclass(frozen=True)
class ChargingSession:
    charger_id: str
    plug_in: datetime
    plug_out: datetime
    energy_kwh: float = 0.0
    charger_class: str = "rapid"

    def __post_init__(self):
        if not self.plug_out > self.plug_in:
            raise ValueError("plug_out must be after plug_in")
        if not self.energy_kwh >= 0:
            raise ValueError("energy_kwh must be non-negative")
        if self.charger_class not in CHARGER_CLASSES:
            raise ValueError(f"unknown charger class {self.charger_class!r}")

    @property
    def duration_minutes(self) -> float:
        return (self.plug_out - self.plug_in).total_seconds() / 60.0


@dataclass(frozen=True)
class RejectedRow:
    row: int  # 1-based line number in the file, header is line 1
    reason: str

    def __str__(self) -> str:
        return f"row {self.row}: {self.reason}"


@dataclass
class OccupancySeries:
    """Binary occupancy per slot; index 0 is the first slot of ``start_date``."""

    charger_id: str
    start_date: date
    states: np.ndarray
    delta_minutes: int = 10

    def __post_init__(self):
        self.states = np.asarray(self.states, dtype=np.int8)
        if MINUTES_PER_DAY % self.delta_minutes:
            raise ValueError("delta_minutes must divide 1440")
        if self.states.ndim != 1 or len(self.states) % self.slots_per_day:
            raise ValueError("series length must be a whole number of days")
        if np.any((self.states != 0) & (self.states != 1)):
            raise ValueError("states must be binary")

    def __len__(self) -> int:
        return len(self.states)

    @property
    def slots_per_day(self) -> int:
        return MINUTES_PER_DAY // self.delta_minutes

    @property
    def n_days(self) -> int:
        return len(self.states) // self.slots_per_day

    def day_index(self, t):
        return np.asarray(t) // self.slots_per_day

    def slot_of_day(self, t):
        """1-based slot within the day."""
        return np.asarray(t) % self.slots_per_day + 1

    def day_of_week(self, t):
        """Sunday=0, Monday=1, ..., Saturday=6."""
        first = (self.start_date.weekday() + 1) % 7
        return (first + self.day_index(t)) % 7

    def is_weekend(self, t):
        d = self.day_of_week(t)
        return (d == 0) | (d == 6)

    def timestamp(self, t: int) -> datetime:
        start = datetime.combine(self.start_date, datetime.min.time())
        return start + timedelta(minutes=int(t) * self.delta_minutes)

    def index_of(self, when: datetime) -> int:
        start = datetime.combine(self.start_date, datetime.min.time())
        minutes = (when - start).total_seconds() / 60.0
        if minutes % self.delta_minutes:
            raise ValueError(f"{when} is not a slot boundary")
        return int(minutes // self.delta_minutes)


@dataclass
class SplitSeries:
    train: OccupancySeries
    test: OccupancySeries
    split_fraction: float
    n_train: int = field(init=False)

    def __post_init__(self):
        self.n_train = len(self.train.states)


def parse_timestamp(text: str) -> datetime:
    return datetime.fromisoformat(text.strip())


def parse_sessions(csv_text: str | io.TextIOBase, column_map: dict[str, str] | None = None,
                   default_class: str = "rapid"):
    """Parse session rows. Returns ``(sessions, rejects)``.

    ``column_map`` maps field name to the CSV header. ``energy_kwh`` and
    ``charger_class`` may be omitted from the map; the class then defaults to
    ``default_class``.
    """
    column_map = dict(DEFAULT_COLUMN_MAP if column_map is None else column_map)
    stream = io.StringIO(csv_text) if isinstance(csv_text, str) else csv_text
    reader = csv.reader(stream)
    header = next(reader, None)
    if header is None:
        raise ConfigurationError("empty CSV: no header row")
    header = [h.strip() for h in header]
    index = {}
    for f in MANDATORY_FIELDS:
        col = column_map.get(f)
        if col is None or col not in header:
            raise ConfigurationError(f"missing mandatory column for {f!r} (expected header {col!r})")
        index[f] = header.index(col)
    for f in OPTIONAL_FIELDS:
        col = column_map.get(f)
        if col is not None and col in header:
            index[f] = header.index(col)

    sessions, rejects = [], []
    for lineno, row in enumerate(reader, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        try:
            values = {f: row[i].strip() for f, i in index.items()}
        except IndexError:
            rejects.append(RejectedRow(lineno, "too few fields"))
            continue
        missing = [f for f in MANDATORY_FIELDS if not values[f]]
        if missing:
            rejects.append(RejectedRow(lineno, f"missing {', '.join(missing)}"))
            continue
        try:
            plug_in = parse_timestamp(values["plug_in"])
            plug_out = parse_timestamp(values["plug_out"])
        except ValueError as exc:
            rejects.append(RejectedRow(lineno, f"unparsable timestamp ({exc})"))
            continue
        if plug_out <= plug_in:
            rejects.append(RejectedRow(lineno, "plug_out <= plug_in"))
            continue
        try:
            energy = float(values["energy_kwh"]) if values.get("energy_kwh") else 0.0
        except ValueError:
            rejects.append(RejectedRow(lineno, f"unparsable energy {values['energy_kwh']!r}"))
            continue
        if not energy >= 0 or not math.isfinite(energy):
            rejects.append(RejectedRow(lineno, "energy_kwh must be finite and >= 0"))
            continue
        klass = (values.get("charger_class") or default_class).lower()
        if klass not in CHARGER_CLASSES:
            rejects.append(RejectedRow(lineno, f"unknown charger class {klass!r}"))
            continue
        sessions.append(ChargingSession(values["charger_id"], plug_in, plug_out, energy, klass))
    return sessions, rejects


def format_rejects(rejects: Iterable[RejectedRow]) -> str:
    return "".join(f"{r.row},{r.reason}\n" for r in rejects)


def serialize_sessions(sessions: Iterable[ChargingSession]) -> str:
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(MANDATORY_FIELDS + OPTIONAL_FIELDS)
    for s in sessions:
        w.writerow([s.charger_id, s.plug_in.isoformat(), s.plug_out.isoformat(),
                    repr(s.energy_kwh), s.charger_class])
    return out.getvalue()


def outlier_threshold(durations: Sequence[float]) -> float:
    """median + 3 population standard deviations."""
    return statistics.median(durations) + 3.0 * statistics.pstdev(durations)


def remove_outliers(sessions: Sequence[ChargingSession]):
    """Split sessions into ``(kept, removed)`` by the duration threshold.

    The threshold is computed once on the whole input, which must be a single
    charger class.
    """
    if not sessions:
        raise ValueError("no sessions")
    classes = {s.charger_class for s in sessions}
    if len(classes) > 1:
        raise ValueError(f"mixed charger classes {sorted(classes)}; filter by class first")
    limit = outlier_threshold([s.duration_minutes for s in sessions])
    kept = [s for s in sessions if s.duration_minutes <= limit]
    removed = [s for s in sessions if s.duration_minutes > limit]
    return kept, removed


def discretize(sessions: Iterable[ChargingSession], charger_id: str, start: date, end: date,
               delta_minutes: int = 10) -> OccupancySeries:
    """Occupancy of ``charger_id`` over days ``[start, end)``.

    A slot is occupied iff some session overlaps it for a positive length of time.
    """
    if MINUTES_PER_DAY % delta_minutes:
        raise ValueError("delta_minutes must divide 1440")
    n_days = (end - start).days
    if n_days <= 0:
        raise ValueError("empty date range")
    per_day = MINUTES_PER_DAY // delta_minutes
    n = n_days * per_day
    states = np.zeros(n, dtype=np.int8)
    origin = datetime.combine(start, datetime.min.time())
    slot_seconds = delta_minutes * 60
    outside = []
    for s in sessions:
        if s.charger_id != charger_id:
            continue
        a = (s.plug_in - origin).total_seconds()
        b = (s.plug_out - origin).total_seconds()
        if a < 0 or b > n * slot_seconds:
            outside.append(s)
            continue
        first = int(a // slot_seconds)
        last = math.ceil(b / slot_seconds)
        states[first:last] = 1
    if outside:
        listing = "; ".join(f"{s.plug_in.isoformat()}..{s.plug_out.isoformat()}" for s in outside[:5])
        more = f" (+{len(outside) - 5} more)" if len(outside) > 5 else ""
        raise ValueError(f"{len(outside)} session(s) of {charger_id} outside date range: {listing}{more}")
    return OccupancySeries(charger_id, start, states, delta_minutes)


def split_train_test(series: OccupancySeries, fraction: float = 0.7) -> SplitSeries:
    if not 0.0 < fraction < 1.0:
        raise ValueError(f"split fraction must lie in (0, 1), got {fraction}")
    if len(series) == 0:
        raise ValueError("empty series")
    n_train = math.floor(fraction * len(series))
    train = _slice(series, 0, n_train)
    test = _slice(series, n_train, len(series))
    return SplitSeries(train, test, fraction)


class _SliceSeries(OccupancySeries):
    """A window of a series starting at an arbitrary slot.

    Train/test halves of a per-step split need not end on a day boundary, so
    they keep the parent calendar through ``offset``.
    """

    def __init__(self, parent: OccupancySeries, lo: int, hi: int):
        self.charger_id = parent.charger_id
        self.start_date = parent.start_date
        self.delta_minutes = parent.delta_minutes
        self.states = parent.states[lo:hi].copy()
        self.offset = lo

    def day_index(self, t):
        return (np.asarray(t) + self.offset) // self.slots_per_day

    def slot_of_day(self, t):
        return (np.asarray(t) + self.offset) % self.slots_per_day + 1

    def timestamp(self, t: int) -> datetime:
        return super().timestamp(int(t) + self.offset)

    def index_of(self, when: datetime) -> int:
        return super().index_of(when) - self.offset

    @property
    def n_days(self) -> int:
        return math.ceil(len(self.states) / self.slots_per_day)


def _slice(series: OccupancySeries, lo: int, hi: int) -> OccupancySeries:
    return _SliceSeries(series, lo, hi)


def write_occupancy_csv(series_list: Iterable[OccupancySeries], stream) -> None:
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(["charger_id", "timestamp_slot_start", "state"])
    for s in series_list:
        for t, y in enumerate(s.states):
            w.writerow([s.charger_id, s.timestamp(t).isoformat(timespec="minutes"), int(y)])


def read_occupancy_csv(stream, delta_minutes: int = 10) -> dict[str, OccupancySeries]:
    reader = csv.DictReader(stream)
    rows: dict[str, list[tuple[datetime, int]]] = {}
    for r in reader:
        rows.setdefault(r["charger_id"], []).append((parse_timestamp(r["timestamp_slot_start"]), int(r["state"])))
    out = {}
    for cid, items in rows.items():
        items.sort()
        first = items[0][0]
        if first.time() != datetime.min.time():
            raise ValueError(f"occupancy for {cid} does not start at midnight")
        step = timedelta(minutes=delta_minutes)
        for j, (ts, _) in enumerate(items):
            if ts != first + j * step:
                raise ValueError(f"occupancy for {cid} has a gap or duplicate at {ts}")
        out[cid] = OccupancySeries(cid, first.date(), np.array([y for _, y in items]), delta_minutes)
    return out


def session_date_range(sessions: Sequence[ChargingSession]) -> tuple[date, date]:
    """Smallest whole-day range ``[start, end)`` covering every session."""
    start = min(s.plug_in for s in sessions).date()
    last = max(s.plug_out for s in sessions)
    end = last.date() + timedelta(days=1)
    if last == datetime.combine(last.date(), datetime.min.time()):
        end = last.date()
    return start, end
