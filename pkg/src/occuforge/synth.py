"""Synthetic occupancy: per-day-type two-state Markov chains, optionally
overridden slot-by-slot by a fixed schedule."""
from __future__ import annotations

from dataclasses import dataclass
from datetime import date

import numpy as np

from .ingest import MINUTES_PER_DAY, OccupancySeries


@dataclass
class SynthSpec:
    days: int
    weekday_p01: float = 0.1
    weekday_p10: float = 0.3
    weekend_p01: float = 0.1
    weekend_p10: float = 0.3
    weekday_schedule: dict[int, int] | None = None  # 1-based slot -> state
    weekend_schedule: dict[int, int] | None = None
    initial_state: int = 0
    seed: int = 0
    start_date: date = date(2018, 3, 5)
    charger_id: str = "synth"
    delta_minutes: int = 10

    def __post_init__(self):
        for name in ("weekday_p01", "weekday_p10", "weekend_p01", "weekend_p10"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {v}")
        if self.days < 1:
            raise ValueError("days must be >= 1")
        if self.initial_state not in (0, 1):
            raise ValueError("initial_state must be 0 or 1")


def stationary_rate(p01: float, p10: float) -> float:
    return p01 / (p01 + p10)


def synth_generate(spec: SynthSpec) -> OccupancySeries:
    per_day = MINUTES_PER_DAY // spec.delta_minutes
    n = spec.days * per_day
    skeleton = OccupancySeries(spec.charger_id, spec.start_date, np.zeros(n, dtype=np.int8), spec.delta_minutes)
    t = np.arange(n)
    weekend = skeleton.is_weekend(t)
    slots = skeleton.slot_of_day(t)
    p01 = np.where(weekend, spec.weekend_p01, spec.weekday_p01)
    p10 = np.where(weekend, spec.weekend_p10, spec.weekday_p10)
    forced = np.full(n, -1, dtype=np.int8)
    for sched, mask in ((spec.weekday_schedule, ~weekend), (spec.weekend_schedule, weekend)):
        if sched:
            lookup = np.full(per_day + 1, -1, dtype=np.int8)
            for slot, v in sched.items():
                lookup[slot] = v
            forced[mask] = lookup[slots[mask]]
    u = np.random.default_rng(spec.seed).random(n)
    states = np.empty(n, dtype=np.int8)
    prev = spec.initial_state
    for j in range(n):
        if forced[j] >= 0:
            prev = forced[j]
        elif prev:
            prev = 0 if u[j] < p10[j] else 1
        else:
            prev = 1 if u[j] < p01[j] else 0
        states[j] = prev
    return OccupancySeries(spec.charger_id, spec.start_date, states, spec.delta_minutes)


def parse_schedule(text: str) -> dict[int, int]:
    """``"48-96=1, *=0"`` -> slot map. ``*`` fills every slot not named."""
    out: dict[int, int] = {}
    default = None
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        rng, _, val = part.partition("=")
        state = int(val)
        if state not in (0, 1):
            raise ValueError(f"schedule state must be 0 or 1: {part!r}")
        rng = rng.strip()
        if rng == "*":
            default = state
            continue
        lo, _, hi = rng.partition("-")
        for s in range(int(lo), int(hi or lo) + 1):
            out[s] = state
    if default is not None:
        return {s: out.get(s, default) for s in range(1, 145)}
    return out
