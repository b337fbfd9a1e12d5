"""Window metrics, rolling evaluation over the test split, and reports."""
from __future__ import annotations

import csv
import io
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .features import test_origins
from .ingest import OccupancySeries


@dataclass(frozen=True)
class WindowScore:
    mae: float
    tp: int
    fp: int
    fn: int
    tn: int
    f1: float

    @property
    def accuracy(self) -> float:
        return 1.0 - self.mae


def _as_binary(v) -> np.ndarray:
    v = np.asarray(v)
    if np.any((v != 0) & (v != 1)):
        raise ValueError("windows must be binary")
    return v.astype(np.int8)


def window_score(pred, obs) -> WindowScore:
    pred, obs = _as_binary(pred), _as_binary(obs)
    if pred.shape != obs.shape:
        raise ValueError("prediction and observation windows differ in length")
    tp = int(np.sum((pred == 1) & (obs == 1)))
    fp = int(np.sum((pred == 1) & (obs == 0)))
    fn = int(np.sum((pred == 0) & (obs == 1)))
    tn = int(np.sum((pred == 0) & (obs == 0)))
    return WindowScore((fp + fn) / len(pred), tp, fp, fn, tn, _f1(tp, fp, fn))


def _f1(tp, fp, fn):
    denom = tp + 0.5 * (fn + fp)
    return tp / denom if denom > 0 else 0.0


def window_mae(pred, obs) -> float:
    return window_score(pred, obs).mae


def f1_score(pred, obs) -> float:
    return window_score(pred, obs).f1


def score_windows(preds: np.ndarray, obs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Row-wise accuracy and F1 for ``(N, k)`` prediction/observation arrays."""
    preds, obs = _as_binary(preds), _as_binary(obs)
    if preds.shape != obs.shape:
        raise ValueError("prediction and observation arrays differ in shape")
    tp = np.sum((preds == 1) & (obs == 1), axis=1)
    wrong = np.sum(preds != obs, axis=1)
    acc = 1.0 - wrong / preds.shape[1]
    denom = tp + 0.5 * wrong
    f1 = np.divide(tp, denom, out=np.zeros(len(tp)), where=denom > 0)
    return acc, f1


@dataclass(frozen=True)
class RunScore:
    method: str
    charger_id: str
    k: int
    run: int
    accuracy: float
    f1: float
    n_windows: int


@dataclass
class EvalReport:
    runs: list[RunScore] = field(default_factory=list)

    def extend(self, other: "EvalReport") -> "EvalReport":
        self.runs.extend(other.runs)
        return self

    def _groups(self):
        groups = defaultdict(list)
        for r in self.runs:
            groups[(r.method, r.charger_id, r.k)].append(r)
        return groups

    def mean(self, method: str, charger_id: str, k: int) -> tuple[float, float]:
        rows = self._groups()[(method, charger_id, k)]
        if not rows:
            raise KeyError((method, charger_id, k))
        return (float(np.mean([r.accuracy for r in rows])), float(np.mean([r.f1 for r in rows])))

    def run_count(self, method: str, charger_id: str, k: int) -> int:
        return len(self._groups()[(method, charger_id, k)])

    @property
    def methods(self) -> list[str]:
        return list(dict.fromkeys(r.method for r in self.runs))

    @property
    def chargers(self) -> list[str]:
        return sorted({r.charger_id for r in self.runs})

    @property
    def horizons(self) -> list[int]:
        return sorted({r.k for r in self.runs})

    def overall(self, method: str, k: int) -> tuple[float, float]:
        """Mean over chargers of each charger's run-averaged scores."""
        means = [self.mean(method, c, k) for c in self.chargers if (method, c, k) in self._groups()]
        return float(np.mean([a for a, _ in means])), float(np.mean([f for _, f in means]))

    def to_csv(self) -> str:
        out = io.StringIO()
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["method", "charger_id", "k", "run", "accuracy", "f1", "n_windows"])
        for r in sorted(self.runs, key=lambda r: (r.method, r.charger_id, r.k, r.run)):
            w.writerow([r.method, r.charger_id, r.k, r.run, f"{r.accuracy:.6f}", f"{r.f1:.6f}", r.n_windows])
        return out.getvalue()

    def summary(self) -> str:
        ks = self.horizons
        width = max([len(m) for m in self.methods] + [12])
        head = "k-step ahead".ljust(width) + "".join(f"{k:>9d}" for k in ks)
        lines = []
        for title, idx in (("Accuracy", 0), ("F1 score", 1)):
            lines += [title, head]
            for m in self.methods:
                cells = []
                for k in ks:
                    try:
                        cells.append(f"{self.overall(m, k)[idx]:9.4f}")
                    except (KeyError, ValueError):
                        cells.append(f"{'-':>9}")
                lines.append(m.ljust(width) + "".join(cells))
            lines.append("")
        chargers = self.chargers
        for m in self.methods:
            lines += [f"Per-charger accuracy ({m})",
                      "k".ljust(width) + "".join(f"{c:>12}" for c in chargers)]
            for k in ks:
                cells = []
                for c in chargers:
                    try:
                        cells.append(f"{self.mean(m, c, k)[0]:12.4f}")
                    except KeyError:
                        cells.append(f"{'-':>12}")
                lines.append(str(k).ljust(width) + "".join(cells))
            lines.append("")
        runs = sorted({self.run_count(m, c, k) for (m, c, k) in self._groups()})
        lines.append(f"runs per cell: {','.join(str(r) for r in runs)}")
        return "\n".join(lines) + "\n"


Predictor = Callable[[np.ndarray], np.ndarray]


def evaluate_windows(predictor: Predictor, series: OccupancySeries, origins: np.ndarray, k: int):
    preds = np.asarray(predictor(origins))
    if preds.shape != (len(origins), k):
        raise ValueError(f"predictor returned shape {preds.shape}, expected {(len(origins), k)}")
    obs = series.states[origins[:, None] + np.arange(k)[None, :]]
    return score_windows(preds, obs)


def rolling_evaluate(fit_predictor: Callable[[int], Predictor], series: OccupancySeries, n_train: int,
                     k: int, seeds: Sequence[int], m: int = 12, method: str = "model") -> EvalReport:
    """Score every admissible test window, once per seed.

    ``fit_predictor(seed)`` trains whatever needs training and returns a
    function mapping window origins to ``(N, k)`` binary predictions. History
    fed to the predictor at each origin is the observed series.
    """
    if not seeds:
        raise ValueError("need at least one run")
    origins = test_origins(len(series), n_train, m, k)
    report = EvalReport()
    for run, seed in enumerate(seeds):
        acc, f1 = evaluate_windows(fit_predictor(seed), series, origins, k)
        report.runs.append(RunScore(method, series.charger_id, k, run, float(acc.mean()),
                                    float(f1.mean()), len(origins)))
    return report
