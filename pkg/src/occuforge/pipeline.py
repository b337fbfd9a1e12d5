"""Fit-and-score helpers shared by the CLI, sweeps and the acceptance suite."""
from __future__ import annotations

import numpy as np

from .config import RunConfig
from .evaluate import EvalReport, Predictor, rolling_evaluate
from .features import Dataset, DayTypeProfiles, day_type_profile, make_inputs, train_dataset
from .ingest import OccupancySeries, split_train_test
from .models import (
    HybridModel,
    RecurrentModel,
    lag_features,
    logistic_fit,
    walk_forward_predict,
)
from .neuralnet import train


def prepare(series: OccupancySeries, split_fraction: float) -> tuple[DayTypeProfiles, int]:
    split = split_train_test(series, split_fraction)
    return day_type_profile(split.train), split.n_train


def _seeds(seed: int) -> tuple[np.random.Generator, int]:
    init_seq, train_seq = np.random.SeedSequence(seed).spawn(2)
    return np.random.default_rng(init_seq), int(train_seq.generate_state(1)[0])


def fit_model(method: str, datasets: list[Dataset] | Dataset, k: int, cfg: RunConfig, seed: int):
    """Train one model of ``method`` on one dataset or a pooled list."""
    if isinstance(datasets, list):
        data = datasets[0] if len(datasets) == 1 else Dataset.concat(datasets)
    else:
        data = datasets
    init_rng, train_seed = _seeds(seed)
    hp = cfg.hyperparams
    hp.seed = train_seed
    if method == "hybrid":
        model = HybridModel.init(cfg.hybrid_config(k), init_rng)
    elif method in ("lstm", "gru"):
        model = RecurrentModel.init(cfg.recurrent_config(method, k), init_rng)
    else:
        raise ValueError(f"{method!r} is not a network method")
    return train(model, data, hp)


def fit_logistic(series_list: list[OccupancySeries], n_trains: list[int], cfg: RunConfig, seed: int):
    feats, targets = [], []
    for series, n_train in zip(series_list, n_trains):
        t = np.arange(max(cfg.m, 3), n_train)
        feats.append(lag_features(series, t))
        targets.append(series.states[t])
    return logistic_fit(np.concatenate(feats), np.concatenate(targets), cfg.logistic_config(seed))


def make_predictor(method: str, model, series: OccupancySeries, profiles: DayTypeProfiles,
                   k: int, cfg: RunConfig) -> Predictor:
    if method == "logistic":
        return lambda origins: walk_forward_predict(model, series, origins, k, cfg.threshold)
    return lambda origins: model.predict(make_inputs(series, profiles, origins, cfg.m))


def evaluate_method(method: str, series_list: list[OccupancySeries], k: int, cfg: RunConfig,
                    seeds: list[int] | None = None) -> EvalReport:
    """Train and roll-evaluate ``method`` on every series for every seed.

    Per-charger mode trains one model per series; pooled mode one shared model.
    """
    seeds = cfg.seeds if seeds is None else seeds
    prepared = [prepare(s, cfg.split_fraction) for s in series_list]
    report = EvalReport()
    if cfg.pooled and len(series_list) > 1:
        shared = {}

        def fitted(seed):
            if seed not in shared:
                shared[seed] = _fit_all(method, series_list, prepared, k, cfg, seed)
            return shared[seed]

        for series, (profiles, n_train) in zip(series_list, prepared):
            report.extend(rolling_evaluate(
                lambda seed: make_predictor(method, fitted(seed), series, profiles, k, cfg),
                series, n_train, k, seeds, cfg.m, method))
        return report
    for series, (profiles, n_train) in zip(series_list, prepared):
        report.extend(rolling_evaluate(
            lambda seed: make_predictor(method, _fit_all(method, [series], [(profiles, n_train)], k, cfg, seed),
                                        series, profiles, k, cfg),
            series, n_train, k, seeds, cfg.m, method))
    return report


def _fit_all(method, series_list, prepared, k, cfg, seed):
    if method == "logistic":
        return fit_logistic(series_list, [n for _, n in prepared], cfg, seed)
    datasets = [train_dataset(s, p, n, cfg.m, k) for s, (p, n) in zip(series_list, prepared)]
    return fit_model(method, datasets, k, cfg, seed).model


def sensitivity_sweep(cfg: RunConfig, param: str, grid: list[str], series_list: list[OccupancySeries],
                      k: int = 6, method: str = "hybrid") -> list[tuple[str, float]]:
    """Mean test accuracy at horizon ``k`` for each grid value, grid order kept."""
    rows = []
    for raw in grid:
        varied = cfg.with_value(param, raw)
        report = evaluate_method(method, series_list, k, varied)
        rows.append((raw, report.overall(method, k)[0]))
    return rows


def window_count(series_len: int, n_train: int, m: int, k: int) -> int:
    return series_len - max(n_train, m) - k + 1
