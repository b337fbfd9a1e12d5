"""Plain-text ``key = value`` run configuration.

Blank lines and ``#`` comments are ignored. Unknown keys are errors.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from datetime import date
from pathlib import Path

from .models import HybridConfig, LogisticConfig, RecurrentConfig
from .neuralnet import TrainHyperparams

METHODS = ("hybrid", "lstm", "gru", "logistic")


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    sessions_path: Path | None = None
    occupancy_path: Path | None = None
    output_dir: Path = Path("out")
    delta_minutes: int = 10
    split_fraction: float = 0.7
    start_date: date | None = None
    end_date: date | None = None
    charger_class: str = "rapid"
    col_charger_id: str = "charger_id"
    col_plug_in: str = "plug_in"
    col_plug_out: str = "plug_out"
    col_energy_kwh: str = "energy_kwh"
    col_charger_class: str = "charger_class"
    m: int = 12
    k_list: tuple[int, ...] = (1, 3, 6, 12, 24, 36)
    lstm_hidden: int = 36
    branch_layers: tuple[int, ...] = (64, 32, 16)
    post_lstm: int = 16
    merge: int = 32
    rnn_hidden: int = 36
    rnn_dense: int = 32
    rnn_frames: int = 3
    logistic_steps: int = 2000
    logistic_lr: float = 0.5
    learning_rate: float = 0.001
    batch_size: int = 30
    epochs: int = 15
    dropout_rate: float = 0.2
    threshold: float = 0.5
    seed: int = 0
    runs: int = 10
    methods: tuple[str, ...] = ("hybrid",)
    pooled: bool = False

    def __post_init__(self):
        if not self.k_list or any(k < 1 for k in self.k_list):
            raise ConfigError("k_list must be non-empty with every k >= 1")
        bad = [m for m in self.methods if m not in METHODS]
        if bad:
            raise ConfigError(f"unknown method(s) {bad}; choose from {METHODS}")
        if self.runs < 1:
            raise ConfigError("runs must be >= 1")
        for p in (self.sessions_path, self.occupancy_path):
            if p is not None and not Path(p).exists():
                raise ConfigError(f"path does not exist: {p}")

    @property
    def column_map(self) -> dict[str, str]:
        return {"charger_id": self.col_charger_id, "plug_in": self.col_plug_in,
                "plug_out": self.col_plug_out, "energy_kwh": self.col_energy_kwh,
                "charger_class": self.col_charger_class}

    @property
    def hyperparams(self) -> TrainHyperparams:
        return TrainHyperparams(self.learning_rate, self.batch_size, self.epochs, self.dropout_rate, self.seed)

    def hybrid_config(self, k: int) -> HybridConfig:
        return HybridConfig(m=self.m, k=k, lstm_hidden=self.lstm_hidden, branch=self.branch_layers,
                            post_lstm=self.post_lstm, merge=self.merge, dropout_rate=self.dropout_rate,
                            threshold=self.threshold)

    def recurrent_config(self, cell: str, k: int) -> RecurrentConfig:
        return RecurrentConfig(cell=cell, k=k, m=self.m, n_frames=self.rnn_frames, hidden=self.rnn_hidden,
                               dense=self.rnn_dense, dropout_rate=self.dropout_rate, threshold=self.threshold)

    def logistic_config(self, seed: int) -> LogisticConfig:
        return LogisticConfig(self.logistic_steps, self.logistic_lr, self.threshold, seed)

    @property
    def seeds(self) -> list[int]:
        return [self.seed + r for r in range(self.runs)]

    def with_value(self, key: str, raw: str) -> "RunConfig":
        """A copy with one key re-parsed from text."""
        if key == "n_branch_layers":
            n = int(raw)
            widths = RunConfig.branch_layers
            if not 1 <= n <= len(widths):
                raise ConfigError(f"n_branch_layers must lie in 1..{len(widths)}")
            return dataclasses.replace(self, branch_layers=widths[:n])
        return dataclasses.replace(self, **{key: _convert(key, raw)})


_FIELDS = {f.name: f for f in dataclasses.fields(RunConfig)}


def _convert(key: str, raw: str):
    if key not in _FIELDS:
        raise ConfigError(f"unknown config key {key!r}")
    typ = str(_FIELDS[key].type)
    raw = raw.strip()
    try:
        if typ.startswith("Path"):
            return Path(raw) if raw else None
        if typ.startswith("date"):
            return date.fromisoformat(raw) if raw else None
        if typ == "bool":
            if raw.lower() not in ("true", "false", "1", "0", "yes", "no"):
                raise ValueError(raw)
            return raw.lower() in ("true", "1", "yes")
        if typ == "int":
            return int(raw)
        if typ == "float":
            return float(raw)
        if typ == "tuple[int, ...]":
            return tuple(int(v) for v in raw.split(",") if v.strip())
        if typ == "tuple[str, ...]":
            return tuple(v.strip() for v in raw.split(",") if v.strip())
        return raw
    except ValueError as exc:
        raise ConfigError(f"bad value for {key}: {raw!r}") from exc


def parse_config_text(text: str, base_dir: Path | None = None) -> RunConfig:
    values = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, raw = line.partition("=")
        if not sep:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key = key.strip()
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        value = _convert(key, raw)
        if isinstance(value, Path) and base_dir is not None and not value.is_absolute():
            value = base_dir / value
        values[key] = value
    return RunConfig(**values)


def load_config(path) -> RunConfig:
    path = Path(path)
    return parse_config_text(path.read_text(), base_dir=path.parent)
