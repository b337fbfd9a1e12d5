"""``occuforge`` command-line front end."""
from __future__ import annotations

import argparse
import logging
import sys
from datetime import date
from pathlib import Path

from . import plotting
from .config import ConfigError, RunConfig, _convert, load_config
from .evaluate import EvalReport
from .features import make_inputs, train_dataset
from .ingest import (
    discretize,
    format_rejects,
    parse_sessions,
    parse_timestamp,
    read_occupancy_csv,
    remove_outliers,
    session_date_range,
    write_occupancy_csv,
)
from .persist import load_bundle, save_model
from .pipeline import evaluate_method, fit_logistic, fit_model, prepare, sensitivity_sweep
from .synth import SynthSpec, parse_schedule, synth_generate

log = logging.getLogger("occuforge")


class CommandError(RuntimeError):
    pass


def _occupancy(cfg: RunConfig) -> dict:
    path = cfg.occupancy_path or cfg.output_dir / "occupancy.csv"
    if not Path(path).exists():
        raise CommandError(f"no occupancy file at {path}; run `occuforge ingest` or set occupancy_path")
    with open(path, newline="") as fh:
        return read_occupancy_csv(fh, cfg.delta_minutes)


def cmd_ingest(args, cfg: RunConfig) -> None:
    if cfg.sessions_path is None:
        raise CommandError("config needs sessions_path for ingest")
    out = cfg.output_dir
    out.mkdir(parents=True, exist_ok=True)
    with open(cfg.sessions_path, newline="") as fh:
        sessions, rejects = parse_sessions(fh, cfg.column_map, default_class=cfg.charger_class)
    (out / "rejects.txt").write_text(format_rejects(rejects))
    lines = [f"sessions parsed: {len(sessions)}", f"rows rejected: {len(rejects)}"]
    by_class: dict[str, list] = {}
    for s in sessions:
        by_class.setdefault(s.charger_class, []).append(s)
    kept_all = []
    for klass in sorted(by_class):
        kept, removed = remove_outliers(by_class[klass])
        frac = len(removed) / len(by_class[klass])
        lines.append(f"{klass}: {len(by_class[klass])} sessions, {len(removed)} outliers removed ({100 * frac:.2f}%)")
        if klass == cfg.charger_class:
            kept_all = kept
    if not kept_all:
        raise CommandError(f"no {cfg.charger_class} sessions to discretise")
    start, end = session_date_range(kept_all)
    start = cfg.start_date or start
    end = cfg.end_date or end
    kept_all = [s for s in kept_all if s.plug_in >= _midnight(start) and s.plug_out <= _midnight(end)]
    chargers = sorted({s.charger_id for s in kept_all})
    series = [discretize(kept_all, c, start, end, cfg.delta_minutes) for c in chargers]
    with open(out / "occupancy.csv", "w", newline="") as fh:
        write_occupancy_csv(series, fh)
    prof_dir = out / "profiles"
    prof_dir.mkdir(exist_ok=True)
    for s in series:
        profiles, _ = prepare(s, cfg.split_fraction)
        with open(prof_dir / f"{s.charger_id}.csv", "w", newline="") as fh:
            profiles.to_csv(fh)
        plotting.plot_profiles(profiles, out / "figures" / f"profile_{s.charger_id}.png", s.charger_id)
    lines.append(f"chargers: {len(series)} over {start}..{end} (end exclusive)")
    (out / "ingest_summary.txt").write_text("\n".join(lines) + "\n")
    print("\n".join(lines))


def _midnight(d: date):
    from datetime import datetime

    return datetime.combine(d, datetime.min.time())


def cmd_train(args, cfg: RunConfig) -> None:
    all_series = _occupancy(cfg)
    if args.charger not in all_series:
        raise CommandError(f"unknown charger {args.charger!r}")
    series = all_series[args.charger]
    profiles, n_train = prepare(series, cfg.split_fraction)
    if args.method == "logistic":
        model = fit_logistic([series], [n_train], cfg, cfg.seed)
        history = []
    else:
        data = train_dataset(series, profiles, n_train, cfg.m, args.k)
        result = fit_model(args.method, data, args.k, cfg, cfg.seed)
        model, history = result.model, result.loss_history
    path = Path(args.out) if args.out else cfg.output_dir / "models" / f"{args.charger}_{args.method}_k{args.k}.occm"
    path.parent.mkdir(parents=True, exist_ok=True)
    save_model(model, path, profiles, args.charger)
    for epoch, loss in enumerate(history, start=1):
        print(f"epoch {epoch}: loss {loss:.6f}")
    print(f"model written to {path}")


def _report(cfg: RunConfig, methods, ks, runs, chargers=None) -> EvalReport:
    all_series = _occupancy(cfg)
    names = sorted(all_series) if not chargers else chargers
    missing = [c for c in names if c not in all_series]
    if missing:
        raise CommandError(f"unknown charger(s) {missing}")
    cfg = cfg.with_value("runs", str(runs))
    report = EvalReport()
    for method in methods:
        for k in ks:
            report.extend(evaluate_method(method, [all_series[c] for c in names], k, cfg))
    return report


def cmd_evaluate(args, cfg: RunConfig) -> None:
    ks = _convert("k_list", args.k_list) if args.k_list else cfg.k_list
    methods = _convert("methods", args.methods) if args.methods else cfg.methods
    runs = args.runs or cfg.runs
    report = _report(cfg, methods, ks, runs, args.charger)
    out = cfg.output_dir
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.csv").write_text(report.to_csv())
    summary = report.summary()
    (out / "summary.txt").write_text(summary)
    plotting.plot_horizon_scores(report, out / "figures" / "horizon_scores.png")
    for m in report.methods:
        plotting.plot_charger_accuracy(report, m, out / "figures" / f"charger_accuracy_{m}.png")
    print(summary, end="")


def cmd_predict(args, cfg: RunConfig | None) -> None:
    bundle = load_bundle(args.model)
    model = bundle.model
    charger = args.charger or bundle.charger_id
    occ_path = args.occupancy or (cfg.occupancy_path or cfg.output_dir / "occupancy.csv" if cfg else None)
    if occ_path is None:
        raise CommandError("predict needs --occupancy or --config")
    with open(occ_path, newline="") as fh:
        all_series = read_occupancy_csv(fh)
    if charger not in all_series:
        raise CommandError(f"charger {charger!r} not in {occ_path}")
    series = all_series[charger]
    t = series.index_of(parse_timestamp(args.at))
    if model.kind == "logistic":
        from .models import walk_forward_predict

        k = args.k
        probs = None
        states = walk_forward_predict(model, series, [t], k, model.config.threshold)[0]
    else:
        if bundle.profiles is None:
            raise CommandError("model file carries no day-type profiles")
        batch = make_inputs(series, bundle.profiles, [t], model.config.m)
        probs = model.predict_proba(batch)[0]
        states = (probs >= model.config.threshold).astype(int)
    print("timestamp_slot_start,probability,state")
    for j, y in enumerate(states):
        p = "" if probs is None else f"{probs[j]:.6f}"
        print(f"{series.timestamp(t + j).isoformat(timespec='minutes')},{p},{int(y)}")


def cmd_sweep(args, cfg: RunConfig) -> None:
    grid = [v.strip() for v in args.grid.split(",") if v.strip()]
    if not grid:
        raise CommandError("empty grid")
    all_series = _occupancy(cfg)
    names = args.charger or sorted(all_series)
    if args.runs:
        cfg = cfg.with_value("runs", str(args.runs))
    rows = sensitivity_sweep(cfg, args.param, grid, [all_series[c] for c in names], k=args.k, method=args.method)
    out = cfg.output_dir
    out.mkdir(parents=True, exist_ok=True)
    text = f"{args.param},accuracy\n" + "".join(f"{v},{acc:.6f}\n" for v, acc in rows)
    (out / f"sweep_{args.param}.csv").write_text(text)
    plotting.plot_sweep(rows, args.param, out / "figures" / f"sweep_{args.param}.png")
    print(text, end="")


SYNTH_KEYS = {"days": int, "weekday_p01": float, "weekday_p10": float, "weekend_p01": float,
              "weekend_p10": float, "weekday_schedule": parse_schedule, "weekend_schedule": parse_schedule,
              "initial_state": int, "seed": int, "start_date": date.fromisoformat, "charger_id": str,
              "delta_minutes": int}


def load_synth_spec(path) -> list[SynthSpec]:
    """One spec per ``[section]``; keys before any section are shared defaults."""
    shared: dict = {}
    sections: list[dict] = []
    current = shared
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            current = {"charger_id": line[1:-1].strip()}
            sections.append(current)
            continue
        key, sep, raw = line.partition("=")
        key = key.strip()
        if not sep or key not in SYNTH_KEYS:
            raise ConfigError(f"{path}:{lineno}: unknown or malformed entry {line!r}")
        try:
            current[key] = SYNTH_KEYS[key](raw.strip())
        except ValueError as exc:
            raise ConfigError(f"{path}:{lineno}: bad value for {key}") from exc
    if not sections:
        sections = [{}]
    return [SynthSpec(**{**shared, **s}) for s in sections]


def cmd_synth(args, cfg) -> None:
    specs = load_synth_spec(args.spec)
    series = [synth_generate(s) for s in specs]
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", newline="") as fh:
        write_occupancy_csv(series, fh)
    for s in series:
        print(f"{s.charger_id}: {s.n_days} days, occupancy rate {s.states.mean():.4f}")
    print(f"written to {out}")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="occuforge", description="Multistep charger occupancy forecasting.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def with_config(sp, required=True):
        sp.add_argument("--config", required=required, help="key = value run configuration file")
        return sp

    with_config(sub.add_parser("ingest", help="sessions CSV -> occupancy series and profiles"))

    sp = with_config(sub.add_parser("train", help="train one model for one charger and horizon"))
    sp.add_argument("--charger", required=True)
    sp.add_argument("--k", type=int, required=True)
    sp.add_argument("--method", default="hybrid", choices=("hybrid", "lstm", "gru", "logistic"))
    sp.add_argument("--out")

    sp = with_config(sub.add_parser("evaluate", help="rolling test-split evaluation"))
    sp.add_argument("--k-list")
    sp.add_argument("--runs", type=int)
    sp.add_argument("--methods")
    sp.add_argument("--charger", action="append")

    sp = with_config(sub.add_parser("predict", help="k-step forecast from a saved model"), required=False)
    sp.add_argument("--model", required=True)
    sp.add_argument("--at", required=True, help="slot start timestamp, e.g. 2018-05-20T12:00")
    sp.add_argument("--occupancy")
    sp.add_argument("--charger")
    sp.add_argument("--k", type=int, default=6, help="walk-forward horizon for logistic models")

    sp = with_config(sub.add_parser("sweep", help="one-parameter sensitivity sweep"))
    sp.add_argument("--param", required=True)
    sp.add_argument("--grid", required=True)
    sp.add_argument("--k", type=int, default=6)
    sp.add_argument("--runs", type=int)
    sp.add_argument("--method", default="hybrid")
    sp.add_argument("--charger", action="append")

    sp = sub.add_parser("synth", help="generate synthetic occupancy series")
    sp.add_argument("--spec", required=True)
    sp.add_argument("--out", default="synth_occupancy.csv")
    return p


COMMANDS = {"ingest": cmd_ingest, "train": cmd_train, "evaluate": cmd_evaluate,
            "predict": cmd_predict, "sweep": cmd_sweep, "synth": cmd_synth}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config) if getattr(args, "config", None) else None
        COMMANDS[args.command](args, cfg)
    except (CommandError, ConfigError, ValueError, IndexError, KeyError, OSError) as exc:
        msg = str(exc).splitlines()[0] if str(exc) else type(exc).__name__
        print(f"occuforge {args.command}: error: {msg}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
