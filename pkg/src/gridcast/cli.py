"""``gridcast`` command line: ingest, fit, train, forecast, sensitivity, synth.

Exit codes: 0 success, 2 invalid input or configuration, 3 every regression
fit failed, 4 training failed.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import ingest
from .errors import GridcastError, InputError
from .ingest import DEFAULT_BASE_TEMP, DEFAULT_FRACTIONS, Dataset, atomic_write_text
from .mlp import ElmConfig, TrainedForecaster
from .pipeline import train_pipeline
from .regression import ModelCatalog, fit_catalog
from .sensitivity import PER_SD, RAW, aggregate
from .synth import SyntheticSpec, generate_full, truth_to_json_text

log = logging.getLogger("gridcast")

EXIT_OK, EXIT_INPUT, EXIT_FIT, EXIT_TRAIN = 0, 2, 3, 4


class CommandFailed(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


@dataclass
class RunConfig:
    out: Path
    weather: Path | None = None
    interruptions: Path | None = None
    dataset: Path | None = None
    model: Path | None = None
    split: tuple[float, float, float] = DEFAULT_FRACTIONS
    elm: ElmConfig = field(default_factory=ElmConfig)
    base_temp: float = DEFAULT_BASE_TEMP
    target: str = "both"
    extra: dict = field(default_factory=dict)

    @property
    def targets(self) -> list[str]:
        return ["N", "M"] if self.target == "both" else [self.target.upper()]


def _parse_split(value) -> tuple[float, float, float]:
    if isinstance(value, str):
        try:
            value = [float(v) for v in value.split(",")]
        except ValueError:
            raise InputError(f"--split must be three comma-separated numbers, got {value!r}") from None
    value = tuple(float(v) for v in value)
    if len(value) != 3 or any(v < 0 for v in value) or abs(sum(value) - 1.0) > 1e-9:
        raise InputError(f"split fractions must be three non-negative numbers summing to 1, got {value}")
    return value


_ELM_KEYS = {"seed": "seed", "delta": "delta", "restarts": "restarts", "hidden": "hidden_count", "ridge": "ridge"}
_PATH_KEYS = ("weather", "interruptions", "dataset", "model", "out")


def build_config(args: argparse.Namespace) -> RunConfig:
    """Merge ``--config`` JSON with explicit flags; flags win."""
    merged: dict = {}
    if args.config:
        try:
            merged = json.loads(Path(args.config).read_text())
        except json.JSONDecodeError as exc:
            raise InputError(f"{args.config}: invalid JSON config: {exc}") from None
        if not isinstance(merged, dict):
            raise InputError(f"{args.config}: config must be a JSON object")
        merged = {k.replace("-", "_"): v for k, v in merged.items()}
    for key, value in vars(args).items():
        if key not in ("command", "config", "func") and value is not None:
            merged[key] = value

    if not merged.get("out"):
        raise InputError("an output directory is required (--out)")
    elm_kwargs = {_ELM_KEYS[k]: merged.pop(k) for k in list(merged) if k in _ELM_KEYS}
    for k in ("delta", "ridge"):
        if _ELM_KEYS[k] in elm_kwargs:
            elm_kwargs[_ELM_KEYS[k]] = float(elm_kwargs[_ELM_KEYS[k]])
    target = str(merged.pop("target", "both")).lower()
    if target not in ("n", "m", "both"):
        raise InputError(f"--target must be n, m or both, got {target!r}")
    paths = {k: Path(merged.pop(k)) if merged.get(k) else None for k in _PATH_KEYS}
    cfg = RunConfig(
        out=paths.pop("out"),
        split=_parse_split(merged.pop("split", DEFAULT_FRACTIONS)),
        elm=ElmConfig(**elm_kwargs),
        base_temp=float(merged.pop("base_temp", DEFAULT_BASE_TEMP)),
        target=target,
        **paths,
    )
    cfg.extra = merged
    try:
        cfg.out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise InputError(f"{cfg.out}: cannot create output directory: {exc}") from None
    return cfg


# -- data loading ----------------------------------------------------------------

def _load_weather_days(path: Path, base_temp: float):
    rows = ingest.parse_weather_csv(path)
    agg = ingest.aggregate_daily(rows, base_temp)
    if not agg.days:
        raise InputError(f"{path}: no day has enough hourly readings")
    return rows, agg


def load_dataset(cfg: RunConfig) -> Dataset:
    if cfg.dataset is not None:
        return ingest.read_dataset_csv(cfg.dataset)
    if cfg.weather is None or cfg.interruptions is None:
        raise InputError("provide --dataset, or both --weather and --interruptions")
    _, agg = _load_weather_days(cfg.weather, cfg.base_temp)
    return ingest.align(agg.days, ingest.parse_interruption_csv(cfg.interruptions))


def _write_json(path: Path, document) -> None:
    atomic_write_text(path, json.dumps(document, indent=2, sort_keys=True) + "\n")


def _fmt(value) -> str:
    return "" if value is None else repr(float(value))


# -- commands ------------------------------------------------------------------------

def cmd_ingest(cfg: RunConfig) -> dict:
    if cfg.weather is None or cfg.interruptions is None:
        raise InputError("ingest needs --weather and --interruptions")
    rows, agg = _load_weather_days(cfg.weather, cfg.base_temp)
    counts = ingest.parse_interruption_csv(cfg.interruptions)
    ds = ingest.align(agg.days, counts)
    weather_dates = {d.date for d in agg.days}
    count_dates = {d for d, _, _ in counts}
    summary = {
        "weather": str(cfg.weather),
        "interruptions": str(cfg.interruptions),
        "base_temp": cfg.base_temp,
        "hourly_rows": len(rows),
        "aligned_days": len(ds),
        "skipped_incomplete_days": [d.isoformat() for d in agg.skipped],
        "weather_only_days": sorted(d.isoformat() for d in weather_dates - count_dates),
        "interruption_only_days": sorted(d.isoformat() for d in count_dates - weather_dates),
    }
    ingest.write_dataset_csv(ds, cfg.out / "dataset.csv")
    _write_json(cfg.out / "provenance.json", summary)
    return summary


def fit_table_csv(catalog: ModelCatalog) -> str:
    lines = ["feature,model,status,sse,r2,adj_r2,rmse,winner"]
    for e in catalog.entries:
        for i, c in enumerate(e.candidates):
            label = f"Polynomial({c.degree})" if c.degree else "Exponential(2)"
            r = c.report
            vals = [r.sse, r.r_square, r.adj_r_square, r.rmse] if r else [None] * 4
            lines.append(",".join([e.feature, label, c.status, *map(_fmt, vals), "1" if i == e.winner else "0"]))
    return "\n".join(lines) + "\n"


def cmd_fit(cfg: RunConfig) -> dict:
    ds = load_dataset(cfg)
    train = ingest.split_chronological(ds, cfg.split).train
    summary = {}
    for target in cfg.targets:
        catalog = fit_catalog(train, target)
        if not catalog.entries:
            raise CommandFailed(EXIT_FIT, f"every feature failed to fit for target {target}")
        _write_json(cfg.out / f"catalog_{target}.json", catalog.to_json())
        atomic_write_text(cfg.out / f"fit_table_{target}.csv", fit_table_csv(catalog))
        summary[target] = {e.feature: e.model.label for e in catalog.entries}
    return summary


def cmd_train(cfg: RunConfig) -> dict:
    ds = load_dataset(cfg)
    try:
        run = train_pipeline(ds, cfg.elm, cfg.split)
    except InputError:
        raise
    except GridcastError as exc:
        raise CommandFailed(EXIT_TRAIN, f"training failed: {exc}") from None
    metrics = run.metrics()
    _write_json(cfg.out / "model.json", run.forecaster.to_json())
    _write_json(cfg.out / "metrics.json", metrics)
    return {"test": metrics["hybrid"]["test"], "baseline_test": metrics["baseline"]["test"],
            "reduction_pct": metrics["reduction_pct"]}


def load_model(path: Path | None) -> TrainedForecaster:
    if path is None:
        raise InputError("--model is required")
    try:
        return TrainedForecaster.from_json(json.loads(Path(path).read_text()))
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise InputError(f"{path}: not a valid model file: {exc}") from None


def forecast_csv(dates, values: np.ndarray) -> str:
    lines = ["date,n_forecast,m_forecast"]
    lines.extend(f"{d.isoformat()},{v[0]!r},{v[1]!r}" for d, v in zip(dates, values.tolist()))
    return "\n".join(lines) + "\n"


def cmd_forecast(cfg: RunConfig) -> dict:
    forecaster = load_model(cfg.model)
    if cfg.dataset is not None:
        ds = ingest.read_dataset_csv(cfg.dataset)
        dates, raw = ds.dates, np.column_stack([ds.column(f) for f in forecaster.feature_spec.raw_features])
    elif cfg.weather is not None:
        _, agg = _load_weather_days(cfg.weather, cfg.base_temp)
        dates = [d.date for d in agg.days]
        raw = np.array([[getattr(d, f) for f in forecaster.feature_spec.raw_features] for d in agg.days])
    else:
        raise InputError("forecast needs --weather or --dataset")
    values = forecaster.predict(raw)
    atomic_write_text(cfg.out / "forecast.csv", forecast_csv(dates, values))
    return {"days": len(dates)}


EVAL_PARTS = ("train", "validate", "test", "all")


def cmd_sensitivity(cfg: RunConfig) -> dict:
    forecaster = load_model(cfg.model)
    ds = load_dataset(cfg)
    part = cfg.extra.get("eval", "test")
    units = cfg.extra.get("units", PER_SD)
    if part not in EVAL_PARTS:
        raise InputError(f"--eval must be one of {EVAL_PARTS}, got {part!r}")
    if units not in (RAW, PER_SD):
        raise InputError(f"--units must be {RAW} or {PER_SD}, got {units!r}")
    if part != "all":
        ds = getattr(ingest.split_chronological(ds, cfg.split), part)
    report = aggregate(forecaster, ds, units)
    _write_json(cfg.out / "sensitivity.json", report.to_json())
    atomic_write_text(cfg.out / "sensitivity.csv", report.to_csv())
    return {o: report.ranked(o)[:3] for o in ("N", "M")}


def cmd_synth(cfg: RunConfig) -> dict:
    spec_data = {}
    if "spec" in cfg.extra:
        spec_data = json.loads(Path(cfg.extra["spec"]).read_text())
        if not isinstance(spec_data, dict):
            raise InputError(f"{cfg.extra['spec']}: spec must be a JSON object")
    for key in ("preset", "days"):
        if key in cfg.extra:
            spec_data[key] = cfg.extra[key]
    spec_data["seed"] = cfg.elm.seed
    spec_data.setdefault("base_temp", cfg.base_temp)
    spec = SyntheticSpec.from_dict(spec_data)
    run = generate_full(spec)
    counts = [(r.date, r.n_sustained, r.m_momentary) for r in run.dataset]
    atomic_write_text(cfg.out / "weather.csv", ingest.weather_to_csv(run.weather.rows()))
    atomic_write_text(cfg.out / "interruptions.csv", ingest.interruptions_to_csv(counts))
    ingest.write_dataset_csv(run.dataset, cfg.out / "dataset.csv")
    atomic_write_text(cfg.out / "ground_truth.json", truth_to_json_text(run.truth))
    return {"days": len(run.dataset), "seed": spec.seed}


COMMANDS = {
    "ingest": cmd_ingest, "fit": cmd_fit, "train": cmd_train,
    "forecast": cmd_forecast, "sensitivity": cmd_sensitivity, "synth": cmd_synth,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gridcast", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        # defaults are None so --config values are only overridden by explicit flags
        p.add_argument("--config", help="JSON file with the same keys as the flags")
        p.add_argument("--out", help="output directory")
        p.add_argument("--base-temp", type=float, help=f"degree-day base in F (default {DEFAULT_BASE_TEMP})")
        p.add_argument("--split", help="train,validate,test fractions (default 0.6,0.15,0.25)")

    def data(p):
        p.add_argument("--weather", help="hourly weather CSV")
        p.add_argument("--interruptions", help="daily interruption CSV")
        p.add_argument("--dataset", help="aligned daily dataset CSV (instead of weather + interruptions)")

    p = sub.add_parser("ingest", help="aggregate hourly weather and align with interruption counts")
    common(p)
    data(p)

    p = sub.add_parser("fit", help="fit per-feature regression catalogs and goodness-of-fit tables")
    common(p)
    data(p)
    p.add_argument("--target", choices=["n", "m", "both"], type=str.lower)

    p = sub.add_parser("train", help="train the hybrid network and the sum-of-regressions baseline")
    common(p)
    data(p)
    p.add_argument("--seed", type=int)
    p.add_argument("--delta", type=float, help="ridge exponent in [1, 2]")
    p.add_argument("--ridge", type=float, help="fixed ridge value instead of ||Y||^delta")
    p.add_argument("--restarts", type=int)
    p.add_argument("--hidden", type=int)

    p = sub.add_parser("forecast", help="forecast daily counts from weather with a trained model")
    common(p)
    p.add_argument("--model", help="model.json from train")
    p.add_argument("--weather", help="hourly weather CSV")
    p.add_argument("--dataset", help="aligned daily dataset CSV")

    p = sub.add_parser("sensitivity", help="rank weather parameters by output sensitivity")
    common(p)
    data(p)
    p.add_argument("--model", help="model.json from train")
    p.add_argument("--eval", choices=EVAL_PARTS, help="split to evaluate on (default test)")
    p.add_argument("--units", choices=[PER_SD, RAW], help="derivative units (default per_sd)")

    p = sub.add_parser("synth", help="generate synthetic weather, interruptions and ground truth")
    common(p)
    p.add_argument("--spec", help="JSON synthetic spec")
    p.add_argument("--preset", choices=["default", "planted"])
    p.add_argument("--days", type=int)
    p.add_argument("--seed", type=int)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="gridcast: %(levelname)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        cfg = build_config(args)
        summary = COMMANDS[args.command](cfg)
    except CommandFailed as exc:
        print(f"gridcast {args.command}: {exc}", file=sys.stderr)
        return exc.code
    except (InputError, FileNotFoundError, IsADirectoryError, PermissionError) as exc:
        print(f"gridcast {args.command}: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except GridcastError as exc:
        code = EXIT_FIT if args.command == "fit" else EXIT_TRAIN
        print(f"gridcast {args.command}: {exc}", file=sys.stderr)
        return code
    print(json.dumps(summary, sort_keys=True))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
