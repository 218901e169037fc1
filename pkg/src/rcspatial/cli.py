"""Command-line entry point.

Exit codes: 0 success, 1 config error, 2 data error, 3 partial failures
(report still written).
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .data.io import series_path, write_series
from .data.split import make_split
from .data.synthetic import SiteGrid, gen_synthetic
from .errors import ConfigError, DataError, RCSpatialError
from .experiment import DirectoryStore, ExperimentConfig, run_sweep
from .report import build_report, read_records_csv, regression_dict, summary_dict, write_json, write_report
from .tuning import GridSpec, grid_search, write_score_table

log = logging.getLogger("rcspatial")

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_PARTIAL = 0, 1, 2, 3

SYNTHETIC_KEYS = {
    "driver_seed", "lag_per_degree", "mixing_length", "noise_level", "years",
    "start_year", "persistence", "seasonal_amplitude", "lat_offsets", "lon_offsets",
}
TUNE_KEYS = {
    "density_values", "input_scaling_values", "spectral_radius_values", "ridge_beta_values",
    "calibration_offsets", "years", "n_seeds",
}


def load_config(args) -> ExperimentConfig:
    doc = {}
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as fh:
                doc = json.load(fh)
        except FileNotFoundError:
            raise ConfigError(f"config file {args.config} not found") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file {args.config}: {exc}") from None
        if not isinstance(doc, dict):
            raise ConfigError("config must be a JSON object")
    cfg = ExperimentConfig.from_dict(doc)
    years = None
    if args.years:
        try:
            years = tuple(int(y) for y in args.years.split(","))
        except ValueError:
            raise ConfigError(f"--years must be a comma-separated list, got {args.years!r}") from None
    try:
        return cfg.with_overrides(
            target_lat=args.target_lat,
            target_lon=args.target_lon,
            variable=args.variable,
            years=years,
            seed=args.seed,
            output_dir=args.output_dir,
            data_root=args.data_root,
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None


def cmd_gen_synthetic(cfg: ExperimentConfig, args) -> int:
    s = dict(cfg.synthetic)
    unknown = set(s) - SYNTHETIC_KEYS
    if unknown:
        raise ConfigError(f"unknown synthetic key(s): {', '.join(sorted(unknown))}")
    offsets = cfg.sweep_offsets()
    lat_offsets = s.pop("lat_offsets", offsets if cfg.sweep_axis == "latitude" else [])
    lon_offsets = s.pop("lon_offsets", offsets if cfg.sweep_axis == "longitude" else [])
    grid = SiteGrid.cross(cfg.target_location, lat_offsets, lon_offsets)
    s.setdefault("driver_seed", cfg.seed)
    s.setdefault("years", max(cfg.years) - min(cfg.years) + 6)
    s.setdefault("start_year", min(cfg.years) - 5)
    try:
        field = gen_synthetic(grid, **s)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"synthetic settings: {exc}") from None
    root = Path(cfg.data_root)
    for (lat, lon), series in field.items():
        write_series(series_path(root, "synthetic", lat, lon), series)
    print(f"wrote {len(field)} synthetic series under {root / 'synthetic'}")
    return EXIT_OK


def cmd_ingest_check(cfg: ExperimentConfig, args) -> int:
    store = DirectoryStore(cfg.data_root)
    tlat, tlon = cfg.target_location
    problems = 0
    target = store.get(cfg.variable, tlat, tlon)
    for offset in cfg.sweep_offsets():
        lat, lon = cfg.obs_location(offset)
        for year in cfg.years:
            try:
                split = make_split(store.get(cfg.variable, lat, lon), target, year, t_trans=cfg.t_trans)
                status = f"ok {split.lengths}"
            except DataError as exc:
                problems += 1
                status = f"{type(exc).__name__}: {exc}"
            print(f"{offset:+8.2f} ({lat:.2f}, {lon:.2f}) {year}: {status}")
    if problems:
        print(f"{problems} cell(s) failed ingestion checks")
        return EXIT_DATA
    return EXIT_OK


def cmd_tune(cfg: ExperimentConfig, args) -> int:
    t = dict(cfg.tune)
    unknown = set(t) - TUNE_KEYS
    if unknown:
        raise ConfigError(f"unknown tune key(s): {', '.join(sorted(unknown))}")
    store = DirectoryStore(cfg.data_root)
    tlat, tlon = cfg.target_location
    target = store.get(cfg.variable, tlat, tlon)
    offsets = t.pop("calibration_offsets", [1.0, -10.0, -25.0])
    years = t.pop("years", None) or cfg.years
    splits = []
    for offset in offsets:
        lat, lon = cfg.obs_location(float(offset))
        obs = store.get(cfg.variable, lat, lon)
        for year in years:
            splits.append(make_split(obs, target, int(year), t_trans=cfg.t_trans))
    try:
        spec = GridSpec(calibration_sets=splits, seed=cfg.seed, n_reservoir=cfg.n_reservoir, metric=cfg.metric, **t)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"tune settings: {exc}") from None
    print(f"grid search over {spec.n_combinations} combinations x {len(splits)} datasets")
    result = grid_search(spec)
    out = Path(cfg.output_dir)
    write_score_table(out / "score_table.csv", result)
    if result.all_diverged:
        write_json(out / "best_params.json", {"esn": None, "all_diverged": True})
        print("every combination failed on every dataset")
        return EXIT_PARTIAL
    write_json(
        out / "best_params.json",
        {"esn": result.best.params(), "mean_nrmse": result.best.mean, "n_combinations": spec.n_combinations},
    )
    print(f"best {result.best.params()} mean={result.best.mean:.4f}")
    return EXIT_OK


def cmd_sweep(cfg: ExperimentConfig, args) -> int:
    if args.workers:
        cfg = cfg.with_overrides(workers=args.workers)
    tlat, tlon = cfg.target_location
    # A missing target is a data error for the whole run, not a partial failure.
    DirectoryStore(cfg.data_root).get(cfg.variable, tlat, tlon)
    report = run_sweep(cfg)
    paths = write_report(cfg.output_dir, report, extra={"config": cfg.to_dict()})
    print(f"{len(report.records)} records -> {paths['records']}")
    if report.baseline_nrmse is not None:
        print(f"baseline NRMSE {report.baseline_nrmse:.4f}")
    for m, pr in report.predictable_ranges.items():
        print(f"{m}: predictable range [{pr.lo:+g}, {pr.hi:+g}]{' (empty)' if pr.empty else ''}")
    if report.failures:
        print(f"{len(report.failures)} failed cell(s); see summary.json")
        return EXIT_PARTIAL
    return EXIT_OK


def cmd_analyze(cfg: ExperimentConfig, args) -> int:
    path = Path(args.records or Path(cfg.output_dir) / "records.csv")
    try:
        records = read_records_csv(path)
    except FileNotFoundError:
        raise DataError(f"records file {path} not found") from None
    except (KeyError, ValueError) as exc:
        raise DataError(f"{path}: malformed records ({exc})") from None
    report = build_report(
        records,
        metric=cfg.metric,
        margin=cfg.margin,
        regression_max_offset=cfg.regression_max_offset,
        regression_per_year=cfg.regression_per_year,
    )
    out = Path(cfg.output_dir)
    write_json(out / "summary.json", summary_dict(report, {"config": cfg.to_dict(), "source": str(path)}))
    write_json(out / "regression.json", regression_dict(report))
    print(f"re-analyzed {len(records)} records -> {out}")
    return EXIT_OK


COMMANDS = {
    "gen-synthetic": cmd_gen_synthetic,
    "ingest-check": cmd_ingest_check,
    "tune": cmd_tune,
    "sweep": cmd_sweep,
    "analyze": cmd_analyze,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rcspatial", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="JSON experiment config")
        p.add_argument("--target-lat", type=float)
        p.add_argument("--target-lon", type=float)
        p.add_argument("--variable", choices=["temp", "pres", "synthetic"])
        p.add_argument("--years", help="comma-separated test years")
        p.add_argument("--seed", type=int)
        p.add_argument("--output-dir")
        p.add_argument("--data-root")
        if name == "sweep":
            p.add_argument("--workers", type=int)
        if name == "analyze":
            p.add_argument("--records", help="records.csv to re-analyze")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args)
        return COMMANDS[args.command](cfg, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except RCSpatialError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
