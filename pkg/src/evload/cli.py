"""Command line interface.

Subcommands compose the pipeline: synth -> cluster -> fit -> simulate /
validate / admd. All outputs are plain CSV/JSON (rendering is a separate
component). Every output directory receives a manifest.json; reruns of an
identical invocation produce byte-identical data files at any --threads
value.

Exit codes: 0 success, 1 usage/config error, 2 data error, 3 internal error.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .errors import ConfigError, DataError
from .ingest import (DayType, ParseConfig, infer_soc_traces, parse_survey,
                     parse_trial, write_charges_csv, write_survey_csv)
from .synth import SynthesisSpec, spec_from_json, synthesize_fleet
from .clustering import (ClusterModel, build_feature_vector,
                         cluster_speed_profiles, elbow_knee, elbow_scan,
                         kmeans_fit_restarts, label_days, transition_matrix,
                         weekly_composition)
from .charge_model import classify_charges, fit_posteriors, heatmap_rows
from .simulator import (LoadDistribution, SimConfig, monte_carlo,
                        monte_carlo_resampled, naive_aggregate)
from .analysis import (BaselineProfile, RegionSpec, blend_baseline,
                       example_e7_profile, example_flat_profile,
                       leave_one_out_validate, regional_batch)
from .manifest import write_manifest

SIM_FIELDS = ["charger_kw", "efficiency", "battery_kwh", "kwh_per_mile",
              "initial_soc", "n_runs", "sample_size", "warm_up_days"]


def _load_config(path) -> dict:
    if path is None:
        return {}
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc


def _sim_config(args, cfg_file: dict) -> SimConfig:
    values = {}
    for name in SIM_FIELDS:
        if name in cfg_file:
            values[name] = cfg_file[name]
        flag = getattr(args, name, None)
        if flag is not None:
            values[name] = flag
    return SimConfig(seed=args.seed, threads=args.threads, **values)


def _write_csv(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)


def _fmt(x: float) -> str:
    return repr(float(x))


def _load_days(path):
    days, report = parse_survey(path)
    if report.errors:
        print(f"warning: {len(report.errors)} rows rejected from {path}", file=sys.stderr)
    return days


def cmd_synth(args):
    cfg = _load_config(args.config)
    spec = spec_from_json(args.spec) if args.spec else SynthesisSpec(
        **{k: cfg[k] for k in ("n_vehicles", "n_days") if k in cfg})
    days, charges, sidecar = synthesize_fleet(spec, args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_survey_csv(days, out / "survey.csv", with_energy=False)
    write_survey_csv(days, out / "trial_journeys.csv", with_energy=True)
    write_charges_csv(charges, out / "trial_charges.csv")
    with open(out / "ground_truth.json", "w", encoding="utf-8") as fh:
        json.dump(sidecar, fh, indent=2, sort_keys=True)
        fh.write("\n")
    write_manifest(out, "synth", cfg, args.seed,
                   [args.spec] if args.spec else [], __version__)
    return 0


def cmd_cluster(args):
    cfg = _load_config(args.config)
    days = _load_days(args.data)
    day_type = DayType[args.day_type.upper()]
    selected = [d for d in days if d.day_type == day_type]
    points = [v for v in (build_feature_vector(d) for d in selected) if v is not None]
    if not points:
        raise DataError("no used vehicle-days of the requested day type")

    model = kmeans_fit_restarts(points, args.k, seed=args.seed,
                                restarts=args.seeds_per_k, day_type=day_type)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "model.json").write_text(model.to_json() + "\n", encoding="utf-8")

    scan = elbow_scan(points, (args.k_min, args.k_max), args.seeds_per_k,
                      seed=args.seed, day_type=day_type)
    _write_csv(out / "elbow.csv", ["k", "sum_of_squares"],
               [[k, _fmt(s)] for k, s in scan])
    print(f"elbow-selected k (reported only): {elbow_knee(scan)}")

    comp = weekly_composition(model, days)
    rows = []
    for dow in range(7):
        for ci, state in enumerate(model.cluster_labels + ["U"]):
            rows.append([dow, state, _fmt(comp[dow, ci])])
    _write_csv(out / "composition.csv", ["day_of_week", "cluster", "share"], rows)

    labeled = label_days(model, days)
    rows = []
    for variant, weekday_only in (("all", False), ("weekday", True)):
        tm = transition_matrix(labeled, model.k, weekday_only=weekday_only)
        for i, a in enumerate(tm.states):
            for j, b in enumerate(tm.states):
                rows.append([variant, a, b, _fmt(tm.probs[i, j])])
    _write_csv(out / "transition.csv", ["variant", "from", "to", "probability"], rows)

    profiles = cluster_speed_profiles(model, selected)
    rows = []
    for c in model.cluster_labels:
        for t in range(48):
            rows.append([day_type.name, c, t, _fmt(profiles[c]["mean"][t]),
                         _fmt(profiles[c]["p05"][t]), _fmt(profiles[c]["p95"][t])])
    _write_csv(out / "profiles.csv",
               ["day_type", "cluster", "slot", "mean_mph", "p05_mph", "p95_mph"], rows)

    write_manifest(out, "cluster", {**cfg, "k": args.k, "day_type": day_type.name},
                   args.seed, [args.data], __version__)
    return 0


def cmd_fit(args):
    cfg = _load_config(args.config)
    sim_cfg = _sim_config(args, cfg)
    days, charges, report = parse_trial(args.journeys, args.charges)
    if report.errors:
        print(f"warning: {len(report.errors)} rows rejected", file=sys.stderr)
    model = ClusterModel.from_json(Path(args.model).read_text(encoding="utf-8"))
    traces = infer_soc_traces(days, charges, sim_cfg.battery_kwh,
                              sim_cfg.initial_soc)
    labels, stats = classify_charges(days, charges, args.window_minutes)
    tables = fit_posteriors(days, labels, model, traces, args.sigma)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "tables.json").write_text(tables.to_json() + "\n", encoding="utf-8")
    _write_csv(out / "heatmap.csv", ["table", "d", "t", "k", "s", "probability"],
               [[r["table"], r["d"], r["t"], r["k"], r["s"], _fmt(r["probability"])]
                for r in heatmap_rows(tables)])
    with open(out / "classification.json", "w", encoding="utf-8") as fh:
        json.dump({
            "n_charges": stats.n_charges,
            "fraction_after_any_journey": stats.fraction_after_any_journey,
            "fraction_after_final_journey": stats.fraction_after_final_journey,
        }, fh, indent=2, sort_keys=True)
        fh.write("\n")
    write_manifest(out, "fit", {**cfg, "sigma": args.sigma}, args.seed,
                   [args.journeys, args.charges, args.model], __version__)
    return 0


def _write_distribution(path, dist: LoadDistribution):
    _write_csv(path, ["slot", "mean_kw", "p05_kw", "p95_kw"],
               [[t, _fmt(dist.mean_kw[t]), _fmt(dist.p05_kw[t]), _fmt(dist.p95_kw[t])]
                for t in range(48)])


def cmd_simulate(args):
    cfg = _load_config(args.config)
    sim_cfg = _sim_config(args, cfg)
    days = _load_days(args.data)
    model = ClusterModel.from_json(Path(args.model).read_text(encoding="utf-8"))
    from .charge_model import PosteriorTables
    tables = PosteriorTables.from_json(Path(args.tables).read_text(encoding="utf-8"))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    scenarios = 0
    if args.naive:
        profile = naive_aggregate(days, sim_cfg)
        _write_csv(out / "naive.csv", ["slot", "mean_kw", "p05_kw", "p95_kw"],
                   [[t, _fmt(profile[t]), _fmt(profile[t]), _fmt(profile[t])]
                    for t in range(48)])
        scenarios += 1
    if args.fixed_set:
        dist = monte_carlo(days, model, tables, sim_cfg, retain_samples=False)
        _write_distribution(out / "fixed_set.csv", dist)
        scenarios += 1
    if args.resample:
        dist = monte_carlo_resampled(days, model, tables, sim_cfg,
                                     retain_samples=False)
        _write_distribution(out / "resampled.csv", dist)
        scenarios += 1
    if scenarios == 0:
        raise ConfigError("choose at least one of --naive, --fixed-set, --resample")
    write_manifest(out, "simulate", {**cfg, "naive": args.naive,
                                     "fixed_set": args.fixed_set,
                                     "resample": args.resample},
                   args.seed, [args.data, args.model, args.tables], __version__)
    return 0


def cmd_validate(args):
    cfg = _load_config(args.config)
    sim_cfg = _sim_config(args, cfg)
    days, charges, report = parse_trial(args.journeys, args.charges)
    model = ClusterModel.from_json(Path(args.model).read_text(encoding="utf-8"))
    result = leave_one_out_validate(days, charges, model, sim_cfg,
                                    sigma=args.sigma,
                                    runs_per_vehicle=args.runs_per_vehicle)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "validation.json", "w", encoding="utf-8") as fh:
        json.dump({
            "model_start_mape": result.model_start_mape,
            "naive_start_mape": result.naive_start_mape,
            "model_power_mape": result.model_power_mape,
            "naive_power_mape": result.naive_power_mape,
            "timing_accuracy": result.timing_accuracy,
            "vehicles": [{"vehicle_id": v.vehicle_id,
                          "n_observed_charges": v.n_observed_charges,
                          "skipped": v.skipped} for v in result.vehicles],
        }, fh, indent=2, sort_keys=True)
        fh.write("\n")
    write_manifest(out, "validate", cfg, args.seed,
                   [args.journeys, args.charges, args.model], __version__)
    return 0


def cmd_admd(args):
    cfg = _load_config(args.config)
    sim_cfg = _sim_config(args, cfg)
    model = ClusterModel.from_json(Path(args.model).read_text(encoding="utf-8"))
    from .charge_model import PosteriorTables
    tables = PosteriorTables.from_json(Path(args.tables).read_text(encoding="utf-8"))
    try:
        with open(args.regions, encoding="utf-8") as fh:
            region_cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read regions spec {args.regions}: {exc}") from exc

    regions = []
    for name, spec in sorted(region_cfg.items()):
        pool = _load_days(spec["pool"])
        regions.append(RegionSpec(name, pool, spec["e7_share"],
                                  spec["annual_kwh"], spec["n_households"]))
    flat = (BaselineProfile.from_csv(args.flat_profile) if args.flat_profile
            else example_flat_profile())
    e7 = (BaselineProfile.from_csv(args.e7_profile) if args.e7_profile
          else example_e7_profile())
    reports, failures = regional_batch(regions, model, tables, sim_cfg, flat, e7)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    ranked = sorted(reports, key=lambda r: -r.percent_increase)
    _write_csv(out / "admd.csv",
               ["region", "baseline_admd_kw", "combined_admd_kw", "percent_increase"],
               [[r.region, _fmt(r.baseline_admd_kw), _fmt(r.combined_admd_kw),
                 _fmt(r.percent_increase)] for r in ranked])
    with open(out / "admd.json", "w", encoding="utf-8") as fh:
        json.dump({
            "reports": [r.__dict__ for r in ranked],
            "failures": [{"region": n, "error": e} for n, e in failures],
        }, fh, indent=2, sort_keys=True)
        fh.write("\n")
    for name, err in failures:
        print(f"region {name} failed: {err}", file=sys.stderr)
    write_manifest(out, "admd", cfg, args.seed, [args.regions], __version__)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="evload",
                                description="EV charging demand modeling pipeline")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--threads", type=int, default=1)
        sp.add_argument("--config", default=None, help="JSON config file")
        sp.add_argument("--out", required=True, help="output directory")

    def sim_flags(sp):
        for name in SIM_FIELDS:
            typ = int if name in ("n_runs", "sample_size", "warm_up_days") else float
            sp.add_argument(f"--{name.replace('_', '-')}", dest=name,
                            type=typ, default=None)

    sp = sub.add_parser("synth", help="generate a synthetic fleet")
    common(sp)
    sp.add_argument("--spec", default=None, help="synthesis spec JSON")
    sp.set_defaults(fn=cmd_synth)

    sp = sub.add_parser("cluster", help="fit usage clusters and analyses")
    common(sp)
    sp.add_argument("--data", required=True, help="survey CSV")
    sp.add_argument("--k", type=int, default=3)
    sp.add_argument("--day-type", default="weekday", choices=["weekday", "weekend"])
    sp.add_argument("--k-min", type=int, default=1)
    sp.add_argument("--k-max", type=int, default=8)
    sp.add_argument("--seeds-per-k", type=int, default=3)
    sp.set_defaults(fn=cmd_cluster)

    sp = sub.add_parser("fit", help="fit charge probability tables")
    common(sp)
    sp.add_argument("--journeys", required=True)
    sp.add_argument("--charges", required=True)
    sp.add_argument("--model", required=True, help="cluster model JSON")
    sp.add_argument("--sigma", type=float, default=1.0)
    sp.add_argument("--window-minutes", type=float, default=10.0)
    sim_flags(sp)
    sp.set_defaults(fn=cmd_fit)

    sp = sub.add_parser("simulate", help="Monte Carlo load simulation")
    common(sp)
    sp.add_argument("--data", required=True, help="survey CSV")
    sp.add_argument("--model", required=True)
    sp.add_argument("--tables", required=True)
    sp.add_argument("--naive", action="store_true")
    sp.add_argument("--fixed-set", action="store_true")
    sp.add_argument("--resample", action="store_true")
    sim_flags(sp)
    sp.set_defaults(fn=cmd_simulate)

    sp = sub.add_parser("validate", help="leave-one-out validation")
    common(sp)
    sp.add_argument("--journeys", required=True)
    sp.add_argument("--charges", required=True)
    sp.add_argument("--model", required=True)
    sp.add_argument("--sigma", type=float, default=1.0)
    sp.add_argument("--runs-per-vehicle", type=int, default=5)
    sim_flags(sp)
    sp.set_defaults(fn=cmd_validate)

    sp = sub.add_parser("admd", help="regional ADMD case study")
    common(sp)
    sp.add_argument("--regions", required=True, help="regions spec JSON")
    sp.add_argument("--model", required=True)
    sp.add_argument("--tables", required=True)
    sp.add_argument("--flat-profile", default=None)
    sp.add_argument("--e7-profile", default=None)
    sim_flags(sp)
    sp.set_defaults(fn=cmd_admd)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.fn(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"internal error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
