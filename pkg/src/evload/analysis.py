"""Validation metrics and the ADMD (after diversity maximum demand) study."""

from __future__ import annotations

import csv
from dataclasses import dataclass, replace

import numpy as np

from .errors import DataError
from .charge_model import ChargeKind, classify_charges, fit_posteriors
from .clustering import ClusterModel
from .ingest import (N_SLOTS, ChargeEvent, DayType, SocTrace, VehicleDay,
                     infer_soc_traces, slot_of_minute)
from .simulator import (LoadDistribution, SimConfig, VehicleSimState,
                        monte_carlo_resampled, simulate_naive,
                        simulate_vehicle_day, _group_by_vehicle,
                        _precompute_clusters, _vehicle_rng)


def start_time_pdf(slots) -> np.ndarray:
    """Normalized histogram of charge-start slots over the 48 half-hour slots."""
    slots = list(slots)
    if not slots:
        raise DataError("start_time_pdf requires at least one event")
    hist = np.zeros(N_SLOTS)
    for s in slots:
        if not 0 <= s < N_SLOTS:
            raise DataError(f"slot {s} out of range")
        hist[s] += 1
    return hist / hist.sum()


def final_journey_end_pdf(days: list[VehicleDay]) -> np.ndarray:
    """PDF of final-journey-end slots over all used vehicle-days."""
    slots = [slot_of_minute(d.journeys[-1].end_minute)
             for d in days if not d.is_unused]
    return start_time_pdf(slots)


def mape(predicted: np.ndarray, observed: np.ndarray) -> float:
    """Mean absolute percentage error over slots with observed > 0."""
    pred = np.asarray(predicted, dtype=float)
    obs = np.asarray(observed, dtype=float)
    active = obs > 0
    if not active.any():
        raise DataError("mape: observed distribution is all zero")
    return float(np.mean(np.abs(pred[active] - obs[active]) / obs[active]) * 100.0)


def profile_from_start_pdf(pdf: np.ndarray, duration_slots: float) -> np.ndarray:
    """Demand-shaped distribution: circular convolution of a start PDF with
    a unit charging pulse of the given mean duration (in slots)."""
    width = max(1, int(round(duration_slots)))
    kernel = np.ones(width) / width
    out = np.zeros(N_SLOTS)
    for i, p in enumerate(pdf):
        for w, kv in enumerate(kernel):
            out[(i + w) % N_SLOTS] += p * kv
    return out


@dataclass(frozen=True)
class VehicleValidation:
    vehicle_id: str
    n_observed_charges: int
    skipped: bool = False


@dataclass(frozen=True)
class ValidationReport:
    vehicles: tuple
    model_start_mape: float
    naive_start_mape: float
    model_power_mape: float
    naive_power_mape: float
    timing_accuracy: float  # share of observed charges with a simulated start in the same or adjacent slot


def leave_one_out_validate(days: list[VehicleDay], charges: list[ChargeEvent],
                           cluster_model: ClusterModel, cfg: SimConfig,
                           sigma: float = 1.0, runs_per_vehicle: int = 5,
                           window_minutes: float = 10.0) -> ValidationReport:
    """Leave-one-vehicle-out validation of the stochastic model.

    For each vehicle the tables are refitted without it and its days are
    simulated; predicted start slots are pooled across vehicles and
    compared (MAPE of the start-time PDF and of a demand-shaped profile)
    against the observed charges, alongside the after-final-journey
    baseline. Vehicles without observed charges are skipped.
    """
    grouped_days = _group_by_vehicle(days)
    vids = sorted(grouped_days)
    if len(vids) < 2:
        raise DataError("leave-one-out needs at least 2 vehicles")
    charges_by: dict[str, list[ChargeEvent]] = {}
    for c in charges:
        charges_by.setdefault(c.vehicle_id, []).append(c)
    traces = infer_soc_traces(days, charges, cfg.battery_kwh, cfg.initial_soc)
    clusters = _precompute_clusters(days, cluster_model)

    observed_slots: list[int] = []
    model_slots: list[int] = []
    naive_slots: list[int] = []
    vehicle_reports = []
    n_matched = 0

    for vi, vid in enumerate(vids):
        own_charges = charges_by.get(vid, [])
        if not own_charges:
            vehicle_reports.append(VehicleValidation(vid, 0, skipped=True))
            continue
        train_days = [d for d in days if d.vehicle_id != vid]
        train_charges = [c for c in charges if c.vehicle_id != vid]
        train_labels, _ = classify_charges(train_days, train_charges, window_minutes)
        tables = fit_posteriors(train_days, train_labels, cluster_model,
                                traces, sigma)

        own_days = grouped_days[vid]
        vehicle_starts: list[int] = []
        for run in range(runs_per_vehicle):
            rng = _vehicle_rng(cfg.seed, run, vi)
            state = VehicleSimState(soc=cfg.initial_soc)
            for day in own_days:
                simulate_vehicle_day(day, clusters[(vid, day.day_index)],
                                     state, tables, cfg, rng)
            vehicle_starts.extend(s for _, s in state.charge_starts)
        model_slots.extend(vehicle_starts)

        nstate = VehicleSimState(soc=cfg.initial_soc)
        for day in own_days:
            simulate_naive(day, nstate, cfg)
        naive_slots.extend([s for _, s in nstate.charge_starts] * runs_per_vehicle)

        obs = [slot_of_minute(c.start_minute) for c in own_charges]
        observed_slots.extend(obs)
        sim_set = set(vehicle_starts)
        for s in obs:
            if sim_set & {s - 1, s, s + 1}:
                n_matched += 1
        vehicle_reports.append(VehicleValidation(vid, len(own_charges)))

    if not observed_slots:
        raise DataError("no observed charges across the dataset")
    obs_pdf = start_time_pdf(observed_slots)
    model_pdf = start_time_pdf(model_slots) if model_slots else np.full(N_SLOTS, 1 / N_SLOTS)
    naive_pdf = start_time_pdf(naive_slots) if naive_slots else np.full(N_SLOTS, 1 / N_SLOTS)

    # typical charge duration for the demand-shaping convolution
    durations = [(c.end_minute - c.start_minute) / 30.0 for c in charges]
    dur = float(np.mean(durations)) if durations else 2.0
    obs_profile = profile_from_start_pdf(obs_pdf, dur)
    return ValidationReport(
        tuple(vehicle_reports),
        model_start_mape=mape(model_pdf, obs_pdf),
        naive_start_mape=mape(naive_pdf, obs_pdf),
        model_power_mape=mape(profile_from_start_pdf(model_pdf, dur), obs_profile),
        naive_power_mape=mape(profile_from_start_pdf(naive_pdf, dur), obs_profile),
        timing_accuracy=n_matched / len(observed_slots),
    )


@dataclass(frozen=True)
class BaselineProfile:
    """Per-household mean demand (kW) at half-hour resolution."""

    kw: np.ndarray
    day_type: DayType = DayType.WEEKDAY
    season: str = "winter"

    def __post_init__(self):
        if len(self.kw) != N_SLOTS:
            raise DataError(f"baseline profile needs {N_SLOTS} slots")
        if np.any(np.asarray(self.kw) < 0):
            raise DataError("baseline profile must be non-negative")

    @property
    def daily_kwh(self) -> float:
        return float(np.sum(self.kw) * 0.5)

    @classmethod
    def from_csv(cls, path) -> "BaselineProfile":
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            if header[:2] != ["slot", "kw"]:
                raise DataError(f"{path}: expected header slot,kw[,day_type,season]")
            day_type = DayType[header[2]] if len(header) > 2 else DayType.WEEKDAY
            season = header[3] if len(header) > 3 else "winter"
            kw = np.zeros(N_SLOTS)
            for row in reader:
                kw[int(row[0])] = float(row[1])
        return cls(kw, day_type, season)


def blend_baseline(flat: BaselineProfile, e7: BaselineProfile,
                   e7_share: float, annual_kwh: float) -> BaselineProfile:
    """Convex tariff blend rescaled so implied annual energy matches annual_kwh."""
    if not 0 <= e7_share <= 1:
        raise DataError(f"e7_share must be in [0, 1], got {e7_share}")
    if annual_kwh <= 0:
        raise DataError(f"annual_kwh must be > 0, got {annual_kwh}")
    if flat.day_type != e7.day_type or flat.season != e7.season:
        raise DataError("baseline profiles must share day_type and season tags")
    mix = (1 - e7_share) * flat.kw + e7_share * e7.kw
    implied_annual = float(mix.sum() * 0.5 * 365.0)
    if implied_annual <= 0:
        raise DataError("blended profile has zero energy; cannot scale")
    return BaselineProfile(mix * (annual_kwh / implied_annual),
                           flat.day_type, flat.season)


@dataclass(frozen=True)
class AdmdReport:
    region: str
    baseline_admd_kw: float
    combined_admd_kw: float
    percent_increase: float


def admd_increase(baseline: BaselineProfile, ev: LoadDistribution,
                  n_households: int, region: str = "",
                  use_percentile: bool = False) -> AdmdReport:
    """Percent ADMD increase from superimposing mean EV load on the baseline.

    The EV distribution holds the aggregate fleet load; it is divided by
    n_households. With use_percentile the 95th percentile profile is used
    instead of the mean (not the standard definition).
    """
    if n_households < 1:
        raise DataError("n_households must be >= 1")
    if float(np.max(baseline.kw)) <= 0:
        raise DataError("baseline profile is all zero; ADMD undefined")
    if ev.day_type is not None and ev.day_type != baseline.day_type:
        raise DataError("EV load and baseline day_type tags differ")
    ev_per_house = (ev.p95_kw if use_percentile else ev.mean_kw) / n_households
    base = float(np.max(baseline.kw))
    combined = float(np.max(baseline.kw + ev_per_house))
    return AdmdReport(region, base, combined, (combined - base) / base * 100.0)


@dataclass(frozen=True)
class RegionSpec:
    name: str
    pool: list  # VehicleDay pool for the region
    e7_share: float
    annual_kwh: float
    n_households: int


def regional_batch(regions: list[RegionSpec], cluster_model: ClusterModel,
                   tables, cfg: SimConfig, flat: BaselineProfile,
                   e7: BaselineProfile) -> tuple[list[AdmdReport], list[tuple[str, str]]]:
    """Resampled Monte Carlo plus ADMD computation per region.

    Failures are isolated: a failing region is reported in the second
    return value and the remaining regions still complete.
    """
    reports = []
    failures = []
    for region in regions:
        try:
            dist = monte_carlo_resampled(region.pool, cluster_model, tables, cfg,
                                         retain_samples=False)
            baseline = blend_baseline(flat, e7, region.e7_share, region.annual_kwh)
            reports.append(admd_increase(baseline, dist, region.n_households,
                                         region.name))
        except Exception as exc:  # noqa: BLE001 - isolation is the contract
            failures.append((region.name, str(exc)))
    return reports, failures


def example_flat_profile(day_type: DayType = DayType.WEEKDAY,
                         season: str = "winter") -> BaselineProfile:
    """Bundled flat-rate-shaped profile: daytime hump peaking in the evening."""
    t = np.arange(N_SLOTS)
    kw = 0.3 + 0.5 * np.exp(-0.5 * ((t - 36) / 6.0) ** 2) \
        + 0.2 * np.exp(-0.5 * ((t - 16) / 8.0) ** 2)
    return BaselineProfile(kw, day_type, season)


def example_e7_profile(day_type: DayType = DayType.WEEKDAY,
                       season: str = "winter") -> BaselineProfile:
    """Bundled economy7-shaped profile: overnight block plus a smaller evening hump."""
    t = np.arange(N_SLOTS)
    kw = 0.25 + 0.45 * np.exp(-0.5 * ((t - 36) / 6.0) ** 2)
    kw = kw + np.where((t >= 1) & (t < 15), 0.8, 0.0)
    return BaselineProfile(kw, day_type, season)
