"""Monte Carlo simulation of residential EV charging load.

Each vehicle-day is stepped through the 48 half-hour slots. When a journey
ends in a slot the battery is depleted and the after-journey table is
sampled at the journey's end minute; otherwise, if the vehicle is idle at
home at the slot start, the independent table is sampled there. A draw
below the table probability starts a charge, which runs at constant
charger power until the battery is full or the vehicle is next used,
crossing midnight if necessary. Grid-side power is reported; the battery
receives charger power times efficiency.

Runs are reproducible and schedule-independent: each (run, vehicle) pair
owns an rng stream spawned from the root seed via
``SeedSequence(seed, spawn_key=(run, vehicle))``.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigError, DataError
from .charge_model import (PosteriorTables, day_slot_occupancy, discretize_soc,
                           lookup_after_journey, lookup_independent)
from .clustering import ClusterModel, assign, build_feature_vector
from .ingest import (MINUTES_PER_DAY, N_SLOTS, SLOT_MINUTES, VehicleDay,
                     slot_of_minute)


@dataclass(frozen=True)
class SimConfig:
    charger_kw: float = 3.5
    efficiency: float = 0.9
    battery_kwh: float = 24.0
    kwh_per_mile: float = 0.3
    initial_soc: float = 1.0
    n_runs: int = 100
    seed: int = 0
    resample_vehicles: bool = False
    sample_size: int = 50
    warm_up_days: int = 0
    threads: int = 1

    def __post_init__(self):
        if not 0 < self.efficiency <= 1:
            raise ConfigError(f"efficiency must be in (0, 1], got {self.efficiency}")
        if self.charger_kw <= 0 or self.battery_kwh <= 0:
            raise ConfigError("charger_kw and battery_kwh must be > 0")
        if self.n_runs < 1:
            raise ConfigError(f"n_runs must be >= 1, got {self.n_runs}")


@dataclass
class VehicleSimState:
    soc: float = 1.0
    charging: bool = False
    inconsistent: bool = False
    charge_starts: list = field(default_factory=list)  # (day_index, slot)
    grid_energy_kwh: float = 0.0
    battery_energy_kwh: float = 0.0


def _charge_span(state: VehicleSimState, cfg: SimConfig, start_minute: float,
                 limit_minute: float, profile: np.ndarray) -> float:
    """Charge from start_minute until full or limit; returns the end minute.

    Accumulates grid power into the day profile (mean kW per slot) and
    updates SOC and the energy counters.
    """
    deficit_kwh = (1.0 - state.soc) * cfg.battery_kwh
    full_minute = start_minute + deficit_kwh / (cfg.charger_kw * cfg.efficiency) * 60.0
    end = min(full_minute, limit_minute)
    if end > start_minute:
        t0 = int(start_minute // SLOT_MINUTES)
        t1 = min(int((end - 1e-9) // SLOT_MINUTES), N_SLOTS - 1)
        for t in range(t0, t1 + 1):
            lo = max(start_minute, t * SLOT_MINUTES)
            hi = min(end, (t + 1) * SLOT_MINUTES)
            profile[t] += cfg.charger_kw * (hi - lo) / SLOT_MINUTES
        grid = cfg.charger_kw * (end - start_minute) / 60.0
        state.grid_energy_kwh += grid
        state.battery_energy_kwh += grid * cfg.efficiency
        state.soc = min(1.0, state.soc + grid * cfg.efficiency / cfg.battery_kwh)
    state.charging = end >= limit_minute and end < full_minute
    return end


def _deplete(state: VehicleSimState, cfg: SimConfig, distance: float):
    used = distance * cfg.kwh_per_mile / cfg.battery_kwh
    state.soc -= used
    if state.soc < 0:
        state.soc = 0.0
        state.inconsistent = True


def simulate_vehicle_day(day: VehicleDay, k, state: VehicleSimState,
                         tables: PosteriorTables, cfg: SimConfig,
                         rng: np.random.Generator) -> np.ndarray:
    """One stochastic day for one vehicle; returns the 48-slot grid kW profile.

    `k` is the day's usage cluster (1..3) or None for an unused day; `state`
    is mutated and carries SOC and any in-progress charge into the next day.
    """
    profile = np.zeros(N_SLOTS)
    d = day.day_type.value
    journeys = list(day.journeys)
    overlap, end_slots = day_slot_occupancy(day)
    starts = [j.start_minute for j in journeys]

    def next_use(after: float) -> float:
        for s in starts:
            if s > after:
                return s
        return float(MINUTES_PER_DAY)

    # a charge carried over midnight continues until full or first use
    if state.charging:
        _charge_span(state, cfg, 0.0, next_use(0.0), profile)

    ji = 0
    for t in range(N_SLOTS):
        slot_start = float(t * SLOT_MINUTES)
        if t in end_slots:
            while ji < len(journeys) and slot_of_minute(journeys[ji].end_minute) == t:
                j = journeys[ji]
                ji += 1
                state.charging = False  # driving precludes charging
                _deplete(state, cfg, j.distance)
                p = lookup_after_journey(tables, d, t, k, discretize_soc(state.soc))
                if rng.random() < p:
                    state.charge_starts.append((day.day_index, t))
                    _charge_span(state, cfg, j.end_minute, next_use(j.end_minute),
                                 profile)
        elif not overlap[t] and not state.charging:
            p = lookup_independent(tables, d, t, discretize_soc(state.soc))
            if rng.random() < p:
                state.charge_starts.append((day.day_index, t))
                _charge_span(state, cfg, slot_start, next_use(slot_start), profile)
    return profile


def simulate_naive(day: VehicleDay, state: VehicleSimState,
                   cfg: SimConfig) -> np.ndarray:
    """Deterministic baseline: charging begins at the final journey end.

    A start is registered even when the battery is already full (the charge
    then delivers no energy). Charges carried over midnight continue until
    full or the vehicle's next use.
    """
    profile = np.zeros(N_SLOTS)
    journeys = list(day.journeys)
    starts = [j.start_minute for j in journeys]

    def next_use(after: float) -> float:
        for s in starts:
            if s > after:
                return s
        return float(MINUTES_PER_DAY)

    if state.charging:
        _charge_span(state, cfg, 0.0, next_use(0.0), profile)
    for i, j in enumerate(journeys):
        state.charging = False
        _deplete(state, cfg, j.distance)
        if i == len(journeys) - 1:
            state.charge_starts.append((day.day_index, slot_of_minute(j.end_minute)))
            _charge_span(state, cfg, j.end_minute, float(MINUTES_PER_DAY), profile)
    return profile


@dataclass(frozen=True)
class LoadDistribution:
    """Per-slot aggregate load statistics across Monte Carlo runs."""

    mean_kw: np.ndarray
    p05_kw: np.ndarray
    p95_kw: np.ndarray
    samples: np.ndarray | None = None  # (n_runs, 48) when retained
    day_type: object = None

    @classmethod
    def from_samples(cls, samples: np.ndarray, retain: bool = True,
                     day_type=None) -> "LoadDistribution":
        return cls(samples.mean(axis=0),
                   np.percentile(samples, 5, axis=0),
                   np.percentile(samples, 95, axis=0),
                   samples if retain else None, day_type)


def _group_by_vehicle(days: list[VehicleDay]) -> dict[str, list[VehicleDay]]:
    grouped: dict[str, list[VehicleDay]] = {}
    for d in days:
        grouped.setdefault(d.vehicle_id, []).append(d)
    for seq in grouped.values():
        seq.sort(key=lambda d: d.day_index)
    return grouped


def _vehicle_rng(seed: int, run: int, vehicle: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(run, vehicle)))


def _precompute_clusters(days: list[VehicleDay], model: ClusterModel) -> dict:
    out = {}
    for d in days:
        v = build_feature_vector(d)
        out[(d.vehicle_id, d.day_index)] = None if v is None else assign(model, v)
    return out


def _run_fleet(vehicles: list[list[VehicleDay]], clusters: dict,
               tables: PosteriorTables, cfg: SimConfig, run: int) -> np.ndarray:
    """One run: simulate every vehicle's day sequence, aggregate mean daily profile."""
    n_days_max = max(len(seq) for seq in vehicles)
    agg = np.zeros((n_days_max, N_SLOTS))
    for vi, seq in enumerate(vehicles):
        rng = _vehicle_rng(cfg.seed, run, vi)
        state = VehicleSimState(soc=cfg.initial_soc)
        for di, day in enumerate(seq):
            k = clusters[(day.vehicle_id, day.day_index)]
            agg[di] += simulate_vehicle_day(day, k, state, tables, cfg, rng)
    keep = agg[cfg.warm_up_days:] if cfg.warm_up_days < len(agg) else agg
    return keep.mean(axis=0)


def monte_carlo(days: list[VehicleDay], cluster_model: ClusterModel,
                tables: PosteriorTables, cfg: SimConfig,
                retain_samples: bool = True) -> LoadDistribution:
    """Fixed-set Monte Carlo: the given vehicles are simulated n_runs times.

    The per-run profile is the aggregate grid load, averaged over simulated
    days when vehicles carry more than one day. Deterministic given
    cfg.seed at any thread count.
    """
    grouped = _group_by_vehicle(days)
    vehicles = [grouped[v] for v in sorted(grouped)]
    if not vehicles:
        raise DataError("monte_carlo requires at least one vehicle")
    clusters = _precompute_clusters(days, cluster_model)

    def one(run):
        return _run_fleet(vehicles, clusters, tables, cfg, run)

    samples = _map_runs(one, cfg)
    return LoadDistribution.from_samples(samples, retain_samples)


def monte_carlo_resampled(pool: list[VehicleDay], cluster_model: ClusterModel,
                          tables: PosteriorTables, cfg: SimConfig,
                          retain_samples: bool = True) -> LoadDistribution:
    """Monte Carlo with a fresh uniform draw of sample_size vehicles per run."""
    grouped = _group_by_vehicle(pool)
    vids = sorted(grouped)
    if len(vids) < cfg.sample_size:
        raise DataError(f"pool has {len(vids)} vehicles, need >= {cfg.sample_size}")
    clusters = _precompute_clusters(pool, cluster_model)

    def one(run):
        draw_rng = np.random.default_rng(np.random.SeedSequence(cfg.seed, spawn_key=(run,)))
        chosen = draw_rng.choice(len(vids), size=cfg.sample_size, replace=False)
        vehicles = [grouped[vids[i]] for i in sorted(chosen)]
        return _run_fleet(vehicles, clusters, tables, cfg, run)

    samples = _map_runs(one, cfg)
    return LoadDistribution.from_samples(samples, retain_samples)


def naive_aggregate(days: list[VehicleDay], cfg: SimConfig) -> np.ndarray:
    """Deterministic aggregate profile of the after-final-journey baseline."""
    grouped = _group_by_vehicle(days)
    n_days_max = max(len(seq) for seq in grouped.values())
    agg = np.zeros((n_days_max, N_SLOTS))
    for seq in grouped.values():
        state = VehicleSimState(soc=cfg.initial_soc)
        for di, day in enumerate(seq):
            agg[di] += simulate_naive(day, state, cfg)
    keep = agg[cfg.warm_up_days:] if cfg.warm_up_days < len(agg) else agg
    return keep.mean(axis=0)


def _map_runs(fn, cfg: SimConfig) -> np.ndarray:
    runs = range(cfg.n_runs)
    if cfg.threads > 1:
        with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
            results = list(pool.map(fn, runs))
    else:
        results = [fn(r) for r in runs]
    return np.array(results)
