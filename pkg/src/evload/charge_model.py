"""Conditional charge-probability tables estimated from trial data.

Charges are split into two kinds: *after-journey* (begun within a fixed
window, 10 minutes by default, of the end of any journey of that vehicle)
and *independent* (everything else, e.g. overnight timer charges). The
after-journey table is indexed by (day type, time slot, usage cluster, SOC
state); the independent table drops the cluster. Probabilities are the
fraction of opportunities that resulted in a charge, optionally smoothed
with a Gaussian filter over (time, SOC) where time wraps at midnight.
"""

from __future__ import annotations

import json
import math
from bisect import bisect_left, bisect_right
from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np

from .errors import DataError
from .ingest import (MINUTES_PER_DAY, N_SLOTS, SLOT_MINUTES, ChargeEvent,
                     Journey, SocTrace, VehicleDay, slot_of_minute)
from .clustering import ClusterModel, assign, build_feature_vector

N_DAY_TYPES = 2
N_SOC_STATES = 6
N_CLUSTERS = 3


class ChargeKind(Enum):
    AFTER_JOURNEY = "after_journey"
    INDEPENDENT = "independent"


@dataclass(frozen=True)
class ChargeLabel:
    event: ChargeEvent
    kind: ChargeKind
    matched_journey: Optional[Journey] = None


@dataclass(frozen=True)
class ClassificationStats:
    n_charges: int
    fraction_after_any_journey: float
    fraction_after_final_journey: float


def discretize_soc(soc: float) -> int:
    """Uniform bins of width 1/6 over [0, 1]; soc = 1.0 maps to state 5."""
    if not 0.0 <= soc <= 1.0:
        raise DataError(f"soc {soc} outside [0, 1]")
    return min(int(soc * N_SOC_STATES), N_SOC_STATES - 1)


def classify_charges(days: list[VehicleDay], charges: list[ChargeEvent],
                     window_minutes: float = 10.0
                     ) -> tuple[list[ChargeLabel], ClassificationStats]:
    """Label each charge after-journey or independent.

    A charge is after-journey when its start lies within [0, window] minutes
    (inclusive) of the end of any journey of that vehicle; the latest such
    journey is matched. Also reports the shares of charges following any
    journey and following the final journey of a day.
    """
    if window_minutes <= 0:
        raise DataError(f"window_minutes must be > 0, got {window_minutes}")
    ends_by_vehicle: dict[str, list[tuple[float, Journey, bool]]] = {}
    for day in days:
        for i, j in enumerate(day.journeys):
            is_final = i == len(day.journeys) - 1
            t = day.day_index * MINUTES_PER_DAY + j.end_minute
            ends_by_vehicle.setdefault(day.vehicle_id, []).append((t, j, is_final))
    for lst in ends_by_vehicle.values():
        lst.sort(key=lambda e: e[0])

    labels: list[ChargeLabel] = []
    n_any = n_final = 0
    for c in charges:
        match = None
        matched_final = False
        for t, j, is_final in ends_by_vehicle.get(c.vehicle_id, []):
            if 0 <= c.abs_start - t <= window_minutes:
                match = j
                matched_final = is_final
        if match is not None:
            labels.append(ChargeLabel(c, ChargeKind.AFTER_JOURNEY, match))
            n_any += 1
            if matched_final:
                n_final += 1
        else:
            labels.append(ChargeLabel(c, ChargeKind.INDEPENDENT))
    n = len(charges)
    stats = ClassificationStats(n, n_any / n if n else 0.0, n_final / n if n else 0.0)
    return labels, stats


def _gaussian_kernel(sigma: float) -> np.ndarray:
    """Discrete Gaussian with radius ceil(4 sigma), normalized to sum 1."""
    radius = int(math.ceil(4 * sigma))
    offsets = np.arange(-radius, radius + 1)
    w = np.exp(-0.5 * (offsets / sigma) ** 2)
    return w / w.sum()


def smooth_table(table: np.ndarray, sigma: float) -> np.ndarray:
    """Gaussian smoothing of the trailing (t, s) axes of a probability table.

    The time axis wraps circularly at midnight; the SOC axis truncates the
    kernel at its boundaries and renormalizes, so constant tables map to
    themselves. sigma = 0 returns the input unchanged.
    """
    if sigma < 0:
        raise DataError(f"sigma must be >= 0, got {sigma}")
    if sigma == 0:
        return table.copy()
    arr = np.asarray(table, dtype=float)
    nt, ns = arr.shape[-2], arr.shape[-1]
    w = _gaussian_kernel(sigma)
    radius = len(w) // 2

    flat = arr.reshape(-1, nt, ns)
    out = np.zeros_like(flat)
    # time axis: circular convolution
    tmp = np.zeros_like(flat)
    for o, wt in zip(range(-radius, radius + 1), w):
        tmp += wt * np.roll(flat, o, axis=1)
    # SOC axis: truncated and renormalized
    for s in range(ns):
        lo, hi = max(0, s - radius), min(ns - 1, s + radius)
        ws = w[(lo - s) + radius:(hi - s) + radius + 1]
        ws = ws / ws.sum()
        out[:, :, s] = (tmp[:, :, lo:hi + 1] * ws).sum(axis=2)
    return np.clip(out.reshape(arr.shape), 0.0, 1.0)


@dataclass(frozen=True)
class PosteriorTables:
    """Smoothed charge-start probabilities and their opportunity counts.

    after_journey: (2, 48, 3, 6) over (day type, time slot, cluster, SOC state)
    independent:   (2, 48, 6) over (day type, time slot, SOC state)
    """

    after_journey: np.ndarray
    independent: np.ndarray
    after_journey_opportunities: np.ndarray
    independent_opportunities: np.ndarray
    sigma: float

    def to_json(self) -> str:
        return json.dumps({
            "dimensions": {
                "after_journey": list(self.after_journey.shape),
                "independent": list(self.independent.shape),
            },
            "sigma": self.sigma,
            "after_journey": self.after_journey.tolist(),
            "independent": self.independent.tolist(),
            "after_journey_opportunities": self.after_journey_opportunities.tolist(),
            "independent_opportunities": self.independent_opportunities.tolist(),
        }, indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "PosteriorTables":
        d = json.loads(text)
        return cls(np.asarray(d["after_journey"], dtype=float),
                   np.asarray(d["independent"], dtype=float),
                   np.asarray(d["after_journey_opportunities"], dtype=int),
                   np.asarray(d["independent_opportunities"], dtype=int),
                   float(d["sigma"]))


def lookup_after_journey(tables: PosteriorTables, d: int, t: int, k: int, s: int) -> float:
    """P(after-journey charge | day type d, slot t, cluster k in 1..3, SOC state s)."""
    if not (0 <= d < N_DAY_TYPES and 0 <= t < N_SLOTS
            and 1 <= k <= N_CLUSTERS and 0 <= s < N_SOC_STATES):
        raise DataError(f"state index out of range: d={d} t={t} k={k} s={s}")
    return float(tables.after_journey[d, t, k - 1, s])


def lookup_independent(tables: PosteriorTables, d: int, t: int, s: int) -> float:
    """P(independent charge | day type d, slot t, SOC state s)."""
    if not (0 <= d < N_DAY_TYPES and 0 <= t < N_SLOTS and 0 <= s < N_SOC_STATES):
        raise DataError(f"state index out of range: d={d} t={t} s={s}")
    return float(tables.independent[d, t, s])


class _ChargeIntervals:
    """Membership test for 'charging at absolute minute m' over sorted intervals."""

    def __init__(self, charges: list[ChargeEvent]):
        ivals = sorted((c.abs_start, c.abs_end) for c in charges)
        self.starts = [a for a, _ in ivals]
        self.ends = [b for _, b in ivals]

    def charging_at(self, m: float) -> bool:
        """True when a charge begun strictly before m is still in progress."""
        i = bisect_left(self.starts, m)
        return i > 0 and m < self.ends[i - 1]


def day_slot_occupancy(day: VehicleDay) -> tuple[list[bool], set[int]]:
    """(journey-overlap flags per slot, set of slots containing a journey end)."""
    overlap = [False] * N_SLOTS
    end_slots = set()
    for j in day.journeys:
        first = int(j.start_minute // SLOT_MINUTES)
        last = min(int((j.end_minute - 1e-9) // SLOT_MINUTES), N_SLOTS - 1)
        for t in range(first, last + 1):
            overlap[t] = True
        end_slots.add(slot_of_minute(j.end_minute))
    return overlap, end_slots


def fit_posteriors(days: list[VehicleDay], labels: list[ChargeLabel],
                   cluster_model: ClusterModel, soc_traces: dict[str, SocTrace],
                   sigma: float = 1.0) -> PosteriorTables:
    """Estimate the charge-probability tables by counting, then smooth.

    After-journey cells count journey ends (opportunities) against those
    followed by a matched charge. Independent cells count idle at-home
    half-hour slots against those in which an independent charge began; a
    slot qualifies when no journey overlaps it, no journey ends in it, and
    the vehicle is not charging at the slot start. Unused days contribute
    to the independent table only.
    """
    aj_opp = np.zeros((N_DAY_TYPES, N_SLOTS, N_CLUSTERS, N_SOC_STATES), dtype=int)
    aj_succ = np.zeros_like(aj_opp)
    ind_opp = np.zeros((N_DAY_TYPES, N_SLOTS, N_SOC_STATES), dtype=int)
    ind_succ = np.zeros_like(ind_opp)

    matched = {lab.matched_journey.key for lab in labels
               if lab.kind is ChargeKind.AFTER_JOURNEY}
    ind_starts: dict[str, list[float]] = {}
    charges_by_vehicle: dict[str, list[ChargeEvent]] = {}
    for lab in labels:
        charges_by_vehicle.setdefault(lab.event.vehicle_id, []).append(lab.event)
        if lab.kind is ChargeKind.INDEPENDENT:
            ind_starts.setdefault(lab.event.vehicle_id, []).append(lab.event.abs_start)
    intervals = {vid: _ChargeIntervals(cs) for vid, cs in charges_by_vehicle.items()}
    for lst in ind_starts.values():
        lst.sort()

    if not any(charges_by_vehicle.values()):
        import warnings
        warnings.warn("no charge events; posterior tables are all zero")

    for day in days:
        trace = soc_traces.get(day.vehicle_id)
        if trace is None:
            raise DataError(f"no SOC trace for vehicle {day.vehicle_id}")
        d = day.day_type.value
        v = build_feature_vector(day)
        k = None if v is None else assign(cluster_model, v)
        ivals = intervals.get(day.vehicle_id)
        starts = ind_starts.get(day.vehicle_id, [])
        overlap, end_slots = day_slot_occupancy(day)

        if k is not None:
            for j in day.journeys:
                t = slot_of_minute(j.end_minute)
                s = discretize_soc(trace.soc_at(day.day_index, j.end_minute))
                aj_opp[d, t, k - 1, s] += 1
                if j.key in matched:
                    aj_succ[d, t, k - 1, s] += 1

        for t in range(N_SLOTS):
            if overlap[t] or t in end_slots:
                continue
            slot_abs = day.day_index * MINUTES_PER_DAY + t * SLOT_MINUTES
            if ivals is not None and ivals.charging_at(slot_abs):
                continue
            s = discretize_soc(trace.soc_at(day.day_index, t * SLOT_MINUTES))
            ind_opp[d, t, s] += 1
            i = bisect_right(starts, slot_abs - 1e-9)
            if i < len(starts) and starts[i] < slot_abs + SLOT_MINUTES:
                ind_succ[d, t, s] += 1

    with np.errstate(divide="ignore", invalid="ignore"):
        aj = np.where(aj_opp > 0, aj_succ / np.maximum(aj_opp, 1), 0.0)
        ind = np.where(ind_opp > 0, ind_succ / np.maximum(ind_opp, 1), 0.0)
    return PosteriorTables(smooth_table(aj, sigma), smooth_table(ind, sigma),
                           aj_opp, ind_opp, sigma)


def heatmap_rows(tables: PosteriorTables) -> list[dict]:
    """Long-format cells for CSV export: one row per table cell."""
    rows = []
    for d in range(N_DAY_TYPES):
        for t in range(N_SLOTS):
            for k in range(N_CLUSTERS):
                for s in range(N_SOC_STATES):
                    rows.append({"table": "after_journey", "d": d, "t": t,
                                 "k": k + 1, "s": s,
                                 "probability": float(tables.after_journey[d, t, k, s])})
    for d in range(N_DAY_TYPES):
        for t in range(N_SLOTS):
            for s in range(N_SOC_STATES):
                rows.append({"table": "independent", "d": d, "t": t, "k": "",
                             "s": s, "probability": float(tables.independent[d, t, s])})
    return rows
