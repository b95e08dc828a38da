"""K-means clustering of vehicle-day velocity profiles and cluster analyses.

The feature space is the 48-slot normalized velocity profile of a
vehicle-day. Days without journeys ("unused") have a zero profile and are
excluded from clustering; they appear as the extra state ``U`` in the
transition matrix and composition reports.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DataError
from .ingest import N_SLOTS, SLOT_MINUTES, DayType, VehicleDay, slot_of_minute

UNUSED = "U"


def build_feature_vector(day: VehicleDay) -> np.ndarray | None:
    """Normalized per-slot mean velocity profile; None for an unused day.

    Each journey drives at constant speed distance/duration; a slot's value
    is that speed weighted by the fraction of the slot the journey covers.
    The profile is scaled to sum to 1.
    """
    if day.is_unused:
        return None
    v = np.zeros(N_SLOTS)
    for j in day.journeys:
        speed = j.distance / (j.duration / 60.0)  # mph
        first = int(j.start_minute // SLOT_MINUTES)
        last = min(int((j.end_minute - 1e-9) // SLOT_MINUTES), N_SLOTS - 1)
        for t in range(first, last + 1):
            lo = max(j.start_minute, t * SLOT_MINUTES)
            hi = min(j.end_minute, (t + 1) * SLOT_MINUTES)
            v[t] += speed * (hi - lo) / SLOT_MINUTES
    total = v.sum()
    if total <= 0:
        return None
    return v / total


def raw_speed_profile(day: VehicleDay) -> np.ndarray:
    """Unnormalized per-slot mean velocity (mph); zeros for an unused day."""
    v = np.zeros(N_SLOTS)
    for j in day.journeys:
        speed = j.distance / (j.duration / 60.0)
        first = int(j.start_minute // SLOT_MINUTES)
        last = min(int((j.end_minute - 1e-9) // SLOT_MINUTES), N_SLOTS - 1)
        for t in range(first, last + 1):
            lo = max(j.start_minute, t * SLOT_MINUTES)
            hi = min(j.end_minute, (t + 1) * SLOT_MINUTES)
            v[t] += speed * (hi - lo) / SLOT_MINUTES
    return v


@dataclass(frozen=True)
class ClusterModel:
    day_type: DayType
    k: int
    centroids: np.ndarray  # (k, 48)

    @property
    def cluster_labels(self) -> list[int]:
        return list(range(1, self.k + 1))

    def to_json(self) -> str:
        return json.dumps({
            "day_type": self.day_type.name,
            "k": self.k,
            "centroids": self.centroids.tolist(),
        }, indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "ClusterModel":
        d = json.loads(text)
        return cls(DayType[d["day_type"]], int(d["k"]),
                   np.asarray(d["centroids"], dtype=float))


def _nearest(centroids: np.ndarray, points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Index of nearest centroid per point plus squared distances (ties -> lowest index)."""
    d2 = ((points[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
    idx = d2.argmin(axis=1)
    return idx, d2[np.arange(len(points)), idx]


def _plusplus_init(points: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """k-means++ seeding."""
    n = len(points)
    centroids = np.empty((k, points.shape[1]))
    centroids[0] = points[rng.integers(n)]
    d2 = ((points - centroids[0]) ** 2).sum(axis=1)
    for c in range(1, k):
        total = d2.sum()
        if total <= 0:
            centroids[c] = points[rng.integers(n)]
        else:
            centroids[c] = points[rng.choice(n, p=d2 / total)]
        d2 = np.minimum(d2, ((points - centroids[c]) ** 2).sum(axis=1))
    return centroids


def kmeans_fit(points: list[np.ndarray] | np.ndarray, k: int, seed: int,
               max_iter: int = 300, tol: float = 1e-6,
               day_type: DayType = DayType.WEEKDAY,
               init: np.ndarray | None = None) -> ClusterModel:
    """Lloyd's algorithm with k-means++ seeding, deterministic given seed.

    Empty clusters are repaired by reseeding from the point farthest from
    its assigned centroid. `init` overrides the seeding (used to warm-start
    a (k+1)-fit from a k-model).
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or len(pts) == 0:
        raise DataError("kmeans_fit needs a non-empty (n, 48) point array")
    if k < 1:
        raise ConfigError(f"k must be >= 1, got {k}")
    n_distinct = len(np.unique(pts, axis=0))
    if k > n_distinct:
        raise DataError(f"k={k} exceeds {n_distinct} distinct points")

    rng = np.random.default_rng(seed)
    if init is not None:
        centroids = np.array(init, dtype=float)
        if centroids.shape[0] < k:
            extra = _plusplus_init(pts, k - centroids.shape[0], rng)
            centroids = np.vstack([centroids, extra])
    else:
        centroids = _plusplus_init(pts, k, rng)

    for _ in range(max_iter):
        idx, d2 = _nearest(centroids, pts)
        new = np.empty_like(centroids)
        for c in range(k):
            mask = idx == c
            if mask.any():
                new[c] = pts[mask].mean(axis=0)
            else:
                new[c] = pts[d2.argmax()]
                d2 = d2.copy()
                d2[d2.argmax()] = 0.0
        shift = np.sqrt(((new - centroids) ** 2).sum(axis=1)).max()
        centroids = new
        if shift < tol:
            break
    return ClusterModel(day_type, k, centroids)


def kmeans_fit_restarts(points, k: int, seed: int = 0, restarts: int = 5,
                        max_iter: int = 300, tol: float = 1e-6,
                        day_type: DayType = DayType.WEEKDAY) -> ClusterModel:
    """Best-of-restarts fit: lowest sum of squares over derived seeds."""
    best_model, best_sos = None, np.inf
    for r in range(restarts):
        model = kmeans_fit(points, k, seed=seed * 1000 + r, max_iter=max_iter,
                           tol=tol, day_type=day_type)
        sos = sum_of_squares(model, points)
        if sos < best_sos:
            best_model, best_sos = model, sos
    return best_model


def sum_of_squares(model: ClusterModel, points) -> float:
    """Total squared distance of each point to its nearest centroid."""
    pts = np.asarray(points, dtype=float)
    _, d2 = _nearest(model.centroids, pts)
    return float(d2.sum())


def assign(model: ClusterModel, v: np.ndarray) -> int:
    """1-based label of the nearest centroid; ties break to the lowest label."""
    d2 = ((model.centroids - np.asarray(v, dtype=float)) ** 2).sum(axis=1)
    return int(d2.argmin()) + 1


def elbow_scan(points, k_range: tuple[int, int], seeds_per_k: int = 3,
               seed: int = 0, day_type: DayType = DayType.WEEKDAY) -> list[tuple[int, float]]:
    """Best (lowest) sum of squares per k over restarts, ordered by k."""
    lo, hi = k_range
    if not 1 <= lo <= hi <= 12:
        raise ConfigError(f"k_range must lie within [1, 12], got {k_range}")
    out = []
    for k in range(lo, hi + 1):
        best = np.inf
        for s in range(seeds_per_k):
            model = kmeans_fit(points, k, seed=seed * 1000 + k * 100 + s,
                               day_type=day_type)
            best = min(best, sum_of_squares(model, points))
        out.append((k, best))
    return out


def elbow_knee(scan: list[tuple[int, float]]) -> int:
    """k of maximum discrete curvature (second difference) of the SoS curve.

    Reported only; the cluster count is always an explicit input.
    """
    if len(scan) < 3:
        return scan[0][0]
    ks = [k for k, _ in scan]
    sos = [s for _, s in scan]
    curv = [sos[i - 1] - 2 * sos[i] + sos[i + 1] for i in range(1, len(sos) - 1)]
    return ks[1 + int(np.argmax(curv))]


@dataclass(frozen=True)
class TransitionMatrix:
    states: tuple  # (1, ..., k, "U")
    probs: np.ndarray  # (k+1, k+1), row-stochastic
    uniform_rows: tuple = ()  # states with no outgoing observations

    def row(self, state) -> np.ndarray:
        return self.probs[self.states.index(state)]


def label_days(model: ClusterModel, days: list[VehicleDay]) -> dict[str, list[tuple[int, object]]]:
    """Per-vehicle ordered (day_index, label) sequences; unused days get U."""
    out: dict[str, list[tuple[int, object]]] = {}
    for day in days:
        v = build_feature_vector(day)
        label = UNUSED if v is None else assign(model, v)
        out.setdefault(day.vehicle_id, []).append((day.day_index, label))
    for seq in out.values():
        seq.sort()
    return out


def transition_matrix(labeled_days: dict[str, list[tuple[int, object]]], k: int,
                      weekday_only: bool = False) -> TransitionMatrix:
    """Empirical next-day transition probabilities over states 1..k plus U.

    Counts consecutive-calendar-day pairs; with weekday_only, both days of
    a pair must be weekdays. Rows without observations become uniform and
    are reported in uniform_rows.
    """
    states = tuple(list(range(1, k + 1)) + [UNUSED])
    index = {s: i for i, s in enumerate(states)}
    counts = np.zeros((k + 1, k + 1))
    for seq in labeled_days.values():
        by_day = dict(seq)
        for day, label in seq:
            nxt = by_day.get(day + 1)
            if nxt is None:
                continue
            if weekday_only and (day % 7 >= 5 or (day + 1) % 7 >= 5):
                continue
            counts[index[label], index[nxt]] += 1
    probs = np.empty_like(counts)
    uniform = []
    for i, s in enumerate(states):
        total = counts[i].sum()
        if total == 0:
            probs[i] = 1.0 / (k + 1)
            uniform.append(s)
        else:
            probs[i] = counts[i] / total
    return TransitionMatrix(states, probs, tuple(uniform))


@dataclass(frozen=True)
class CompositionReport:
    """Cluster shares and distance statistics for two datasets under one model."""

    states: tuple
    shares_a: dict
    shares_b: dict
    mean_miles_a: dict
    mean_miles_b: dict
    distance_ratio: float  # mean daily miles of B over A, all days included


def compare_datasets(model: ClusterModel, days_a: list[VehicleDay],
                     days_b: list[VehicleDay]) -> CompositionReport:
    if not days_a or not days_b:
        raise DataError("compare_datasets requires two non-empty datasets")

    def describe(days):
        states = tuple(model.cluster_labels + [UNUSED])
        n = {s: 0 for s in states}
        miles = {s: 0.0 for s in states}
        for day in days:
            v = build_feature_vector(day)
            label = UNUSED if v is None else assign(model, v)
            n[label] += 1
            miles[label] += day.total_distance
        total = len(days)
        shares = {s: n[s] / total for s in states}
        mean_miles = {s: (miles[s] / n[s] if n[s] else 0.0) for s in states}
        overall = sum(d.total_distance for d in days) / total
        return shares, mean_miles, overall

    shares_a, miles_a, mean_a = describe(days_a)
    shares_b, miles_b, mean_b = describe(days_b)
    if mean_a <= 0:
        raise DataError("dataset A has zero total distance; ratio undefined")
    return CompositionReport(tuple(model.cluster_labels + [UNUSED]),
                             shares_a, shares_b, miles_a, miles_b,
                             mean_b / mean_a)


def weekly_composition(model: ClusterModel, days: list[VehicleDay]) -> np.ndarray:
    """Share of each state (1..k, U) per day of week; shape (7, k+1)."""
    k = model.k
    counts = np.zeros((7, k + 1))
    for day in days:
        v = build_feature_vector(day)
        col = k if v is None else assign(model, v) - 1
        counts[day.day_index % 7, col] += 1
    totals = counts.sum(axis=1, keepdims=True)
    totals[totals == 0] = 1.0
    return counts / totals


def cluster_speed_profiles(model: ClusterModel, days: list[VehicleDay]
                           ) -> dict[int, dict[str, np.ndarray]]:
    """Mean and 90% band of raw (unnormalized) speed profiles per cluster.

    These are averages of raw speeds, not the centroids; the centroids live
    on the normalized simplex.
    """
    grouped: dict[int, list[np.ndarray]] = {c: [] for c in model.cluster_labels}
    for day in days:
        v = build_feature_vector(day)
        if v is None:
            continue
        grouped[assign(model, v)].append(raw_speed_profile(day))
    out = {}
    for c, profiles in grouped.items():
        if not profiles:
            arr = np.zeros((1, N_SLOTS))
        else:
            arr = np.array(profiles)
        out[c] = {
            "mean": arr.mean(axis=0),
            "p05": np.percentile(arr, 5, axis=0),
            "p95": np.percentile(arr, 95, axis=0),
        }
    return out
