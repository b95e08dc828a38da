"""Synthetic fleet generation with a known ground-truth charging policy.

Vehicle-days are drawn from a mixture of usage archetypes (commuter,
morning-dominated, evening-dominated by default). Charging follows a
parametric policy so that fitted probability tables can be checked against
the generating probabilities:

* after each journey end, a charge begins with probability
  ``policy.p_after_journey`` (started at the journey end minute);
* at the start of each half-hour slot in which the vehicle is idle at home
  (no journey overlapping the slot, no journey ending in the slot, not
  already charging), an independent charge begins with the per-slot
  probability ``policy.independent_slot_probs[t]``.

Ground-truth archetype labels are returned out-of-band so the main
pipeline never sees them.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError
from .ingest import (MINUTES_PER_DAY, N_SLOTS, SLOT_MINUTES, ChargeEvent,
                     Journey, VehicleDay)


@dataclass(frozen=True)
class JourneyTemplate:
    start_mean_minute: float
    start_sd_minute: float
    distance_mean: float
    distance_sd: float
    speed_mph: float = 30.0


@dataclass(frozen=True)
class Archetype:
    name: str
    weight: float
    journeys: tuple[JourneyTemplate, ...]
    unuse_prob: float = 0.1


@dataclass(frozen=True)
class ChargingPolicy:
    p_after_journey: float = 0.4
    independent_slot_probs: tuple[float, ...] = tuple([0.25] + [0.01] * (N_SLOTS - 1))

    def __post_init__(self):
        if len(self.independent_slot_probs) != N_SLOTS:
            raise ConfigError("independent_slot_probs must have 48 entries")


@dataclass(frozen=True)
class SynthesisSpec:
    n_vehicles: int = 50
    n_days: int = 7
    archetypes: tuple[Archetype, ...] = ()
    policy: ChargingPolicy = field(default_factory=ChargingPolicy)
    battery_kwh: float = 24.0
    kwh_per_mile: float = 0.3
    charger_kw: float = 3.5
    efficiency: float = 0.9
    initial_soc: float = 1.0

    def __post_init__(self):
        if not self.archetypes:
            object.__setattr__(self, "archetypes", default_archetypes())
        total = sum(a.weight for a in self.archetypes)
        if abs(total - 1.0) > 1e-9:
            raise ConfigError(f"archetype weights sum to {total}, expected 1 within 1e-9")
        if not 0 < self.efficiency <= 1:
            raise ConfigError(f"efficiency must be in (0,1], got {self.efficiency}")


def default_archetypes() -> tuple[Archetype, ...]:
    """Commuting, evening-dominated and morning-dominated usage modes."""
    return (
        Archetype("commuter", 0.4, (
            JourneyTemplate(7 * 60 + 30, 15, 15.0, 2.0, 30.0),
            JourneyTemplate(17 * 60, 15, 15.0, 2.0, 30.0),
        ), unuse_prob=0.08),
        Archetype("evening", 0.3, (
            JourneyTemplate(19 * 60 + 30, 20, 9.0, 1.5, 27.0),
            JourneyTemplate(21 * 60 + 30, 20, 9.0, 1.5, 27.0),
        ), unuse_prob=0.15),
        Archetype("morning", 0.3, (
            JourneyTemplate(10 * 60, 20, 9.0, 1.5, 27.0),
            JourneyTemplate(12 * 60, 20, 9.0, 1.5, 27.0),
        ), unuse_prob=0.15),
    )


def spec_from_dict(d: dict) -> SynthesisSpec:
    """Build a SynthesisSpec from parsed JSON (the CLI config format)."""
    kwargs = {k: d[k] for k in ("n_vehicles", "n_days", "battery_kwh", "kwh_per_mile",
                                "charger_kw", "efficiency", "initial_soc") if k in d}
    if "archetypes" in d:
        archs = []
        for a in d["archetypes"]:
            templates = tuple(JourneyTemplate(**jt) for jt in a["journeys"])
            archs.append(Archetype(a["name"], a["weight"], templates,
                                   a.get("unuse_prob", 0.1)))
        kwargs["archetypes"] = tuple(archs)
    if "policy" in d:
        p = d["policy"]
        pkw = {}
        if "p_after_journey" in p:
            pkw["p_after_journey"] = p["p_after_journey"]
        if "independent_slot_probs" in p:
            pkw["independent_slot_probs"] = tuple(p["independent_slot_probs"])
        kwargs["policy"] = ChargingPolicy(**pkw)
    return SynthesisSpec(**kwargs)


def spec_from_json(path) -> SynthesisSpec:
    try:
        with open(path, encoding="utf-8") as fh:
            return spec_from_dict(json.load(fh))
    except (OSError, json.JSONDecodeError, KeyError, TypeError) as exc:
        raise ConfigError(f"invalid synthesis spec {path}: {exc}") from exc


def _sample_day_journeys(rng: np.random.Generator, arch: Archetype,
                         vid: str, day: int) -> list[Journey]:
    """Draw one day's journeys; overlapping draws are dropped, keeping earlier ones."""
    drawn = []
    for tpl in arch.journeys:
        start = rng.normal(tpl.start_mean_minute, tpl.start_sd_minute)
        dist = max(1.0, rng.normal(tpl.distance_mean, tpl.distance_sd))
        duration = dist / tpl.speed_mph * 60.0
        start = float(np.clip(round(start), 0, MINUTES_PER_DAY - 1))
        end = start + max(10.0, round(duration))
        drawn.append((start, end, dist))
    drawn.sort()
    out: list[Journey] = []
    last_end = -1.0
    for start, end, dist in drawn:
        if start <= last_end:
            continue
        # keep days self-contained: truncate at midnight, pro rata distance
        if end > MINUTES_PER_DAY:
            dist *= (MINUTES_PER_DAY - start) / (end - start)
            end = MINUTES_PER_DAY
        out.append(Journey(vid, day, start, end, round(dist, 4), None))
        last_end = end
    return out


def synthesize_fleet(spec: SynthesisSpec, seed: int
                     ) -> tuple[list[VehicleDay], list[ChargeEvent], dict]:
    """Generate a fleet, its charge events, and a ground-truth sidecar.

    Deterministic given (spec, seed). The sidecar maps "vehicle_id:day_index"
    to the archetype name ("unused" for days without journeys) and records
    the policy parameters.
    """
    rng = np.random.default_rng(seed)
    weights = np.array([a.weight for a in spec.archetypes])
    policy = spec.policy
    e_per_mile = spec.kwh_per_mile
    batt = spec.battery_kwh
    rate = spec.charger_kw * spec.efficiency / 60.0  # kWh gained per minute

    days: list[VehicleDay] = []
    charges: list[ChargeEvent] = []
    labels: dict[str, str] = {}
    draws: dict[str, str] = {}

    for vi in range(spec.n_vehicles):
        vid = f"v{vi:05d}"
        # journey schedule first, then charging simulated over the whole horizon
        vehicle_days: list[VehicleDay] = []
        for day in range(spec.n_days):
            arch_idx = rng.choice(len(weights), p=weights)
            arch = spec.archetypes[arch_idx]
            draws[f"{vid}:{day}"] = arch.name
            if rng.random() < arch.unuse_prob:
                journeys: list[Journey] = []
                labels[f"{vid}:{day}"] = "unused"
            else:
                journeys = _sample_day_journeys(rng, arch, vid, day)
                labels[f"{vid}:{day}"] = arch.name if journeys else "unused"
            vehicle_days.append(VehicleDay(vid, day, tuple(journeys)))

        all_journeys = [j for d in vehicle_days for j in d.journeys]
        soc = spec.initial_soc
        charging_until = -1.0  # absolute minute when the current charge ends
        j_cursor = 0
        energies: dict[tuple, float] = {}
        for d in vehicle_days:
            day = d.day_index
            day_journeys = list(d.journeys)
            end_slots = {int(min(j.end_minute // SLOT_MINUTES, N_SLOTS - 1))
                         for j in day_journeys}
            overlap = [False] * N_SLOTS
            for j in day_journeys:
                for t in range(int(j.start_minute // SLOT_MINUTES),
                               min(int((j.end_minute - 1e-9) // SLOT_MINUTES), N_SLOTS - 1) + 1):
                    overlap[t] = True

            def start_charge(abs_minute: float):
                nonlocal soc, charging_until
                deficit = (1.0 - soc) * batt
                dur = deficit / (spec.charger_kw * spec.efficiency) * 60.0
                # interrupted by the vehicle's next use, if any
                nxt = None
                for jj in all_journeys[j_cursor:]:
                    t0 = jj.day_index * MINUTES_PER_DAY + jj.start_minute
                    if t0 > abs_minute:
                        nxt = t0
                        break
                end_abs = abs_minute + dur
                if nxt is not None:
                    end_abs = min(end_abs, nxt)
                end_abs = max(end_abs, abs_minute + 1.0)  # log at least a minute
                soc_start = soc
                soc = min(1.0, soc + (end_abs - abs_minute) * rate / batt)
                charging_until = end_abs
                start_day = int(abs_minute // MINUTES_PER_DAY)
                charges.append(ChargeEvent(
                    vid, start_day,
                    round(abs_minute - start_day * MINUTES_PER_DAY, 4),
                    round(end_abs - start_day * MINUTES_PER_DAY, 4),
                    round(soc_start, 6), round(soc, 6)))

            for t in range(N_SLOTS):
                slot_abs = day * MINUTES_PER_DAY + t * SLOT_MINUTES
                # independent decision at slot start
                if (slot_abs >= charging_until and not overlap[t]
                        and t not in end_slots):
                    if rng.random() < policy.independent_slot_probs[t]:
                        start_charge(float(slot_abs))
                # journey ends within this slot
                for j in day_journeys:
                    if int(min(j.end_minute // SLOT_MINUTES, N_SLOTS - 1)) != t:
                        continue
                    j_cursor = all_journeys.index(j) + 1
                    energy = round(j.distance * e_per_mile, 6)
                    energies[j.key] = energy
                    soc = max(0.0, soc - energy / batt)
                    end_abs = day * MINUTES_PER_DAY + j.end_minute
                    charging_until = min(charging_until, end_abs)
                    if rng.random() < policy.p_after_journey:
                        start_charge(end_abs)

        # attach journey energies now that consumption is known
        for d in vehicle_days:
            with_energy = tuple(
                Journey(j.vehicle_id, j.day_index, j.start_minute, j.end_minute,
                        j.distance, energies[j.key])
                for j in d.journeys)
            days.append(VehicleDay(vid, d.day_index, with_energy))

    sidecar = {
        "labels": labels,
        "draws": draws,
        "policy": {
            "p_after_journey": policy.p_after_journey,
            "independent_slot_probs": list(policy.independent_slot_probs),
        },
    }
    return days, charges, sidecar
