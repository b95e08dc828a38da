"""Parsing of survey- and trial-format vehicle data into canonical records.

Two CSV layouts are supported:

* survey journeys: ``vehicle_id,day_index,start_minute,end_minute,distance_miles``
* trial journeys:  survey columns plus ``energy_kwh``
* trial charges:   ``vehicle_id,day_index,start_minute,end_minute,soc_start,soc_end``

Minutes are minutes-from-midnight. A journey or charge whose ``end_minute``
is less than or equal to its ``start_minute`` is taken to roll over
midnight (equivalently ``end_minute`` may be written already offset by
1440). Journeys crossing midnight are split into two per-day journeys with
distance and energy apportioned by duration; charges keep a single record
with ``end_minute > 1440``.

Day indexing follows a Monday week start: ``day_index % 7`` in {5, 6} is a
weekend day.
"""

from __future__ import annotations

import csv
import json
from bisect import bisect_right
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Optional

from .errors import DataError

MINUTES_PER_DAY = 1440
SLOT_MINUTES = 30
N_SLOTS = 48

SURVEY_HEADER = ["vehicle_id", "day_index", "start_minute", "end_minute", "distance_miles"]
TRIAL_JOURNEY_HEADER = SURVEY_HEADER + ["energy_kwh"]
TRIAL_CHARGE_HEADER = ["vehicle_id", "day_index", "start_minute", "end_minute", "soc_start", "soc_end"]


class DayType(Enum):
    WEEKDAY = 0
    WEEKEND = 1


def day_type_of(day_index: int) -> DayType:
    """Day 0 is a Monday; days 5 and 6 of each week are the weekend."""
    return DayType.WEEKEND if day_index % 7 >= 5 else DayType.WEEKDAY


def slot_of_minute(minute: float) -> int:
    """Half-hour slot containing `minute`; minute 1440 maps onto slot 47."""
    return min(int(minute // SLOT_MINUTES), N_SLOTS - 1)


@dataclass(frozen=True)
class Journey:
    vehicle_id: str
    day_index: int
    start_minute: float
    end_minute: float
    distance: float
    energy_used: Optional[float] = None

    def __post_init__(self):
        if not self.end_minute > self.start_minute:
            raise DataError(
                f"journey for {self.vehicle_id} day {self.day_index}: "
                f"end_minute {self.end_minute} not after start_minute {self.start_minute}"
            )

    @property
    def duration(self) -> float:
        return self.end_minute - self.start_minute

    @property
    def key(self):
        return (self.vehicle_id, self.day_index, self.start_minute, self.end_minute)


@dataclass(frozen=True)
class VehicleDay:
    vehicle_id: str
    day_index: int
    journeys: tuple[Journey, ...] = ()

    @property
    def day_type(self) -> DayType:
        return day_type_of(self.day_index)

    @property
    def is_unused(self) -> bool:
        return len(self.journeys) == 0

    @property
    def total_distance(self) -> float:
        return sum(j.distance for j in self.journeys)


@dataclass(frozen=True)
class ChargeEvent:
    vehicle_id: str
    day_index: int
    start_minute: float
    end_minute: float  # may exceed 1440 when the charge rolls past midnight
    soc_start: float
    soc_end: float

    def __post_init__(self):
        if self.soc_end < self.soc_start:
            raise DataError(
                f"charge for {self.vehicle_id} day {self.day_index}: "
                f"soc_end {self.soc_end} below soc_start {self.soc_start}"
            )
        if not self.end_minute > self.start_minute:
            raise DataError(
                f"charge for {self.vehicle_id} day {self.day_index}: non-positive duration"
            )

    @property
    def abs_start(self) -> float:
        return self.day_index * MINUTES_PER_DAY + self.start_minute

    @property
    def abs_end(self) -> float:
        return self.day_index * MINUTES_PER_DAY + self.end_minute


@dataclass
class ParseReport:
    """Per-row recoverable errors and warnings collected during parsing."""

    errors: list[dict] = field(default_factory=list)
    warnings: list[dict] = field(default_factory=list)

    def add_error(self, line: int, fieldname: str, message: str):
        self.errors.append({"line": line, "field": fieldname, "message": message})

    def add_warning(self, line: int, fieldname: str, message: str):
        self.warnings.append({"line": line, "field": fieldname, "message": message})

    def to_json(self) -> str:
        return json.dumps(
            {"errors": self.errors, "warnings": self.warnings},
            indent=2, sort_keys=True,
        )


@dataclass(frozen=True)
class ParseConfig:
    """Knobs for CSV parsing.

    n_days: if given, every vehicle is padded with empty VehicleDays over
    day indices [0, n_days); otherwise the observed range of the file is
    used.
    """

    n_days: Optional[int] = None


# Event-kind ordering for same-minute SOC samples: a journey end is applied
# before a charge start, which is applied before a charge end.
_JOURNEY_END, _CHARGE_START, _CHARGE_END = 0, 1, 2


@dataclass
class SocTrace:
    """Piecewise-constant SOC reconstruction for one vehicle.

    `samples` holds (day_index, minute, soc, kind) at every journey and
    charge boundary, in chronological order. Between samples the SOC is
    constant. `clamped` flags days where inference went below zero and was
    clamped.
    """

    vehicle_id: str
    initial_soc: float
    samples: list[tuple[int, float, float, int]] = field(default_factory=list)
    clamped: list[tuple[int, float]] = field(default_factory=list)

    def __post_init__(self):
        self._times = [d * MINUTES_PER_DAY + m for d, m, _, _ in self.samples]

    @property
    def inconsistent(self) -> bool:
        return len(self.clamped) > 0

    def soc_at(self, day_index: int, minute: float) -> float:
        """SOC after all samples up to and including (day_index, minute)."""
        t = day_index * MINUTES_PER_DAY + minute
        i = bisect_right(self._times, t)
        if i == 0:
            return self.initial_soc
        return self.samples[i - 1][2]


def _split_midnight(vehicle_id: str, day_index: int, start: float, end: float,
                    distance: float, energy: Optional[float]) -> list[Journey]:
    """Split a journey running past 1440 into per-day parts, pro rata by duration."""
    if end <= MINUTES_PER_DAY:
        return [Journey(vehicle_id, day_index, start, end, distance, energy)]
    total = end - start
    frac1 = (MINUTES_PER_DAY - start) / total
    parts = []
    e1 = energy * frac1 if energy is not None else None
    e2 = energy * (1 - frac1) if energy is not None else None
    parts.append(Journey(vehicle_id, day_index, start, MINUTES_PER_DAY,
                         distance * frac1, e1))
    parts.append(Journey(vehicle_id, day_index + 1, 0.0, end - MINUTES_PER_DAY,
                         distance * (1 - frac1), e2))
    return parts


def _read_rows(path, expected_header):
    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    with fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            return []
        if header != expected_header:
            raise DataError(
                f"{path}: unexpected header {header!r}, expected {expected_header!r}"
            )
        return [(lineno, row) for lineno, row in enumerate(reader, start=2)]


def _parse_journey_row(lineno, row, with_energy, report) -> list[Journey]:
    ncols = 6 if with_energy else 5
    if len(row) != ncols:
        report.add_error(lineno, "", f"expected {ncols} columns, got {len(row)}")
        return []
    try:
        vid = row[0]
        day = int(row[1])
        start = float(row[2])
        end = float(row[3])
        dist = float(row[4])
        energy = float(row[5]) if with_energy else None
    except ValueError as exc:
        report.add_error(lineno, "", f"unparseable value: {exc}")
        return []
    if not 0 <= start < MINUTES_PER_DAY:
        report.add_error(lineno, "start_minute", f"out of range: {start}")
        return []
    if end <= start:
        end += MINUTES_PER_DAY  # rollover shorthand
    if dist <= 0:
        report.add_error(lineno, "distance_miles", f"must be > 0, got {dist}")
        return []
    if energy is not None and energy < 0:
        report.add_error(lineno, "energy_kwh", f"must be >= 0, got {energy}")
        return []
    if day < 0:
        report.add_error(lineno, "day_index", f"must be >= 0, got {day}")
        return []
    return _split_midnight(vid, day, start, end, dist, energy)


def _group_days(journeys: Iterable[Journey], report: ParseReport,
                config: ParseConfig) -> list[VehicleDay]:
    by_vd: dict[tuple[str, int], list[Journey]] = {}
    vehicles: set[str] = set()
    max_day = -1
    for j in journeys:
        by_vd.setdefault((j.vehicle_id, j.day_index), []).append(j)
        vehicles.add(j.vehicle_id)
        max_day = max(max_day, j.day_index)
    if config.n_days is not None:
        day_range = range(config.n_days)
        max_day = max(max_day, config.n_days - 1)
    else:
        day_range = range(max_day + 1)

    days = []
    for vid in sorted(vehicles):
        for day in day_range:
            js = sorted(by_vd.get((vid, day), []), key=lambda j: j.start_minute)
            kept: list[Journey] = []
            for j in js:
                if kept and j.start_minute < kept[-1].end_minute:
                    report.add_error(
                        0, "start_minute",
                        f"{vid} day {day}: journey at {j.start_minute} overlaps "
                        f"previous journey ending {kept[-1].end_minute}; dropped",
                    )
                    continue
                kept.append(j)
            days.append(VehicleDay(vid, day, tuple(kept)))
    return days


def parse_survey(path, config: ParseConfig = ParseConfig()) -> tuple[list[VehicleDay], ParseReport]:
    """Parse a survey-format journeys CSV.

    Malformed rows are collected into the returned report; every vehicle
    yields one VehicleDay (possibly empty) per day of the observed period.
    """
    report = ParseReport()
    journeys: list[Journey] = []
    for lineno, row in _read_rows(path, SURVEY_HEADER):
        journeys.extend(_parse_journey_row(lineno, row, False, report))
    return _group_days(journeys, report, config), report


def parse_trial(journeys_path, charges_path,
                config: ParseConfig = ParseConfig()) -> tuple[list[VehicleDay], list[ChargeEvent], ParseReport]:
    """Parse trial-format journeys and charges CSVs.

    Charges with soc_end < soc_start are rejected per-row; charges for a
    vehicle absent from the journey file are retained with a warning.
    """
    report = ParseReport()
    journeys: list[Journey] = []
    for lineno, row in _read_rows(journeys_path, TRIAL_JOURNEY_HEADER):
        journeys.extend(_parse_journey_row(lineno, row, True, report))
    days = _group_days(journeys, report, config)
    known = {d.vehicle_id for d in days}

    charges: list[ChargeEvent] = []
    for lineno, row in _read_rows(charges_path, TRIAL_CHARGE_HEADER):
        if len(row) != 6:
            report.add_error(lineno, "", f"expected 6 columns, got {len(row)}")
            continue
        try:
            vid = row[0]
            day = int(row[1])
            start = float(row[2])
            end = float(row[3])
            s0 = float(row[4])
            s1 = float(row[5])
        except ValueError as exc:
            report.add_error(lineno, "", f"unparseable value: {exc}")
            continue
        if end <= start:
            end += MINUTES_PER_DAY
        if s1 < s0:
            report.add_error(lineno, "soc_end", f"soc_end {s1} below soc_start {s0}")
            continue
        if not (0 <= s0 <= 1 and 0 <= s1 <= 1):
            report.add_error(lineno, "soc_start", f"soc out of [0,1]: {s0}, {s1}")
            continue
        if vid not in known:
            report.add_warning(lineno, "vehicle_id", f"charge for unknown vehicle {vid}")
        charges.append(ChargeEvent(vid, day, start, end, s0, s1))
    charges.sort(key=lambda c: (c.vehicle_id, c.day_index, c.start_minute))
    return days, charges, report


def write_survey_csv(days: Iterable[VehicleDay], path, with_energy: bool = False):
    header = TRIAL_JOURNEY_HEADER if with_energy else SURVEY_HEADER
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for day in sorted(days, key=lambda d: (d.vehicle_id, d.day_index)):
            for j in day.journeys:
                row = [j.vehicle_id, j.day_index, repr(float(j.start_minute)),
                       repr(float(j.end_minute)), repr(float(j.distance))]
                if with_energy:
                    row.append(repr(float(j.energy_used if j.energy_used is not None else 0.0)))
                w.writerow(row)


def write_charges_csv(charges: Iterable[ChargeEvent], path):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(TRIAL_CHARGE_HEADER)
        for c in sorted(charges, key=lambda c: (c.vehicle_id, c.day_index, c.start_minute)):
            w.writerow([c.vehicle_id, c.day_index, repr(float(c.start_minute)),
                        repr(float(c.end_minute)), repr(float(c.soc_start)),
                        repr(float(c.soc_end))])


def infer_soc_trace(days: list[VehicleDay], charges: list[ChargeEvent],
                    battery_kwh: float, initial_soc: float = 1.0) -> SocTrace:
    """Reconstruct a single vehicle's SOC over the observation period.

    SOC drops by energy_used / battery_kwh at each journey end and is
    snapped to the logged values at charge boundaries; between events it is
    constant. Negative inferred SOC is clamped to 0 and flagged.
    """
    if battery_kwh <= 0:
        raise DataError(f"battery_kwh must be > 0, got {battery_kwh}")
    vids = {d.vehicle_id for d in days} | {c.vehicle_id for c in charges}
    if len(vids) > 1:
        raise DataError(f"infer_soc_trace expects one vehicle, got {sorted(vids)}")
    vid = vids.pop() if vids else ""

    events: list[tuple[float, int, float, Optional[float]]] = []
    for day in days:
        for j in day.journeys:
            if j.energy_used is None:
                raise DataError(f"journey {j.key} lacks energy_used; trial data required")
            t = day.day_index * MINUTES_PER_DAY + j.end_minute
            events.append((t, _JOURNEY_END, -j.energy_used / battery_kwh, None))
    for c in charges:
        events.append((c.abs_start, _CHARGE_START, 0.0, c.soc_start))
        events.append((c.abs_end, _CHARGE_END, 0.0, c.soc_end))
    events.sort(key=lambda e: (e[0], e[1]))

    trace = SocTrace(vid, initial_soc)
    soc = initial_soc
    for t, kind, delta, snap in events:
        day, minute = int(t // MINUTES_PER_DAY), t % MINUTES_PER_DAY
        if snap is not None:
            soc = snap
        else:
            soc += delta
            if soc < 0:
                trace.clamped.append((day, minute))
                soc = 0.0
        trace.samples.append((day, minute, soc, kind))
        trace._times.append(t)
    return trace


def infer_soc_traces(days: list[VehicleDay], charges: list[ChargeEvent],
                     battery_kwh: float, initial_soc: float = 1.0) -> dict[str, SocTrace]:
    """Per-vehicle SOC traces for a multi-vehicle dataset."""
    days_by: dict[str, list[VehicleDay]] = {}
    for d in days:
        days_by.setdefault(d.vehicle_id, []).append(d)
    charges_by: dict[str, list[ChargeEvent]] = {}
    for c in charges:
        charges_by.setdefault(c.vehicle_id, []).append(c)
    out = {}
    for vid in sorted(set(days_by) | set(charges_by)):
        out[vid] = infer_soc_trace(days_by.get(vid, []), charges_by.get(vid, []),
                                   battery_kwh, initial_soc)
    return out
