"""Core domain model: patients, calendar, scenarios, schedules and cost arithmetic.

All day arithmetic uses business-day indices (Monday-Friday).  Civil dates
only appear at the presentation boundary via :class:`Calendar`.
"""

from __future__ import annotations

import datetime as dt
import math
from dataclasses import dataclass, field, replace

import numpy as np

__all__ = [
    "PatientCategory",
    "CATEGORIES",
    "Patient",
    "Calendar",
    "Scenario",
    "Schedule",
    "ObjectiveWeights",
    "InfeasibleAssignmentError",
    "UnassignedPatientsError",
    "waiting_time",
    "overdue_time",
    "patient_cost",
    "schedule_cost",
    "check_schedule",
    "FeasibilityViolation",
]


class InfeasibleAssignmentError(ValueError):
    """Raised when a start day violates a patient's ready date."""


class UnassignedPatientsError(ValueError):
    def __init__(self, missing_ids):
        self.missing_ids = sorted(missing_ids)
        super().__init__(f"schedule is missing assignments for patients: {self.missing_ids}")


@dataclass(frozen=True)
class PatientCategory:
    label: str            # P1..P4
    deadline_days: int    # business days from admission to due date
    is_palliative: bool

    def __post_init__(self):
        if self.deadline_days < 1:
            raise ValueError("deadline_days must be >= 1")


CATEGORIES = {
    "P1": PatientCategory("P1", 1, True),
    "P2": PatientCategory("P2", 3, True),
    "P3": PatientCategory("P3", 14, False),
    "P4": PatientCategory("P4", 28, False),
}


@dataclass(frozen=True)
class Patient:
    """One treatment request.

    ``fraction_blocks`` is the per-fraction duration in 5-minute blocks
    (10-165 minutes, so 2..33 blocks).  ``admission_seq`` orders arrivals
    within a day; the sub-day arrival time is never needed beyond ordering.
    """

    id: str
    category: PatientCategory
    admission_day: int
    admission_seq: int
    ready_day: int
    due_day: int
    fractions: int
    fraction_blocks: int

    def __post_init__(self):
        if self.admission_day < 0 or self.admission_seq < 0:
            raise ValueError(f"{self.id}: admission day/seq must be >= 0")
        if self.ready_day < self.admission_day:
            raise ValueError(f"{self.id}: ready_day {self.ready_day} before admission_day {self.admission_day}")
        if self.due_day != self.admission_day + self.category.deadline_days:
            raise ValueError(f"{self.id}: due_day must equal admission_day + category deadline")
        if not 1 <= self.fractions <= 45:
            raise ValueError(f"{self.id}: fractions must be in 1..45")
        if not 2 <= self.fraction_blocks <= 33:
            raise ValueError(f"{self.id}: fraction_blocks must be in 2..33")

    @property
    def is_palliative(self) -> bool:
        return self.category.is_palliative

    def to_json(self) -> dict:
        return {
            "id": self.id,
            "category": self.category.label,
            "admission_day": self.admission_day,
            "admission_seq": self.admission_seq,
            "ready_day": self.ready_day,
            "due_day": self.due_day,
            "fractions": self.fractions,
            "fraction_blocks": self.fraction_blocks,
        }

    @classmethod
    def from_json(cls, rec: dict) -> "Patient":
        return cls(
            id=rec["id"],
            category=CATEGORIES[rec["category"]],
            admission_day=rec["admission_day"],
            admission_seq=rec["admission_seq"],
            ready_day=rec["ready_day"],
            due_day=rec["due_day"],
            fractions=rec["fractions"],
            fraction_blocks=rec["fraction_blocks"],
        )


@dataclass(frozen=True)
class Calendar:
    """Bijection between business-day indices and civil dates (weekends skipped)."""

    epoch: dt.date = dt.date(2024, 1, 1)  # a Monday

    def __post_init__(self):
        if self.epoch.weekday() >= 5:
            raise ValueError("calendar epoch must be a business day")

    def date(self, index: int) -> dt.date:
        if index < 0:
            raise ValueError("business-day index must be >= 0")
        weeks, rem = divmod(self.epoch.weekday() + index, 5)
        return self.epoch + dt.timedelta(days=7 * weeks + rem - self.epoch.weekday())

    def index(self, date: dt.date) -> int:
        if date.weekday() >= 5:
            raise ValueError(f"{date} is a weekend; weekend dates have no index")
        if date < self.epoch:
            raise ValueError(f"{date} precedes the calendar epoch")
        full_weeks, rem = divmod((date - self.epoch).days, 7)
        # rem civil days from the same weekday as epoch; count business days among them
        idx = 5 * full_weeks
        wd = self.epoch.weekday()
        for _ in range(rem):
            if wd < 5:
                idx += 1
            wd = (wd + 1) % 7
        return idx


DEFAULT_DAY_CAPACITY = 120  # 5-minute blocks per linac per day


@dataclass(frozen=True)
class Scenario:
    """A linac fleet with per-(day, linac) total and pre-committed capacities.

    ``committed`` holds the blocks consumed by fixed patients scheduled in
    earlier decision rounds.  ``reservation`` is the fraction of daily
    capacity withheld from curative bookings.
    """

    num_linacs: int
    horizon_days: int
    total_capacity: np.ndarray    # shape (horizon_days, num_linacs), int
    committed: np.ndarray         # same shape
    reservation: float = 0.0

    def __post_init__(self):
        if self.num_linacs < 1 or self.horizon_days < 1:
            raise ValueError("scenario needs at least one linac and one day")
        if not 0.0 <= self.reservation < 1.0:
            raise ValueError("reservation fraction must be in [0, 1)")
        shape = (self.horizon_days, self.num_linacs)
        if self.total_capacity.shape != shape or self.committed.shape != shape:
            raise ValueError(f"capacity arrays must have shape {shape}")
        if np.any(self.committed > self.total_capacity) or np.any(self.committed < 0):
            raise ValueError("committed blocks must satisfy 0 <= committed <= total capacity")

    @classmethod
    def empty(cls, num_linacs: int, horizon_days: int,
              day_capacity: int = DEFAULT_DAY_CAPACITY, reservation: float = 0.0) -> "Scenario":
        shape = (horizon_days, num_linacs)
        return cls(num_linacs, horizon_days,
                   np.full(shape, day_capacity, dtype=np.int64),
                   np.zeros(shape, dtype=np.int64),
                   reservation)

    @property
    def available(self) -> np.ndarray:
        return self.total_capacity - self.committed

    def with_reservation(self, gamma: float) -> "Scenario":
        return replace(self, reservation=gamma)

    def to_json(self) -> dict:
        return {
            "num_linacs": self.num_linacs,
            "horizon_days": self.horizon_days,
            "total_capacity": self.total_capacity.tolist(),
            "committed": self.committed.tolist(),
            "reservation": self.reservation,
        }

    @classmethod
    def from_json(cls, rec: dict) -> "Scenario":
        return cls(
            num_linacs=rec["num_linacs"],
            horizon_days=rec["horizon_days"],
            total_capacity=np.asarray(rec["total_capacity"], dtype=np.int64),
            committed=np.asarray(rec["committed"], dtype=np.int64),
            reservation=rec.get("reservation", 0.0),
        )


@dataclass
class Schedule:
    """Assignment of each patient's first fraction to a (day, linac) slot."""

    assignments: dict = field(default_factory=dict)  # patient id -> (start_day, linac)

    def assign(self, patient_id: str, start_day: int, linac: int) -> None:
        if patient_id in self.assignments:
            raise ValueError(f"patient {patient_id} already assigned")
        self.assignments[patient_id] = (int(start_day), int(linac))

    def __contains__(self, patient_id: str) -> bool:
        return patient_id in self.assignments

    def occupancy(self, patients, horizon_days: int, num_linacs: int):
        """Per-(day, linac) booked blocks, split into palliative and curative."""
        pall = np.zeros((horizon_days, num_linacs), dtype=np.int64)
        cur = np.zeros((horizon_days, num_linacs), dtype=np.int64)
        by_id = {p.id: p for p in patients}
        for pid, (start, linac) in self.assignments.items():
            p = by_id[pid]
            target = pall if p.is_palliative else cur
            end = min(start + p.fractions, horizon_days)
            target[start:end, linac] += p.fraction_blocks
        return pall, cur

    def to_json(self) -> dict:
        return {
            "assignments": {
                pid: {"start_day": s, "linac": l}
                for pid, (s, l) in sorted(self.assignments.items())
            }
        }

    @classmethod
    def from_json(cls, rec: dict) -> "Schedule":
        sched = cls()
        for pid, a in rec["assignments"].items():
            sched.assign(pid, a["start_day"], a["linac"])
        return sched


@dataclass(frozen=True)
class ObjectiveWeights:
    """Waiting vs. overdue weights; overdue is penalized much more heavily."""

    waiting: float = 1.0
    overdue: float = 100.0

    def __post_init__(self):
        if self.waiting < 0 or self.overdue < self.waiting:
            raise ValueError("weights must satisfy 0 <= waiting <= overdue")


def waiting_time(patient: Patient, start_day: int) -> int:
    """Business days from admission to the first fraction."""
    if start_day < patient.ready_day:
        raise InfeasibleAssignmentError(
            f"{patient.id}: start day {start_day} before ready day {patient.ready_day}")
    return start_day - patient.admission_day


def overdue_time(patient: Patient, start_day: int) -> int:
    if start_day < patient.ready_day:
        raise InfeasibleAssignmentError(
            f"{patient.id}: start day {start_day} before ready day {patient.ready_day}")
    return max(0, start_day - patient.due_day)


def patient_cost(patient: Patient, start_day: int, weights: ObjectiveWeights) -> float:
    """Objective contribution of one patient starting on ``start_day``.

    waiting term w1*(t-a)*ln(t-a+1) applies only when t is strictly past the
    ready day; overdue term w2*(t-d)*ln(t-d+1) only when t is strictly past
    the due day.
    """
    t = start_day
    if t < patient.ready_day:
        raise InfeasibleAssignmentError(
            f"{patient.id}: start day {t} before ready day {patient.ready_day}")
    cost = 0.0
    if t > patient.ready_day:
        wait = t - patient.admission_day
        cost += weights.waiting * wait * math.log(wait + 1)
    if t > patient.due_day:
        over = t - patient.due_day
        cost += weights.overdue * over * math.log(over + 1)
    return cost


def schedule_cost(schedule: Schedule, patients, weights: ObjectiveWeights) -> float:
    """Sum of patient costs, accumulated in the patients' given order."""
    missing = [p.id for p in patients if p.id not in schedule.assignments]
    if missing:
        raise UnassignedPatientsError(missing)
    total = 0.0
    for p in patients:
        start, _ = schedule.assignments[p.id]
        total += patient_cost(p, start, weights)
    return total


@dataclass(frozen=True)
class FeasibilityViolation:
    kind: str        # ready_date | capacity | reservation | horizon
    detail: str


def check_schedule(schedule: Schedule, patients, scenario: Scenario,
                   gamma: float | None = None) -> list[FeasibilityViolation]:
    """Independent feasibility audit of a schedule against a scenario.

    Checks ready dates, horizon fit, per-(day, linac) total capacity and the
    curative reservation cap.  Same-linac continuity is structural here: a
    patient's whole course books one linac by construction, so the capacity
    sweep audits all fractions on that linac.  Returns an empty list when
    feasible.
    """
    if gamma is None:
        gamma = scenario.reservation
    violations = []
    by_id = {p.id: p for p in patients}
    for pid, (start, linac) in schedule.assignments.items():
        p = by_id[pid]
        if start < p.ready_day:
            violations.append(FeasibilityViolation(
                "ready_date", f"{pid} starts day {start} before ready day {p.ready_day}"))
        if start + p.fractions > scenario.horizon_days:
            violations.append(FeasibilityViolation(
                "horizon", f"{pid} course ends day {start + p.fractions - 1}, "
                           f"horizon is {scenario.horizon_days}"))
        if not 0 <= linac < scenario.num_linacs:
            violations.append(FeasibilityViolation("capacity", f"{pid} booked on unknown linac {linac}"))

    pall, cur = schedule.occupancy(patients, scenario.horizon_days, scenario.num_linacs)
    load = scenario.committed + pall + cur
    over = np.argwhere(load > scenario.total_capacity)
    for t, l in over:
        violations.append(FeasibilityViolation(
            "capacity", f"day {t} linac {l}: load {load[t, l]} exceeds capacity "
                        f"{scenario.total_capacity[t, l]}"))
    cur_cap = np.maximum(
        0.0, scenario.total_capacity - scenario.committed
        - gamma * scenario.total_capacity)
    over = np.argwhere(cur > cur_cap + 1e-9)
    for t, l in over:
        violations.append(FeasibilityViolation(
            "reservation", f"day {t} linac {l}: curative load {cur[t, l]} exceeds "
                           f"reserved-adjusted cap {cur_cap[t, l]}"))
    return violations
