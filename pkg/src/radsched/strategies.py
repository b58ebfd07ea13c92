"""The six scheduling strategies: offline, online-greedy, daily-greedy,
daily-IP, weekly-IP and prediction-based.

All online strategies mutate a :class:`ScheduleState`; the rolling-horizon
driver in :mod:`radsched.harness` invokes them at the right cadence.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .domain import ObjectiveWeights, Patient, Scenario, Schedule
from . import ipcore

__all__ = [
    "STRATEGY_KINDS", "ScheduleState", "Booking", "WindowExhaustedError",
    "first_eligible_day", "schedule_palliative_online", "schedule_online_greedy",
    "schedule_daily_greedy_batch", "schedule_batch_ip", "schedule_offline",
    "schedule_prediction_based", "GREEDY_SCAN_OFFSET",
]

STRATEGY_KINDS = (
    "offline", "online-greedy", "daily-greedy", "daily-IP", "weekly-IP",
    "prediction-based",
)

# Greedy look-ahead before scanning: one business week for P3, two for P4.
GREEDY_SCAN_OFFSET = {"P1": 0, "P2": 0, "P3": 5, "P4": 10}

SEARCH_WINDOW = 50  # business days scanned past the first candidate day
EPS = 1e-9


class WindowExhaustedError(RuntimeError):
    def __init__(self, patient: Patient, from_day: int):
        self.patient = patient
        self.from_day = from_day
        super().__init__(
            f"no eligible day for {patient.id} within {SEARCH_WINDOW} business days "
            f"of day {from_day}")


@dataclass(frozen=True)
class Booking:
    patient: Patient
    start_day: int
    linac: int


@dataclass
class ScheduleState:
    """Mutable remaining-capacity state owned by a single simulation run."""

    scenario: Scenario
    gamma: float
    current_day: int = 0
    schedule: Schedule = field(default_factory=Schedule)
    bookings: list = field(default_factory=list)
    avail: np.ndarray = None          # remaining blocks per (day, linac)
    cur_room: np.ndarray = None       # remaining curative blocks after reservation
    version: int = 0                  # bumped on every booking (optimistic checks)

    def __post_init__(self):
        if self.avail is None:
            self.avail = self.scenario.available.astype(np.float64).copy()
        if self.cur_room is None:
            self.cur_room = np.maximum(
                0.0, self.avail - self.gamma * self.scenario.total_capacity)

    def book(self, patient: Patient, start_day: int, linac: int) -> Booking:
        end = start_day + patient.fractions
        if end > self.scenario.horizon_days:
            raise WindowExhaustedError(patient, start_day)
        self.avail[start_day:end, linac] -= patient.fraction_blocks
        # curative room is recomputed from remaining capacity after every booking
        self.cur_room[start_day:end, linac] = np.maximum(
            0.0, self.avail[start_day:end, linac]
            - self.gamma * self.scenario.total_capacity[start_day:end, linac])
        self.schedule.assign(patient.id, start_day, linac)
        booking = Booking(patient, start_day, linac)
        self.bookings.append(booking)
        self.version += 1
        return booking

    def fleet_remaining(self, day_from: int, num_days: int) -> np.ndarray:
        """Fleet-summed remaining blocks for ``num_days`` days from ``day_from``."""
        if day_from + num_days > self.scenario.horizon_days:
            raise ValueError(
                f"window [{day_from}, {day_from + num_days}) exceeds horizon "
                f"{self.scenario.horizon_days}")
        return self.avail[day_from:day_from + num_days].sum(axis=1)

    def as_scenario(self) -> Scenario:
        """Freeze the current remaining capacity into a committed scenario."""
        committed = (self.scenario.total_capacity
                     - np.round(self.avail).astype(np.int64))
        return replace(self.scenario, committed=committed)


def first_eligible_day(state: ScheduleState, patient: Patient, from_day: int,
                       respect_reservation: bool,
                       window: int = SEARCH_WINDOW) -> tuple[int, int]:
    """Smallest day >= from_day where some linac fits the whole course.

    A day is eligible if one linac has at least ``fraction_blocks`` remaining
    on it and the following fractions-1 business days; ties among linacs go
    to the lowest index.
    """
    blocks = patient.fraction_blocks
    room = state.cur_room if respect_reservation else state.avail
    horizon = state.scenario.horizon_days
    for day in range(from_day, from_day + window + 1):
        end = day + patient.fractions
        if end > horizon:
            break
        for linac in range(state.scenario.num_linacs):
            if np.all(room[day:end, linac] >= blocks - EPS):
                return day, linac
    raise WindowExhaustedError(patient, from_day)


def schedule_palliative_online(state: ScheduleState, patient: Patient) -> Booking:
    """Earliest possible start for a palliative; reservation does not apply."""
    from_day = max(state.current_day, patient.ready_day)
    day, linac = first_eligible_day(state, patient, from_day, respect_reservation=False)
    return state.book(patient, day, linac)


def schedule_online_greedy(state: ScheduleState, patient: Patient) -> Booking:
    """Greedy curative booking: look ahead one/two weeks, then take the first fit."""
    offset = GREEDY_SCAN_OFFSET[patient.category.label]
    from_day = max(patient.ready_day, patient.admission_day + offset, state.current_day)
    day, linac = first_eligible_day(state, patient, from_day, respect_reservation=True)
    return state.book(patient, day, linac)


def schedule_daily_greedy_batch(state: ScheduleState, todays_patients) -> list[Booking]:
    """End-of-day greedy batch over the day's curative arrivals.

    Most urgent first (ascending due day), then harder-to-place first
    (descending fractions, then descending fraction length).
    """
    ordered = sorted(
        todays_patients,
        key=lambda p: (p.due_day, -p.fractions, -p.fraction_blocks, p.admission_seq))
    return [schedule_online_greedy(state, p) for p in ordered]


def schedule_batch_ip(state: ScheduleState, batch_patients,
                      budget: ipcore.SolverBudget | None = None,
                      weights: ObjectiveWeights = ObjectiveWeights()) -> list[Booking]:
    """Schedule a batch of curatives with the IP on current remaining capacity."""
    batch = list(batch_patients)
    if not batch:
        return []
    if budget is None:
        budget = ipcore.SolverBudget(time_limit=10.0)
    scenario = state.as_scenario()
    # search the whole remaining horizon: under heavy backlog the default
    # ready-day-plus-slack window can cut off every feasible start
    model = ipcore.build_model(scenario, batch, weights,
                               first_day=state.current_day, gamma=state.gamma,
                               horizon_len=scenario.horizon_days - state.current_day)
    solution = ipcore.solve_bnb(model, budget)
    if solution.status == "infeasible":
        raise RuntimeError(
            f"batch IP infeasible on day {state.current_day}:\n{solution.infeasibility_trace}")
    bookings = []
    for p in batch:
        day, linac = solution.assignment[p.id]
        bookings.append(state.book(p, day, linac))
    return bookings


def schedule_prediction_based(state: ScheduleState, patient: Patient, model) -> Booking:
    """Book a curative at the first fit from its predicted start day onward."""
    if model is None:
        raise ValueError("prediction-based scheduling requires a trained model")
    from .learning import feature_vector, predict_waiting

    x = feature_vector(state, patient)
    predicted = predict_waiting(model, x)
    from_day = max(state.current_day + predicted, patient.ready_day)
    day, linac = first_eligible_day(state, patient, from_day, respect_reservation=True)
    return state.book(patient, day, linac)


def schedule_offline(instance, weights: ObjectiveWeights = ObjectiveWeights(),
                     budget: ipcore.SolverBudget | None = None) -> tuple[Schedule, ipcore.IpSolution | None]:
    """Clairvoyant schedule: the lower-bounding strategy.

    Pass 1 replays the whole flow in arrival order and books every palliative
    at its earliest eligible day.  Pass 2 solves one IP over all curatives on
    the leftover capacity with no reservation, as of the first simulation day.
    """
    state = ScheduleState(instance.scenario, gamma=0.0)
    curatives = []
    for day, patients in instance.flow.iter_days():
        state.current_day = day
        for p in patients:
            if p.is_palliative:
                schedule_palliative_online(state, p)
            else:
                curatives.append(p)
    if not curatives:
        return state.schedule, None
    scenario = state.as_scenario()
    model = ipcore.build_model(scenario, curatives, weights, first_day=0, gamma=0.0,
                               horizon_len=scenario.horizon_days)
    if budget is None:
        budget = ipcore.SolverBudget(time_limit=30.0)
    solution = ipcore.solve_bnb(model, budget)
    if solution.status == "infeasible":
        raise RuntimeError(f"offline IP infeasible:\n{solution.infeasibility_trace}")
    for p in curatives:
        day, linac = solution.assignment[p.id]
        state.current_day = 0
        state.book(p, day, linac)
    return state.schedule, solution
