"""Synthetic patient pool, Poisson arrival flows and warm-up scenarios.

Replaces the proprietary hospital dataset with a parameterized generator.
Everything is deterministic given an explicit seed; parallel generation
should derive per-instance seeds as ``SeedSequence((seed, index))``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .domain import CATEGORIES, DEFAULT_DAY_CAPACITY, Patient, Scenario
from . import strategies

__all__ = [
    "PatientPool", "PatientFlow", "InstanceSetting", "Instance",
    "sample_patient", "generate_flow", "generate_variable_flow",
    "warmup_scenario", "generate_instance", "WarmupDidNotConvergeError",
]

CATEGORY_LABELS = ("P1", "P2", "P3", "P4")

DEFAULT_CATEGORY_WEIGHTS = (0.0044, 0.2714, 0.4136, 0.3106)

# Discrete (support, weights) pairs per category.  Fraction lengths are in
# 5-minute blocks with the 25-minute (5-block) mode dominating curatives;
# palliative courses are short, curative counts peak at 5..33 sessions.
DEFAULT_BLOCKS = {
    "P1": ((2, 3, 4, 5), (0.2, 0.3, 0.3, 0.2)),
    "P2": ((2, 3, 4, 5), (0.2, 0.3, 0.3, 0.2)),
    "P3": ((3, 5, 6, 9, 12), (0.15, 0.5, 0.15, 0.1, 0.1)),
    "P4": ((3, 5, 6, 9, 12), (0.15, 0.5, 0.15, 0.1, 0.1)),
}
DEFAULT_FRACTIONS = {
    "P1": ((1, 2, 3), (1 / 3, 1 / 3, 1 / 3)),
    "P2": ((1, 2, 3, 4, 5), (0.2, 0.2, 0.2, 0.2, 0.2)),
    "P3": ((5, 15, 20, 25, 30, 33), (0.2, 0.2, 0.2, 0.2, 0.1, 0.1)),
    "P4": ((5, 15, 20, 25, 30, 33), (0.2, 0.2, 0.2, 0.2, 0.1, 0.1)),
}
DEFAULT_READY_OFFSETS = {
    "P1": ((0,), (1.0,)),
    "P2": ((0, 1, 2), (1 / 3, 1 / 3, 1 / 3)),
    "P3": ((5, 6, 7), (1 / 3, 1 / 3, 1 / 3)),
    "P4": ((5, 6, 7), (1 / 3, 1 / 3, 1 / 3)),
}


def _normalize(dist):
    support, weights = dist
    w = np.asarray(weights, dtype=np.float64)
    return tuple(int(v) for v in support), tuple(w / w.sum())


@dataclass(frozen=True)
class PatientPool:
    category_weights: tuple = DEFAULT_CATEGORY_WEIGHTS
    blocks_dist: dict = field(default_factory=lambda: dict(DEFAULT_BLOCKS))
    fractions_dist: dict = field(default_factory=lambda: dict(DEFAULT_FRACTIONS))
    ready_offset_dist: dict = field(default_factory=lambda: dict(DEFAULT_READY_OFFSETS))

    def __post_init__(self):
        if abs(sum(self.category_weights) - 1.0) > 1e-9:
            raise ValueError("category weights must sum to 1")
        for dists, lo, hi in ((self.blocks_dist, 2, 33), (self.fractions_dist, 1, 45),
                              (self.ready_offset_dist, 0, None)):
            for label in CATEGORY_LABELS:
                support, weights = dists[label]
                if len(support) != len(weights):
                    raise ValueError(f"{label}: support/weights length mismatch")
                for v in support:
                    if v < lo or (hi is not None and v > hi):
                        raise ValueError(f"{label}: support value {v} out of bounds")

    def to_json(self) -> dict:
        return {
            "category_weights": list(self.category_weights),
            "blocks_dist": {k: [list(s), list(w)] for k, (s, w) in self.blocks_dist.items()},
            "fractions_dist": {k: [list(s), list(w)] for k, (s, w) in self.fractions_dist.items()},
            "ready_offset_dist": {k: [list(s), list(w)] for k, (s, w) in self.ready_offset_dist.items()},
        }

    @classmethod
    def from_json(cls, rec: dict) -> "PatientPool":
        def dists(key, default):
            if key not in rec:
                return dict(default)
            return {k: (tuple(s), tuple(w)) for k, (s, w) in rec[key].items()}
        return cls(
            category_weights=tuple(rec.get("category_weights", DEFAULT_CATEGORY_WEIGHTS)),
            blocks_dist=dists("blocks_dist", DEFAULT_BLOCKS),
            fractions_dist=dists("fractions_dist", DEFAULT_FRACTIONS),
            ready_offset_dist=dists("ready_offset_dist", DEFAULT_READY_OFFSETS),
        )


@dataclass(frozen=True)
class InstanceSetting:
    num_linacs: int
    arrival_rate: float

    def __post_init__(self):
        if self.num_linacs < 1 or self.arrival_rate <= 0:
            raise ValueError("setting needs >= 1 linac and a positive arrival rate")


@dataclass
class PatientFlow:
    days: list                 # simulation business days, ascending
    arrivals: dict             # day -> ordered list of Patients

    def iter_days(self):
        for day in self.days:
            yield day, self.arrivals[day]

    def all_patients(self) -> list:
        return [p for day in self.days for p in self.arrivals[day]]

    def to_json(self) -> dict:
        return {"days": list(self.days),
                "arrivals": {str(d): [p.to_json() for p in self.arrivals[d]] for d in self.days}}

    @classmethod
    def from_json(cls, rec: dict) -> "PatientFlow":
        days = list(rec["days"])
        arrivals = {d: [Patient.from_json(p) for p in rec["arrivals"][str(d)]] for d in days}
        return cls(days, arrivals)


@dataclass
class Instance:
    scenario: Scenario
    flow: PatientFlow
    setting: InstanceSetting
    rng_seed: int

    def to_json(self) -> dict:
        return {
            "scenario": self.scenario.to_json(),
            "flow": self.flow.to_json(),
            "setting": {"num_linacs": self.setting.num_linacs,
                        "arrival_rate": self.setting.arrival_rate},
            "rng_seed": self.rng_seed,
        }

    @classmethod
    def from_json(cls, rec: dict) -> "Instance":
        return cls(
            scenario=Scenario.from_json(rec["scenario"]),
            flow=PatientFlow.from_json(rec["flow"]),
            setting=InstanceSetting(**rec["setting"]),
            rng_seed=rec["rng_seed"],
        )

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json(), fh, sort_keys=True, indent=1)

    @classmethod
    def load(cls, path) -> "Instance":
        with open(path) as fh:
            return cls.from_json(json.load(fh))


def _draw(dist, rng) -> int:
    support, weights = _normalize(dist)
    return int(rng.choice(support, p=weights))


def sample_patient(pool: PatientPool, admission_day: int, admission_seq: int,
                   rng: np.random.Generator, category: str | None = None) -> Patient:
    if category is None:
        w = np.asarray(pool.category_weights)
        category = str(rng.choice(CATEGORY_LABELS, p=w / w.sum()))
    cat = CATEGORIES[category]
    ready_offset = _draw(pool.ready_offset_dist[category], rng)
    return Patient(
        id=f"p{admission_day:03d}-{admission_seq:03d}",
        category=cat,
        admission_day=admission_day,
        admission_seq=admission_seq,
        ready_day=admission_day + ready_offset,
        due_day=admission_day + cat.deadline_days,
        fractions=_draw(pool.fractions_dist[category], rng),
        fraction_blocks=_draw(pool.blocks_dist[category], rng),
    )


def generate_flow(setting: InstanceSetting, num_days: int, pool: PatientPool,
                  rng: np.random.Generator, start_day: int = 0) -> PatientFlow:
    """Poisson(lambda) arrivals per day, patients drawn from the pool."""
    if num_days < 1:
        raise ValueError("num_days must be >= 1")
    days = list(range(start_day, start_day + num_days))
    arrivals = {}
    for day in days:
        count = int(rng.poisson(setting.arrival_rate))
        arrivals[day] = [sample_patient(pool, day, seq, rng) for seq in range(count)]
    return PatientFlow(days, arrivals)


def generate_variable_flow(setting: InstanceSetting, num_days: int, delta: float,
                           pool: PatientPool, rng: np.random.Generator,
                           interval_days: int = 10) -> PatientFlow:
    """Piecewise-constant arrival rate redrawn uniformly from
    [lambda - delta, lambda + delta] every ``interval_days``."""
    if delta >= setting.arrival_rate:
        raise ValueError("rate deviation must be smaller than the arrival rate")
    if num_days < 1:
        raise ValueError("num_days must be >= 1")
    days = list(range(num_days))
    arrivals = {}
    rate = setting.arrival_rate
    for day in days:
        if day % interval_days == 0:
            rate = rng.uniform(setting.arrival_rate - delta, setting.arrival_rate + delta)
        count = int(rng.poisson(rate))
        arrivals[day] = [sample_patient(pool, day, seq, rng) for seq in range(count)]
    return PatientFlow(days, arrivals)


class WarmupDidNotConvergeError(RuntimeError):
    pass


def warmup_scenario(setting: InstanceSetting, pool: PatientPool,
                    rng: np.random.Generator, threshold: float = 0.9,
                    horizon_days: int = 300, max_warmup_days: int = 400,
                    day_capacity: int = DEFAULT_DAY_CAPACITY) -> Scenario:
    """Greedy-fill an empty fleet until some day hits the occupancy threshold.

    Appointments strictly after the stop day become the committed capacity of
    the returned scenario, re-indexed so the first post-warm-up day is day 0.
    The warm-up flow uses the setting's own arrival rate.
    """
    if not 0 <= threshold <= 1:
        raise ValueError("threshold must be in [0, 1]")
    warm_horizon = max_warmup_days + 120
    scenario = Scenario.empty(setting.num_linacs, warm_horizon, day_capacity)
    state = strategies.ScheduleState(scenario, gamma=0.0)
    fleet_cap = scenario.total_capacity.sum(axis=1).astype(np.float64)

    def stop_day() -> int | None:
        booked = (scenario.total_capacity.astype(np.float64) - state.avail).sum(axis=1)
        hit = np.nonzero(booked >= threshold * fleet_cap - 1e-9)[0]
        return int(hit[0]) if hit.size else None

    stop = stop_day()  # immediate stop for degenerate thresholds
    day = 0
    while stop is None:
        if day >= max_warmup_days:
            raise WarmupDidNotConvergeError(
                f"warm-up did not reach {threshold:.0%} occupancy within "
                f"{max_warmup_days} days")
        state.current_day = day
        count = int(rng.poisson(setting.arrival_rate))
        for seq in range(count):
            p = sample_patient(pool, day, seq, rng)
            if p.is_palliative:
                strategies.schedule_palliative_online(state, p)
            else:
                strategies.schedule_online_greedy(state, p)
            stop = stop_day()
            if stop is not None:
                break
        day += 1

    committed = np.zeros((horizon_days, setting.num_linacs), dtype=np.int64)
    if stop is not None:
        first = stop + 1
        span = min(horizon_days, warm_horizon - first)
        used = (scenario.total_capacity - np.round(state.avail).astype(np.int64))
        committed[:span] = used[first:first + span]
    return Scenario(setting.num_linacs, horizon_days,
                    np.full((horizon_days, setting.num_linacs), day_capacity, dtype=np.int64),
                    committed)


# horizon slack past the last arrival day: 50-day scan window + the longest
# course (45 fractions) + margin
HORIZON_SLACK = 110


def generate_instance(setting: InstanceSetting, pool: PatientPool, num_days: int,
                      seed: int, gamma: float = 0.0,
                      variable_delta: float | None = None,
                      warmup_threshold: float = 0.9) -> Instance:
    """One reproducible problem instance: warmed-up scenario + patient flow."""
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    horizon = num_days + HORIZON_SLACK
    scenario = warmup_scenario(setting, pool, rng, threshold=warmup_threshold,
                               horizon_days=horizon)
    scenario = scenario.with_reservation(gamma)
    if variable_delta is None:
        flow = generate_flow(setting, num_days, pool, rng)
    else:
        flow = generate_variable_flow(setting, num_days, variable_delta, pool, rng)
    return Instance(scenario, flow, setting, seed)
