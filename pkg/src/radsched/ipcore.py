"""Integer program for first-fraction assignment, with an in-repo exact solver.

The model assigns each new patient a (start day, linac) with the log-weighted
waiting/overdue objective, subject to ready dates, per-day linac capacity over
the whole treatment course, and the palliative reservation cap on curative
load.  ``solve_bnb`` is a deterministic depth-first branch-and-bound;
``brute_force`` is the exhaustive oracle used in tests.  An external MILP
engine can be plugged in through the ``Solver`` protocol.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Protocol

import numpy as np

from .domain import ObjectiveWeights, Patient, Scenario, patient_cost

__all__ = [
    "IpModel", "IpSolution", "SolverBudget", "Solver",
    "build_model", "solve_bnb", "brute_force", "lower_bound",
    "ModelBuildError", "BruteForceSizeError",
]

EPS = 1e-9


class ModelBuildError(ValueError):
    pass


class BruteForceSizeError(ValueError):
    pass


@dataclass(frozen=True)
class SolverBudget:
    time_limit: float = 60.0      # seconds
    node_limit: int | None = None

    def __post_init__(self):
        if self.time_limit <= 0 or (self.node_limit is not None and self.node_limit <= 0):
            raise ValueError("solver budget limits must be positive")


@dataclass
class IpModel:
    """Prepared model: per-patient candidate slots and their objective costs."""

    patients: list              # new patients, input order preserved
    scenario: Scenario
    weights: ObjectiveWeights
    first_day: int              # earliest allowed start day (current day in batch mode)
    horizon_end: int            # exclusive upper bound on start days
    gamma: float
    # Derived, indexed by patient position in `patients`:
    start_days: list = field(default_factory=list)    # list of int arrays
    start_costs: list = field(default_factory=list)   # parallel float arrays

    @property
    def num_linacs(self) -> int:
        return self.scenario.num_linacs

    def objective_of(self, assignment: dict) -> float:
        """Canonical objective: patient costs summed in input order.

        Every solver reports objectives through this single accumulation
        order, so equal assignments give bit-equal objectives.
        """
        total = 0.0
        for p in self.patients:
            start, _ = assignment[p.id]
            total += patient_cost(p, start, self.weights)
        return total


@dataclass
class IpSolution:
    status: str                         # optimal | feasible | infeasible
    assignment: dict = field(default_factory=dict)  # patient id -> (start_day, linac)
    objective: float = float("inf")
    nodes: int = 0
    best_bound: float = 0.0
    infeasibility_trace: str = ""

    def to_json(self) -> dict:
        return {
            "status": self.status,
            "objective": None if self.status == "infeasible" else self.objective,
            "assignment": {
                pid: {"start_day": s, "linac": l}
                for pid, (s, l) in sorted(self.assignment.items())
            },
            "nodes": self.nodes,
            "best_bound": self.best_bound,
        }


class Solver(Protocol):
    def __call__(self, model: IpModel, budget: SolverBudget) -> IpSolution: ...


DEFAULT_HORIZON_SLACK = 50  # business days past the last ready day


def build_model(scenario: Scenario, new_patients, weights: ObjectiveWeights,
                horizon_len: int | None = None, first_day: int = 0,
                gamma: float | None = None) -> IpModel:
    """Build the assignment model over start days ``first_day .. horizon_end-1``."""
    if gamma is None:
        gamma = scenario.reservation
    patients = list(new_patients)
    if horizon_len is None:
        last_ready = max((max(p.ready_day, first_day) for p in patients), default=first_day)
        horizon_len = last_ready + DEFAULT_HORIZON_SLACK - first_day
    horizon_end = min(first_day + horizon_len, scenario.horizon_days)
    model = IpModel(patients, scenario, weights, first_day, horizon_end, gamma)
    for p in patients:
        lo = max(p.ready_day, first_day)
        hi = horizon_end - p.fractions  # last start that fits the whole course
        if lo > hi:
            raise ModelBuildError(
                f"patient {p.id}: no start day in [{lo}, {hi}] fits {p.fractions} "
                f"fractions before day {horizon_end}")
        days = np.arange(lo, hi + 1, dtype=np.int64)
        costs = np.array([patient_cost(p, int(t), weights) for t in days])
        model.start_days.append(days)
        model.start_costs.append(costs)
    return model


def _capacity_arrays(model: IpModel):
    """Remaining total room and remaining curative room per (day, linac).

    ``avail`` starts at C - committed; ``cur_room`` starts at the
    reservation-adjusted curative cap max(0, avail - gamma*C) and only
    curative bookings draw it down, matching the reservation constraint.
    """
    end = model.horizon_end
    avail = model.scenario.available[:end].astype(np.float64).copy()
    cur_room = np.maximum(0.0, avail - model.gamma * model.scenario.total_capacity[:end])
    return avail, cur_room


def lower_bound(model: IpModel, partial_assignment: dict) -> float:
    """Admissible completion bound for a partial assignment.

    Assigned patients contribute their exact cost; each unassigned patient
    contributes the cost of its earliest capacity-ignoring start, which
    never exceeds its cost in any feasible completion.
    """
    bound = 0.0
    for i, p in enumerate(model.patients):
        if p.id in partial_assignment:
            start, _ = partial_assignment[p.id]
            bound += patient_cost(p, start, model.weights)
        else:
            bound += model.start_costs[i][0]  # costs are non-decreasing in t
    return bound


def _tail_bound(model: IpModel, order, next_idx: int) -> float:
    """Sum of earliest-start costs of patients not yet branched on."""
    return sum(model.start_costs[order[k]][0] for k in range(next_idx, len(order)))


def solve_bnb(model: IpModel, budget: SolverBudget = SolverBudget()) -> IpSolution:
    """Deterministic depth-first branch and bound.

    Branching order: patients by ascending due day (ties by input position),
    candidate days ascending, linacs ascending.  The first dive is the
    due-date-greedy schedule, which seeds a strong incumbent; when the budget
    runs out the incumbent is returned with status ``feasible``.
    """
    n = len(model.patients)
    order = sorted(range(n), key=lambda i: (model.patients[i].due_day, i))
    avail, cur_room = _capacity_arrays(model)

    deadline = time.monotonic() + budget.time_limit
    best_assign: dict | None = None
    best_cost = float("inf")
    nodes = 0
    timed_out = False

    assignment: dict = {}

    def recurse(k: int, committed_cost: float):
        nonlocal best_assign, best_cost, nodes, timed_out
        if timed_out:
            return
        if k == n:
            if committed_cost < best_cost - EPS:
                best_cost = committed_cost
                best_assign = dict(assignment)
            return
        if time.monotonic() > deadline or (budget.node_limit and nodes >= budget.node_limit):
            timed_out = True
            return
        i = order[k]
        p = model.patients[i]
        rest_bound = _tail_bound(model, order, k + 1)
        days = model.start_days[i]
        costs = model.start_costs[i]
        blocks = p.fraction_blocks
        curative = not p.is_palliative
        for j in range(len(days)):
            c = committed_cost + costs[j]
            if c + rest_bound >= best_cost - EPS:
                break  # costs ascend in t; no later day can improve
            t = int(days[j])
            end = t + p.fractions
            for l in range(model.num_linacs):
                if np.any(avail[t:end, l] < blocks - EPS):
                    continue
                if curative and np.any(cur_room[t:end, l] < blocks - EPS):
                    continue
                nodes += 1
                avail[t:end, l] -= blocks
                if curative:
                    cur_room[t:end, l] -= blocks
                assignment[p.id] = (t, l)
                recurse(k + 1, c)
                del assignment[p.id]
                avail[t:end, l] += blocks
                if curative:
                    cur_room[t:end, l] += blocks
                if timed_out:
                    return

    recurse(0, 0.0)

    if best_assign is None:
        if timed_out:
            return IpSolution(status="infeasible", nodes=nodes,
                              infeasibility_trace="budget exhausted before any feasible assignment")
        trace = _infeasibility_trace(model, avail)
        return IpSolution(status="infeasible", nodes=nodes, infeasibility_trace=trace)
    status = "feasible" if timed_out else "optimal"
    objective = model.objective_of(best_assign)
    bound = objective if status == "optimal" else _tail_bound(model, order, 0)
    return IpSolution(status=status, assignment=best_assign, objective=objective,
                      nodes=nodes, best_bound=bound)


def _infeasibility_trace(model: IpModel, avail) -> str:
    lines = ["no feasible assignment within horizon; remaining capacity snapshot:"]
    for i, p in enumerate(model.patients):
        days = model.start_days[i]
        lo, hi = int(days[0]), int(days[-1])
        best_slack = float(avail[lo:hi + p.fractions].max(initial=0.0))
        lines.append(f"  {p.id}: needs {p.fraction_blocks} blocks x {p.fractions} days "
                     f"in days [{lo}, {hi}]; best single-day slack {best_slack:g}")
    return "\n".join(lines)


BRUTE_FORCE_LIMIT = 10_000_000


def brute_force(model: IpModel) -> IpSolution:
    """Exhaustive enumeration oracle.

    Refuses when |days x linacs|^n exceeds 10^7.  Ties broken by
    lexicographic (patient position, day, linac) via enumeration order.
    """
    n = len(model.patients)
    if n == 0:
        return IpSolution(status="optimal", objective=0.0)
    sizes = [len(model.start_days[i]) * model.num_linacs for i in range(n)]
    space = 1
    for s in sizes:
        space *= s
        if space > BRUTE_FORCE_LIMIT:
            raise BruteForceSizeError(
                f"search space exceeds {BRUTE_FORCE_LIMIT} (at least {space} assignments)")

    avail, cur_room = _capacity_arrays(model)
    best_assign = None
    best_cost = float("inf")
    combo = [None] * n

    def enumerate_from(i: int, cost: float):
        """Walk every feasible assignment; no cost-based pruning."""
        nonlocal best_assign, best_cost
        if i == n:
            if cost < best_cost - EPS:
                best_cost = cost
                best_assign = {model.patients[k].id: combo[k] for k in range(n)}
            return
        p = model.patients[i]
        blocks = p.fraction_blocks
        curative = not p.is_palliative
        for j, t in enumerate(model.start_days[i]):
            t = int(t)
            end = t + p.fractions
            for l in range(model.num_linacs):
                if np.any(avail[t:end, l] < blocks - EPS):
                    continue
                if curative and np.any(cur_room[t:end, l] < blocks - EPS):
                    continue
                avail[t:end, l] -= blocks
                if curative:
                    cur_room[t:end, l] -= blocks
                combo[i] = (t, l)
                enumerate_from(i + 1, cost + model.start_costs[i][j])
                avail[t:end, l] += blocks
                if curative:
                    cur_room[t:end, l] += blocks

    enumerate_from(0, 0.0)
    if best_assign is None:
        return IpSolution(status="infeasible",
                          infeasibility_trace="exhaustive search found no feasible assignment")
    return IpSolution(status="optimal", assignment=best_assign,
                      objective=model.objective_of(best_assign))
