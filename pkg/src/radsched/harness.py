"""Rolling-horizon simulation engine, capacity simulations and experiments."""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .domain import ObjectiveWeights, check_schedule, overdue_time, waiting_time
from .instancegen import Instance, InstanceSetting, PatientPool, generate_flow, sample_patient
from .stats import one_way_anova, paired_t_test, sign_test
from . import ipcore, strategies

__all__ = [
    "PatientRecord", "SimResult", "run_simulation", "capacity_sim_uncapped",
    "capacity_sim_waiting", "reservation_sweep", "ComparisonReport", "compare_strategies",
    "one_way_anova", "paired_t_test", "sign_test", "DEFAULT_GAMMA_SWEEP",
]

DEFAULT_GAMMA_SWEEP = (0.0, 0.05, 0.10, 0.15, 0.20)

CATEGORY_ORDER = ("P1", "P2", "P3", "P4")


@dataclass(frozen=True)
class PatientRecord:
    id: str
    category: str
    waiting: int
    overdue: int
    start_day: int
    linac: int


@dataclass
class SimResult:
    strategy: str
    gamma: float
    seed: int
    records: list
    objective: float
    avg_occupancy_pct: float
    runtime_seconds: float = 0.0   # informational; excluded from serialized output

    def category_mean(self, metric: str, category: str | None = None) -> float:
        vals = [getattr(r, metric) for r in self.records
                if category is None or r.category == category]
        return float(np.mean(vals)) if vals else 0.0

    def to_json(self) -> dict:
        per_cat = {
            c: {
                "n": sum(1 for r in self.records if r.category == c),
                "mean_waiting": self.category_mean("waiting", c),
                "mean_overdue": self.category_mean("overdue", c),
            }
            for c in CATEGORY_ORDER
        }
        return {
            "strategy": self.strategy,
            "gamma": self.gamma,
            "seed": self.seed,
            "objective": self.objective,
            "avg_occupancy_pct": self.avg_occupancy_pct,
            "per_category": per_cat,
            "patients": [
                {"id": r.id, "category": r.category, "waiting": r.waiting,
                 "overdue": r.overdue, "start_day": r.start_day, "linac": r.linac}
                for r in sorted(self.records, key=lambda r: r.id)
            ],
        }


def _end_of_day_palliatives(state, palliatives):
    for p in sorted(palliatives, key=lambda q: q.admission_seq):
        strategies.schedule_palliative_online(state, p)


def run_simulation(instance: Instance, strategy: str, gamma: float,
                   weights: ObjectiveWeights = ObjectiveWeights(),
                   model=None, ip_budget: ipcore.SolverBudget | None = None,
                   offline_budget: ipcore.SolverBudget | None = None,
                   audit: bool = True) -> SimResult:
    """Replay the instance's flow under one strategy at its native cadence."""
    if strategy not in strategies.STRATEGY_KINDS:
        raise ValueError(f"unknown strategy {strategy!r}")
    if strategy == "prediction-based" and model is None:
        raise ValueError("prediction-based scheduling requires a model")
    t0 = time.perf_counter()

    if strategy == "offline":
        schedule, _ = strategies.schedule_offline(instance, weights, budget=offline_budget)
        state = None
        eff_gamma = 0.0
    else:
        eff_gamma = gamma
        state = strategies.ScheduleState(instance.scenario, gamma)
        pending_curatives = []
        last_day = instance.flow.days[-1]
        for day, patients in instance.flow.iter_days():
            state.current_day = day
            day_palliatives, day_curatives = [], []
            for p in patients:
                if strategy in ("online-greedy", "daily-greedy", "prediction-based"):
                    if p.is_palliative:
                        strategies.schedule_palliative_online(state, p)
                    elif strategy == "online-greedy":
                        strategies.schedule_online_greedy(state, p)
                    elif strategy == "prediction-based":
                        strategies.schedule_prediction_based(state, p, model)
                    else:
                        day_curatives.append(p)
                else:  # IP strategies batch everything at end of day
                    (day_palliatives if p.is_palliative else day_curatives).append(p)
            # end-of-day cadence
            if strategy == "daily-greedy":
                strategies.schedule_daily_greedy_batch(state, day_curatives)
            elif strategy == "daily-IP":
                _end_of_day_palliatives(state, day_palliatives)
                strategies.schedule_batch_ip(state, day_curatives, budget=ip_budget,
                                             weights=weights)
            elif strategy == "weekly-IP":
                _end_of_day_palliatives(state, day_palliatives)
                pending_curatives.extend(day_curatives)
                if day % 5 == 4 or day == last_day:
                    strategies.schedule_batch_ip(state, pending_curatives,
                                                 budget=ip_budget, weights=weights)
                    pending_curatives = []
        schedule = state.schedule

    patients = instance.flow.all_patients()
    if audit:
        violations = check_schedule(schedule, patients, instance.scenario, gamma=eff_gamma)
        if violations:
            raise AssertionError(
                f"{strategy} produced an infeasible schedule: {violations[:3]}")

    records = []
    objective = 0.0
    for p in patients:
        start, linac = schedule.assignments[p.id]
        records.append(PatientRecord(p.id, p.category.label,
                                     waiting_time(p, start), overdue_time(p, start),
                                     start, linac))
        from .domain import patient_cost
        objective += patient_cost(p, start, weights)

    num_days = len(instance.flow.days)
    pall, cur = schedule.occupancy(patients, instance.scenario.horizon_days,
                                   instance.scenario.num_linacs)
    booked = (instance.scenario.committed + pall + cur)[:num_days]
    occupancy = 100.0 * booked.sum() / instance.scenario.total_capacity[:num_days].sum()
    return SimResult(strategy, eff_gamma, instance.rng_seed, records, objective,
                     float(occupancy), time.perf_counter() - t0)


def capacity_sim_uncapped(setting: InstanceSetting, pool: PatientPool,
                          num_days: int, seed: int):
    """Greedy demand with capacity constraints removed: weekly demanded
    blocks vs. the fleet's weekly capacity line."""
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    flow = generate_flow(setting, num_days, pool, rng)
    horizon = num_days + 160
    occupancy = np.zeros(horizon)
    for day, patients in flow.iter_days():
        for p in patients:
            offset = strategies.GREEDY_SCAN_OFFSET[p.category.label]
            start = max(p.ready_day, p.admission_day + offset)
            occupancy[start:start + p.fractions] += p.fraction_blocks
    weeks = num_days // 5
    weekly_demand = [float(occupancy[5 * w:5 * w + 5].sum()) for w in range(weeks)]
    weekly_capacity = 5.0 * setting.num_linacs * 120
    return {"weekly_demand": weekly_demand, "weekly_capacity": weekly_capacity}


def capacity_sim_waiting(setting: InstanceSetting, pool: PatientPool,
                         num_days: int, seed: int, gamma: float = 0.0):
    """Capped greedy run; weekly mean waiting and its least-squares slope.

    A rising slope means the arrival rate overloads the fleet.  The
    eligibility window is widened so heavy backlogs stay schedulable.
    """
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    flow = generate_flow(setting, num_days, pool, rng)
    horizon = num_days + 460
    from .domain import Scenario
    scenario = Scenario.empty(setting.num_linacs, horizon)
    state = strategies.ScheduleState(scenario, gamma)
    waits = {}  # admission week -> list of waiting times
    for day, patients in flow.iter_days():
        state.current_day = day
        for p in patients:
            offset = strategies.GREEDY_SCAN_OFFSET[p.category.label]
            if p.is_palliative:
                from_day = max(day, p.ready_day)
                respect = False
            else:
                from_day = max(p.ready_day, p.admission_day + offset)
                respect = True
            d, l = strategies.first_eligible_day(state, p, from_day, respect, window=400)
            state.book(p, d, l)
            waits.setdefault(day // 5, []).append(d - p.admission_day)
    weeks = num_days // 5
    weekly_mean = [float(np.mean(waits[w])) if w in waits else None for w in range(weeks)]
    xs = np.array([w for w in range(weeks) if weekly_mean[w] is not None], dtype=np.float64)
    ys = np.array([weekly_mean[w] for w in range(weeks) if weekly_mean[w] is not None])
    slope = float(np.polyfit(xs, ys, 1)[0]) if xs.size >= 2 else 0.0
    return {"weekly_mean_waiting": weekly_mean, "trend_slope": slope}


@dataclass
class ComparisonReport:
    strategies: list
    gamma: float
    results: dict = field(default_factory=dict)   # strategy -> list of SimResult
    anova: dict = field(default_factory=dict)     # category -> {metric: (F, p)}
    paired_t: dict = field(default_factory=dict)  # (s1, s2, category) -> (t, p)

    def to_json(self) -> dict:
        return {
            "gamma": self.gamma,
            "strategies": list(self.strategies),
            "per_strategy": {
                s: {
                    "mean_waiting": {c: float(np.mean([r.category_mean("waiting", c)
                                                       for r in res]))
                                     for c in CATEGORY_ORDER},
                    "mean_overdue": {c: float(np.mean([r.category_mean("overdue", c)
                                                       for r in res]))
                                     for c in CATEGORY_ORDER},
                }
                for s, res in self.results.items()
            },
            "anova": {c: {m: {"F": F, "p": p} for m, (F, p) in mm.items()}
                      for c, mm in self.anova.items()},
            "paired_t": [{"a": a, "b": b, "category": c, "metric": m, "t": t, "p": p}
                         for (a, b, c, m), (t, p) in self.paired_t.items()],
        }


def compare_strategies(instances, strategy_names, gamma: float,
                       weights: ObjectiveWeights = ObjectiveWeights(),
                       model=None, ip_budget=None, offline_budget=None) -> ComparisonReport:
    """Run every strategy over every instance; ANOVA + paired t per category.

    The statistics run on per-instance category means (one sample per
    instance), while the raw per-patient records stay available for pooled
    boxplots.
    """
    report = ComparisonReport(list(strategy_names), gamma)
    for name in strategy_names:
        report.results[name] = [
            run_simulation(inst, name, gamma, weights, model=model,
                           ip_budget=ip_budget, offline_budget=offline_budget)
            for inst in instances]
    for c in CATEGORY_ORDER:
        metrics = {}
        for metric in ("waiting", "overdue"):
            groups = [[r.category_mean(metric, c) for r in report.results[s]]
                      for s in strategy_names]
            if len(groups) >= 2 and all(len(g) >= 2 for g in groups):
                metrics[metric] = one_way_anova(groups)
        if metrics:
            report.anova[c] = metrics
    for i, a in enumerate(strategy_names):
        for b in strategy_names[i + 1:]:
            for c in CATEGORY_ORDER:
                for metric in ("waiting", "overdue"):
                    xs = [r.category_mean(metric, c) for r in report.results[a]]
                    ys = [r.category_mean(metric, c) for r in report.results[b]]
                    if len(xs) >= 2:
                        report.paired_t[(a, b, c, metric)] = paired_t_test(xs, ys)
    return report


def reservation_sweep(instances, strategy_names, gamma_list=DEFAULT_GAMMA_SWEEP,
                      weights: ObjectiveWeights = ObjectiveWeights(),
                      model=None, ip_budget=None) -> dict:
    """Full factorial (instance x strategy x gamma); per-category mean
    overdue table plus a ComparisonReport per gamma."""
    out = {}
    for gamma in gamma_list:
        out[gamma] = compare_strategies(instances, strategy_names, gamma,
                                        weights, model=model, ip_budget=ip_budget)
    return out
