"""Command-line interface.

All commands are deterministic given their ``--seed``: output files contain
no timestamps or timings, and repeated runs are byte-identical.
"""

from __future__ import annotations

import csv
import json
import pathlib
import sys

import click
import numpy as np

from .domain import ObjectiveWeights, Schedule
from .gbt import Hyperparams, fit_gbt, load_model, save_model
from .instancegen import Instance, InstanceSetting, PatientPool, generate_instance
from .learning import (FEATURE_NAMES, evaluate, load_examples_csv,
                       make_training_examples, save_examples_csv)
from . import explain as explain_mod
from . import harness, ipcore

WEIGHT_OPTIONS = [
    click.option("--w-wait", default=1.0, show_default=True, help="waiting-time weight"),
    click.option("--w-overdue", default=100.0, show_default=True, help="overdue-time weight"),
]


def _dump_json(obj, path) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, sort_keys=True, indent=1)
        fh.write("\n")


def _load_pool(pool_path) -> PatientPool:
    if pool_path is None:
        return PatientPool()
    with open(pool_path) as fh:
        return PatientPool.from_json(json.load(fh))


def _schedule_from_run_output(doc: dict) -> Schedule:
    sched = Schedule()
    for rec in doc["patients"]:
        sched.assign(rec["id"], rec["start_day"], rec["linac"])
    return sched


@click.group()
def main():
    """Radiotherapy scheduling: instance generation, solving, simulation,
    training and explanation."""


@main.command()
@click.option("--linacs", type=int, required=True)
@click.option("--rate", type=float, required=True, help="Poisson arrival rate (patients/day)")
@click.option("--days", type=int, required=True, help="simulation period length")
@click.option("--count", type=int, default=1, show_default=True, help="number of instances")
@click.option("--seed", type=int, required=True)
@click.option("--gamma", type=float, default=0.0, show_default=True)
@click.option("--variable-delta", type=float, default=None,
              help="enable variable arrival rate within [rate-delta, rate+delta]")
@click.option("--pool", "pool_path", type=click.Path(exists=True), default=None,
              help="patient-pool config JSON (defaults to the built-in pool)")
@click.option("--out", "out_dir", type=click.Path(), required=True)
def gen(linacs, rate, days, count, seed, gamma, variable_delta, pool_path, out_dir):
    """Generate problem instances (warm-started scenario + patient flow)."""
    out = pathlib.Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    setting = InstanceSetting(linacs, rate)
    pool = _load_pool(pool_path)
    for i in range(count):
        inst_seed = int(np.random.SeedSequence((seed, i)).generate_state(1)[0])
        inst = generate_instance(setting, pool, days, inst_seed, gamma=gamma,
                                 variable_delta=variable_delta)
        inst.save(out / f"instance_{seed:05d}_{i:04d}.json")
    click.echo(f"wrote {count} instance(s) to {out}")


@main.command()
@click.option("--instance", "instance_path", type=click.Path(exists=True), required=True)
@click.option("--gamma", type=float, default=0.0, show_default=True)
@click.option("--time-limit", type=float, default=60.0, show_default=True)
@click.option("--w-wait", default=1.0, show_default=True)
@click.option("--w-overdue", default=100.0, show_default=True)
@click.option("--out", "out_path", type=click.Path(), required=True)
def solve(instance_path, gamma, time_limit, w_wait, w_overdue, out_path):
    """Solve the static IP over the whole flow with the in-repo solver."""
    inst = Instance.load(instance_path)
    weights = ObjectiveWeights(w_wait, w_overdue)
    model = ipcore.build_model(inst.scenario, inst.flow.all_patients(), weights,
                               gamma=gamma)
    solution = ipcore.solve_bnb(model, ipcore.SolverBudget(time_limit=time_limit))
    _dump_json(solution.to_json(), out_path)
    click.echo(f"{solution.status}; objective="
               f"{'-' if solution.status == 'infeasible' else solution.objective:.6g} "
               f"nodes={solution.nodes}", err=True)


@main.command()
@click.option("--instance", "instance_path", type=click.Path(exists=True), required=True)
@click.option("--strategy", type=click.Choice(list(harness.strategies.STRATEGY_KINDS)),
              required=True)
@click.option("--gamma", type=float, default=0.0, show_default=True)
@click.option("--model", "model_path", type=click.Path(exists=True), default=None)
@click.option("--ip-time-limit", type=float, default=10.0, show_default=True)
@click.option("--offline-time-limit", type=float, default=60.0, show_default=True)
@click.option("--w-wait", default=1.0, show_default=True)
@click.option("--w-overdue", default=100.0, show_default=True)
@click.option("--out", "out_path", type=click.Path(), required=True)
def run(instance_path, strategy, gamma, model_path, ip_time_limit,
        offline_time_limit, w_wait, w_overdue, out_path):
    """Run one strategy over one instance; write the per-patient result JSON."""
    inst = Instance.load(instance_path)
    model = load_model(model_path) if model_path else None
    result = harness.run_simulation(
        inst, strategy, gamma, ObjectiveWeights(w_wait, w_overdue), model=model,
        ip_budget=ipcore.SolverBudget(time_limit=ip_time_limit),
        offline_budget=ipcore.SolverBudget(time_limit=offline_time_limit))
    _dump_json(result.to_json(), out_path)
    click.echo(f"{strategy}: objective={result.objective:.6g} "
               f"runtime={result.runtime_seconds:.2f}s", err=True)


@main.command()
@click.option("--instances", "instances_dir", type=click.Path(exists=True), required=True)
@click.option("--solutions", "solutions_dir", type=click.Path(exists=True), required=True,
              help="directory of `run --strategy offline` outputs, same file names")
@click.option("--out", "out_path", type=click.Path(), required=True)
def extract(instances_dir, solutions_dir, out_path):
    """Build training examples from instances and their offline solutions."""
    inst_dir = pathlib.Path(instances_dir)
    sol_dir = pathlib.Path(solutions_dir)
    xs, ys = [], []
    for inst_path in sorted(inst_dir.glob("*.json")):
        sol_path = sol_dir / inst_path.name
        if not sol_path.exists():
            raise click.ClickException(f"missing offline solution for {inst_path.name}")
        inst = Instance.load(inst_path)
        with open(sol_path) as fh:
            sched = _schedule_from_run_output(json.load(fh))
        X, y = make_training_examples(inst, sched)
        xs.append(X)
        ys.append(y)
    X = np.vstack(xs)
    y = np.concatenate(ys)
    save_examples_csv(out_path, X, y)
    click.echo(f"wrote {y.shape[0]} examples to {out_path}")


@main.command()
@click.option("--examples", "examples_path", type=click.Path(exists=True), required=True)
@click.option("--trees", type=int, default=200, show_default=True)
@click.option("--depth", type=int, default=6, show_default=True)
@click.option("--learning-rate", type=float, default=0.1, show_default=True)
@click.option("--min-leaf", type=int, default=5, show_default=True)
@click.option("--out", "out_path", type=click.Path(), required=True)
def train(examples_path, trees, depth, learning_rate, min_leaf, out_path):
    """Train the boosted-trees waiting-time regressor."""
    X, y = load_examples_csv(examples_path)
    hp = Hyperparams(trees, depth, learning_rate, min_leaf)
    model = fit_gbt(X, y, hp)
    save_model(model, out_path)
    report = evaluate(model, X, y)
    click.echo(f"trained on {report.n} examples; train mse={report.mse:.4f} "
               f"r2={report.r_squared:.4f}", err=True)


@main.command()
@click.option("--model", "model_path", type=click.Path(exists=True), required=True)
@click.option("--input", "input_path", type=click.Path(exists=True), required=True,
              help="examples CSV (the waiting_time column is ignored)")
@click.option("--row", type=int, default=0, show_default=True,
              help="row used for the local attribution/waterfall")
@click.option("--out", "out_path", type=click.Path(), required=True)
def explain(model_path, input_path, row, out_path):
    """Emit Attribution JSON plus waterfall and beeswarm CSVs."""
    model = load_model(model_path)
    X, _ = load_examples_csv(input_path)
    if not 0 <= row < X.shape[0]:
        raise click.ClickException(f"row {row} out of range (0..{X.shape[0] - 1})")
    attr = explain_mod.tree_shap(model, X[row])
    _dump_json(attr.to_json(), out_path)

    base = pathlib.Path(out_path)
    with open(base.with_suffix(".waterfall.csv"), "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["feature", "name", "value", "phi", "cumulative"])
        for r in explain_mod.waterfall(model, X[row]):
            writer.writerow([r.feature, r.name, repr(r.value), repr(r.phi),
                             repr(r.cumulative)])
    summary = explain_mod.global_summary(model, X)
    with open(base.with_suffix(".beeswarm.csv"), "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["row", "feature", "name", "feature_value", "phi"])
        for i in range(summary.points.shape[0]):
            for f in range(summary.points.shape[1]):
                writer.writerow([i, f, FEATURE_NAMES[f],
                                 repr(float(summary.feature_values[i, f])),
                                 repr(float(summary.points[i, f]))])
    click.echo(f"attribution written to {out_path} (+ .waterfall.csv, .beeswarm.csv)")


@main.command()
@click.option("--instances", "instances_dir", type=click.Path(exists=True), required=True)
@click.option("--strategy", type=click.Choice(list(harness.strategies.STRATEGY_KINDS)),
              required=True)
@click.option("--gamma", type=float, default=0.0, show_default=True)
@click.option("--model", "model_path", type=click.Path(exists=True), default=None)
@click.option("--ip-time-limit", type=float, default=10.0, show_default=True)
@click.option("--offline-time-limit", type=float, default=60.0, show_default=True)
@click.option("--out-dir", type=click.Path(), required=True)
def sim(instances_dir, strategy, gamma, model_path, ip_time_limit,
        offline_time_limit, out_dir):
    """Run one strategy over a directory of instances: per-patient CSV +
    JSON summary per instance."""
    out = pathlib.Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    model = load_model(model_path) if model_path else None
    for inst_path in sorted(pathlib.Path(instances_dir).glob("*.json")):
        inst = Instance.load(inst_path)
        result = harness.run_simulation(
            inst, strategy, gamma, model=model,
            ip_budget=ipcore.SolverBudget(time_limit=ip_time_limit),
            offline_budget=ipcore.SolverBudget(time_limit=offline_time_limit))
        _dump_json(result.to_json(), out / inst_path.name)
        with open(out / inst_path.with_suffix(".csv").name, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["id", "category", "waiting", "overdue", "start_day", "linac"])
            for r in sorted(result.records, key=lambda r: r.id):
                writer.writerow([r.id, r.category, r.waiting, r.overdue,
                                 r.start_day, r.linac])
    click.echo(f"results in {out}")


@main.command()
@click.option("--mode", type=click.Choice(["uncapped", "waiting"]), required=True)
@click.option("--linacs", type=int, required=True)
@click.option("--rate", type=float, required=True)
@click.option("--days", type=int, default=180, show_default=True)
@click.option("--seed", type=int, required=True)
@click.option("--pool", "pool_path", type=click.Path(exists=True), default=None)
@click.option("--out", "out_path", type=click.Path(), required=True)
def capsim(mode, linacs, rate, days, seed, pool_path, out_path):
    """Capacity simulations: weekly demand (uncapped) or waiting trend."""
    setting = InstanceSetting(linacs, rate)
    pool = _load_pool(pool_path)
    if mode == "uncapped":
        res = harness.capacity_sim_uncapped(setting, pool, days, seed)
    else:
        res = harness.capacity_sim_waiting(setting, pool, days, seed)
    _dump_json(res, out_path)
    click.echo(f"{mode} capacity simulation written to {out_path}")


def _load_instances(instances_dir):
    return [Instance.load(p) for p in sorted(pathlib.Path(instances_dir).glob("*.json"))]


@main.command()
@click.option("--instances", "instances_dir", type=click.Path(exists=True), required=True)
@click.option("--strategies", "strategy_csv", required=True,
              help="comma-separated strategy names")
@click.option("--gammas", default="0,0.05,0.10,0.15,0.20", show_default=True)
@click.option("--model", "model_path", type=click.Path(exists=True), default=None)
@click.option("--ip-time-limit", type=float, default=10.0, show_default=True)
@click.option("--out", "out_path", type=click.Path(), required=True)
def sweep(instances_dir, strategy_csv, gammas, model_path, ip_time_limit, out_path):
    """Reservation-rate sweep: strategies x gammas over an instance set."""
    names = [s.strip() for s in strategy_csv.split(",")]
    gamma_list = [float(g) for g in gammas.split(",")]
    model = load_model(model_path) if model_path else None
    reports = harness.reservation_sweep(
        _load_instances(instances_dir), names, gamma_list, model=model,
        ip_budget=ipcore.SolverBudget(time_limit=ip_time_limit))
    _dump_json({f"{g:g}": rep.to_json() for g, rep in reports.items()}, out_path)
    click.echo(f"sweep written to {out_path}")


@main.command()
@click.option("--instances", "instances_dir", type=click.Path(exists=True), required=True)
@click.option("--strategies", "strategy_csv", required=True)
@click.option("--gamma", type=float, default=0.0, show_default=True)
@click.option("--model", "model_path", type=click.Path(exists=True), default=None)
@click.option("--ip-time-limit", type=float, default=10.0, show_default=True)
@click.option("--offline-time-limit", type=float, default=60.0, show_default=True)
@click.option("--out", "out_path", type=click.Path(), required=True)
def compare(instances_dir, strategy_csv, gamma, model_path, ip_time_limit,
            offline_time_limit, out_path):
    """Strategy comparison with ANOVA and paired t-tests per category."""
    names = [s.strip() for s in strategy_csv.split(",")]
    model = load_model(model_path) if model_path else None
    report = harness.compare_strategies(
        _load_instances(instances_dir), names, gamma, model=model,
        ip_budget=ipcore.SolverBudget(time_limit=ip_time_limit),
        offline_budget=ipcore.SolverBudget(time_limit=offline_time_limit))
    _dump_json(report.to_json(), out_path)
    click.echo(f"comparison written to {out_path}")


@main.command()
@click.option("--scenario", "scenario_path", type=click.Path(exists=True), required=True)
@click.option("--model", "model_path", type=click.Path(exists=True), default=None)
@click.option("--gamma", type=float, default=0.0, show_default=True)
@click.option("--port", type=int, default=8000, show_default=True)
@click.option("--journal", "journal_path", type=click.Path(), default=None,
              help="append-only booking journal (replayed on startup)")
def serve(scenario_path, model_path, gamma, port, journal_path):
    """Serve the interactive scheduling API (and the console UI if built)."""
    import uvicorn

    from .domain import Scenario
    from .service import create_app

    with open(scenario_path) as fh:
        scenario = Scenario.from_json(json.load(fh))
    model = load_model(model_path) if model_path else None
    app = create_app(scenario, gamma=gamma, model=model, journal_path=journal_path)
    uvicorn.run(app, host="127.0.0.1", port=port)


if __name__ == "__main__":
    main()
