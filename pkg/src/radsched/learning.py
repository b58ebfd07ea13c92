"""Training-example extraction, waiting-time regression and evaluation.

A feature vector is the 50-day fleet capacity outlook at the patient's
admission moment plus four treatment-plan features (offsets relative to the
admission day, so shifting a whole instance in time changes nothing).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .domain import Schedule, waiting_time
from .gbt import GbtModel, Hyperparams, fit_gbt, predict_raw
from .strategies import ScheduleState

__all__ = [
    "CAPACITY_HORIZON", "NUM_FEATURES", "FEATURE_NAMES",
    "feature_vector", "present_capacity_vector", "make_training_examples",
    "train_on_examples", "predict_waiting", "EvalReport", "evaluate",
    "feature_correlation", "OlsBaseline", "fit_ols",
    "save_examples_csv", "load_examples_csv",
]

CAPACITY_HORIZON = 50
NUM_FEATURES = CAPACITY_HORIZON + 4

FEATURE_NAMES = tuple(
    [f"capacity_d{d:02d}" for d in range(CAPACITY_HORIZON)]
    + ["ready_offset", "due_offset", "fractions", "fraction_blocks"])


def present_capacity_vector(state: ScheduleState, day: int) -> np.ndarray:
    """Fleet-summed remaining capacity for days ``day .. day+49``."""
    return state.fleet_remaining(day, CAPACITY_HORIZON).astype(np.float64)


def feature_vector(state: ScheduleState, patient) -> np.ndarray:
    x = np.empty(NUM_FEATURES)
    x[:CAPACITY_HORIZON] = present_capacity_vector(state, patient.admission_day)
    x[CAPACITY_HORIZON] = patient.ready_day - patient.admission_day
    x[CAPACITY_HORIZON + 1] = patient.due_day - patient.admission_day
    x[CAPACITY_HORIZON + 2] = patient.fractions
    x[CAPACITY_HORIZON + 3] = patient.fraction_blocks
    return x


def make_training_examples(instance, offline_schedule: Schedule):
    """Replay arrivals against the offline schedule, emitting one example
    per curative: the capacity state the moment the patient was admitted
    and their waiting time in the offline solution.

    Every patient's offline appointments (any category) update the state
    before the next arrival is processed.
    """
    X, y = [], []
    state = ScheduleState(instance.scenario, gamma=0.0)
    for day, patients in instance.flow.iter_days():
        state.current_day = day
        for p in patients:
            if p.id not in offline_schedule.assignments:
                raise ValueError(f"patient {p.id} missing from the offline schedule")
            start, linac = offline_schedule.assignments[p.id]
            if not p.is_palliative:
                X.append(feature_vector(state, p))
                y.append(float(waiting_time(p, start)))
            state.book(p, start, linac)
    if X:
        return np.vstack(X), np.asarray(y)
    return np.empty((0, NUM_FEATURES)), np.empty(0)


def train_on_examples(X, y, hyperparams: Hyperparams = Hyperparams()) -> GbtModel:
    return fit_gbt(X, y, hyperparams)


def predict_waiting(model: GbtModel, x) -> int:
    """Predicted waiting in whole business days: clamp at 0, then round
    half away from zero."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (NUM_FEATURES,):
        raise ValueError(f"feature vector must have length {NUM_FEATURES}, got {x.shape}")
    raw = float(predict_raw(model, x[None, :])[0])
    return int(math.floor(max(0.0, raw) + 0.5))


@dataclass(frozen=True)
class EvalReport:
    mse: float
    mae: float
    r_squared: float
    n: int

    def to_json(self):
        return {"mse": self.mse, "mae": self.mae, "r_squared": self.r_squared, "n": self.n}


def evaluate(model, X, y) -> EvalReport:
    y = np.asarray(y, dtype=np.float64)
    if y.shape[0] == 0:
        raise ValueError("cannot evaluate on an empty example set")
    pred = predict_raw(model, X) if isinstance(model, GbtModel) else model.predict(X)
    err = y - pred
    mse = float(np.mean(err ** 2))
    mae = float(np.mean(np.abs(err)))
    ss_res = float(np.sum(err ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    if ss_tot == 0.0:
        r2 = 1.0 if ss_res == 0.0 else 0.0
    else:
        r2 = 1.0 - ss_res / ss_tot
    return EvalReport(mse, mae, r2, int(y.shape[0]))


def feature_correlation(X):
    """Pearson correlation matrix; zero-variance features get 0 rows/cols.

    Returns (matrix, zero_variance_flags).
    """
    X = np.asarray(X, dtype=np.float64)
    if X.shape[0] < 2:
        raise ValueError("need at least 2 examples for correlations")
    std = X.std(axis=0)
    flat = std == 0.0
    safe = np.where(flat, 1.0, std)
    Z = (X - X.mean(axis=0)) / safe
    corr = Z.T @ Z / X.shape[0]
    corr[flat, :] = 0.0
    corr[:, flat] = 0.0
    np.fill_diagonal(corr, np.where(flat, 0.0, 1.0))
    return corr, flat


@dataclass
class OlsBaseline:
    """Ordinary least-squares sanity baseline (intercept + linear weights)."""

    coef: np.ndarray
    intercept: float

    def predict(self, X):
        return np.atleast_2d(X) @ self.coef + self.intercept


def fit_ols(X, y) -> OlsBaseline:
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    A = np.hstack([X, np.ones((X.shape[0], 1))])
    sol, *_ = np.linalg.lstsq(A, y, rcond=None)
    return OlsBaseline(sol[:-1], float(sol[-1]))


def save_examples_csv(path, X, y) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(list(FEATURE_NAMES) + ["waiting_time"])
        for row, label in zip(X, y):
            writer.writerow([repr(float(v)) for v in row] + [repr(float(label))])


def load_examples_csv(path):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != list(FEATURE_NAMES) + ["waiting_time"]:
            raise ValueError(f"{path}: unexpected example-file header")
        rows = [[float(v) for v in row] for row in reader]
    if not rows:
        return np.empty((0, NUM_FEATURES)), np.empty(0)
    arr = np.asarray(rows)
    return arr[:, :-1], arr[:, -1]
