"""HTTP facade over a live schedule for the interactive scheduling console.

Suggestions are pure reads; bookings commit through optimistic tokens
(suggestion id + the state version it was computed against).  All mutations
are serialized through one lock, so any number of HTTP clients stay safe.

Journal format: append-only JSON lines, one per committed booking, with the
patient record, start day and linac.  On startup an existing journal is
replayed to rebuild the schedule.
"""

from __future__ import annotations

import json
import threading
import time
import uuid
from dataclasses import dataclass, field

import numpy as np
from fastapi import Body, FastAPI, HTTPException

from .domain import CATEGORIES, Calendar, ObjectiveWeights, Patient, Scenario, \
    overdue_time, waiting_time
from .learning import feature_vector, predict_waiting
from .strategies import GREEDY_SCAN_OFFSET, EPS, ScheduleState, \
    WindowExhaustedError, first_eligible_day

__all__ = ["create_app", "Suggestion", "DEFAULT_TOKEN_TTL"]

DEFAULT_TOKEN_TTL = 600.0  # seconds a booking token stays valid


@dataclass
class Suggestion:
    id: str
    patient: Patient
    strategy: str
    start_day: int
    linac: int
    version: int           # state version the slot was computed against
    expires_at: float
    predicted_waiting: int | None = None
    attribution: object | None = None
    consumed: bool = False

    def to_json(self, calendar: Calendar, now: float) -> dict:
        return {
            "id": self.id,
            "patient": self.patient.to_json(),
            "strategy": self.strategy,
            "start_day": self.start_day,
            "linac": self.linac,
            "date": calendar.date(self.start_day).isoformat(),
            "waiting": waiting_time(self.patient, self.start_day),
            "overdue": overdue_time(self.patient, self.start_day),
            "predicted_waiting": self.predicted_waiting,
            "has_attribution": self.attribution is not None,
            "version": self.version,
            "expires_in": max(0.0, self.expires_at - now),
        }


def _parse_patient(rec) -> Patient:
    """Patient from a request payload; missing optional fields get defaults."""
    if not isinstance(rec, dict):
        raise HTTPException(422, "patient must be a JSON object")
    try:
        category = CATEGORIES[rec["category"]]
        admission_day = int(rec["admission_day"])
        return Patient(
            id=str(rec["id"]),
            category=category,
            admission_day=admission_day,
            admission_seq=int(rec.get("admission_seq", 0)),
            ready_day=int(rec.get("ready_day", admission_day)),
            due_day=int(rec.get("due_day", admission_day + category.deadline_days)),
            fractions=int(rec["fractions"]),
            fraction_blocks=int(rec["fraction_blocks"]),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise HTTPException(422, f"invalid patient: {exc}") from exc


@dataclass
class _ServiceState:
    state: ScheduleState
    model: object | None
    weights: ObjectiveWeights
    token_ttl: float
    journal_path: str | None
    calendar: Calendar = field(default_factory=Calendar)
    lock: threading.Lock = field(default_factory=threading.Lock)
    suggestions: dict = field(default_factory=dict)   # id -> Suggestion
    patients: dict = field(default_factory=dict)      # id -> Patient (booked)

    def current_day_for(self, patient: Patient) -> int:
        return max(self.state.current_day, patient.admission_day)

    def suggest(self, patient: Patient, strategy: str | None) -> Suggestion:
        """Pure slot computation against the live state (no mutation)."""
        if patient.id in self.state.schedule:
            raise HTTPException(422, f"patient {patient.id} is already booked")
        current = self.current_day_for(patient)
        predicted = None
        attribution = None
        if strategy is None:
            if patient.is_palliative:
                strategy = "earliest-eligible"
            elif self.model is not None:
                strategy = "prediction-based"
            else:
                strategy = "online-greedy"
        if strategy == "earliest-eligible" or patient.is_palliative:
            from_day = max(current, patient.ready_day)
            respect = False
            strategy = "earliest-eligible"
        elif strategy == "online-greedy":
            offset = GREEDY_SCAN_OFFSET[patient.category.label]
            from_day = max(patient.ready_day, patient.admission_day + offset, current)
            respect = True
        elif strategy == "prediction-based":
            if self.model is None:
                raise HTTPException(409, "no model loaded; prediction-based unavailable")
            from .explain import tree_shap
            x = feature_vector(self.state, patient)
            predicted = predict_waiting(self.model, x)
            attribution = tree_shap(self.model, x)
            from_day = max(current + predicted, patient.ready_day)
            respect = True
        else:
            raise HTTPException(422, f"unknown strategy {strategy!r}")
        try:
            day, linac = first_eligible_day(self.state, patient, from_day, respect)
        except WindowExhaustedError as exc:
            raise HTTPException(409, str(exc)) from exc
        sug = Suggestion(uuid.uuid4().hex, patient, strategy, day, linac,
                         self.state.version, time.time() + self.token_ttl,
                         predicted, attribution)
        self.suggestions[sug.id] = sug
        return sug

    def commit(self, patient: Patient, start_day: int, linac: int) -> None:
        self.state.current_day = max(self.state.current_day, patient.admission_day)
        self.state.book(patient, start_day, linac)
        self.patients[patient.id] = patient
        if self.journal_path:
            with open(self.journal_path, "a") as fh:
                fh.write(json.dumps({"patient": patient.to_json(),
                                     "start_day": start_day, "linac": linac},
                                    sort_keys=True) + "\n")

    def occupancy_digest(self, day_from: int, num_days: int) -> dict:
        scenario = self.state.scenario
        if day_from < 0 or num_days < 1 or day_from + num_days > scenario.horizon_days:
            raise HTTPException(
                416, f"range [{day_from}, {day_from + num_days}) outside horizon "
                     f"[0, {scenario.horizon_days})")
        cells = []
        for day in range(day_from, day_from + num_days):
            for linac in range(scenario.num_linacs):
                total = int(scenario.total_capacity[day, linac])
                cells.append({
                    "day": day,
                    "date": self.calendar.date(day).isoformat(),
                    "linac": linac,
                    "total": total,
                    "remaining": float(self.state.avail[day, linac]),
                    "reserved": self.state.gamma * total,
                })
        return {"from": day_from, "days": num_days,
                "version": self.state.version, "cells": cells}


def create_app(scenario: Scenario, gamma: float = 0.0, model=None,
               weights: ObjectiveWeights = ObjectiveWeights(),
               journal_path=None, token_ttl: float = DEFAULT_TOKEN_TTL) -> FastAPI:
    svc = _ServiceState(ScheduleState(scenario, gamma), model, weights,
                        token_ttl, str(journal_path) if journal_path else None)
    if journal_path:
        try:
            with open(journal_path) as fh:
                lines = fh.readlines()
        except FileNotFoundError:
            lines = []
        for line in lines:
            rec = json.loads(line)
            p = Patient.from_json(rec["patient"])
            svc.state.current_day = max(svc.state.current_day, p.admission_day)
            svc.state.book(p, rec["start_day"], rec["linac"])
            svc.patients[p.id] = p

    app = FastAPI(title="radsched service")
    app.state.service = svc

    @app.post("/patients:suggest")
    def suggest(payload: dict = Body(...)):
        patient = _parse_patient(payload.get("patient", payload))
        strategy = payload.get("strategy")
        with svc.lock:
            sug = svc.suggest(patient, strategy)
        return sug.to_json(svc.calendar, time.time())

    @app.post("/whatif")
    def whatif(payload: dict = Body(...)):
        patient = _parse_patient(payload.get("patient"))
        names = payload.get("strategies")
        if not isinstance(names, list) or not names:
            raise HTTPException(422, "strategies must be a non-empty list")
        out = {}
        with svc.lock:
            for name in names:
                try:
                    out[name] = svc.suggest(patient, name).to_json(
                        svc.calendar, time.time())
                except HTTPException as exc:
                    out[name] = {"error": exc.detail, "status": exc.status_code}
        return {"suggestions": out}

    @app.post("/bookings")
    def book(payload: dict = Body(...)):
        with svc.lock:
            if "token" in payload:
                sug = svc.suggestions.get(payload["token"])
                if sug is None:
                    raise HTTPException(404, "unknown booking token")
                if sug.consumed:
                    raise HTTPException(410, "booking token already used")
                if time.time() > sug.expires_at:
                    raise HTTPException(410, "booking token expired")
                if sug.version != svc.state.version:
                    fresh = svc.suggest(sug.patient, sug.strategy)
                    raise HTTPException(409, {
                        "error": "capacity changed since the suggestion",
                        "fresh_suggestion": fresh.to_json(svc.calendar, time.time()),
                    })
                patient, day, linac = sug.patient, sug.start_day, sug.linac
                sug.consumed = True
            elif payload.get("force"):
                patient = _parse_patient(payload.get("patient"))
                if patient.id in svc.state.schedule:
                    raise HTTPException(422, f"patient {patient.id} is already booked")
                try:
                    day, linac = int(payload["start_day"]), int(payload["linac"])
                except (KeyError, TypeError, ValueError) as exc:
                    raise HTTPException(422, f"invalid forced slot: {exc}") from exc
                if day < patient.ready_day:
                    raise HTTPException(
                        422, f"start day {day} before ready day {patient.ready_day}")
                if not 0 <= linac < svc.state.scenario.num_linacs:
                    raise HTTPException(422, f"unknown linac {linac}")
                end = day + patient.fractions
                if end > svc.state.scenario.horizon_days:
                    raise HTTPException(409, "course does not fit within the horizon")
                room = (svc.state.avail if patient.is_palliative
                        else svc.state.cur_room)
                if not np.all(room[day:end, linac] >= patient.fraction_blocks - EPS):
                    raise HTTPException(409, "insufficient capacity on the forced slot")
            else:
                raise HTTPException(422, "provide a booking token or a forced slot")
            svc.commit(patient, day, linac)
            digest = svc.occupancy_digest(day, min(
                patient.fractions, svc.state.scenario.horizon_days - day))
        return {"patient_id": patient.id, "start_day": day, "linac": linac,
                "version": svc.state.version, "occupancy": digest}

    @app.get("/occupancy")
    def occupancy(day_from: int = 0, days: int = 50):
        with svc.lock:
            return svc.occupancy_digest(day_from, days)

    @app.get("/explanations/{suggestion_id}")
    def explanation(suggestion_id: str):
        with svc.lock:
            sug = svc.suggestions.get(suggestion_id)
            if sug is None:
                raise HTTPException(404, "unknown suggestion id")
            if sug.attribution is None:
                raise HTTPException(409, "suggestion was not model-backed")
        attr = sug.attribution
        rows = []
        cumulative = attr.base_value
        order = sorted(range(attr.phis.shape[0]),
                       key=lambda i: (-abs(attr.phis[i]), i))
        from .learning import FEATURE_NAMES
        for i in order:
            if attr.phis[i] == 0.0:
                continue
            cumulative += attr.phis[i]
            rows.append({"feature": int(i), "name": FEATURE_NAMES[i],
                         "phi": float(attr.phis[i]), "cumulative": float(cumulative)})
        return {"suggestion_id": suggestion_id,
                "attribution": attr.to_json(),
                "waterfall": rows}

    try:
        from fastapi.staticfiles import StaticFiles
        import pathlib
        bundle = pathlib.Path(__file__).resolve().parents[2] / "frontend" / "dist"
        if bundle.is_dir():
            app.mount("/ui", StaticFiles(directory=str(bundle), html=True), name="ui")
    except ImportError:  # pragma: no cover
        pass

    return app
