import concurrent.futures
import json

import numpy as np
import pytest
from fastapi.testclient import TestClient

from radsched.domain import Scenario, check_schedule, Patient
from radsched.service import create_app


def payload(pid, category="P2", admission_day=0, **kw):
    base = {"id": pid, "category": category, "admission_day": admission_day,
            "fractions": 2, "fraction_blocks": 3}
    base.update(kw)
    return base


@pytest.fixture
def client(small_model):
    app = create_app(Scenario.empty(2, 120), gamma=0.1, model=small_model)
    return TestClient(app)


class TestSuggest:
    def test_palliative_on_empty_fleet_starts_at_ready_day(self, client):
        r = client.post("/patients:suggest", json={"patient": payload("a")})
        assert r.status_code == 200
        doc = r.json()
        assert doc["start_day"] == 0
        assert doc["strategy"] == "earliest-eligible"
        assert doc["predicted_waiting"] is None

    def test_curative_is_model_backed(self, client):
        r = client.post("/patients:suggest", json={"patient": payload(
            "c", category="P4", ready_day=5, fractions=5, fraction_blocks=5)})
        doc = r.json()
        assert doc["strategy"] == "prediction-based"
        assert doc["has_attribution"]
        assert doc["start_day"] >= 5

    def test_strategy_override(self, client):
        r = client.post("/patients:suggest", json={
            "patient": payload("c", category="P4", ready_day=5, fractions=5,
                               fraction_blocks=5),
            "strategy": "online-greedy"})
        doc = r.json()
        assert doc["strategy"] == "online-greedy"
        assert doc["start_day"] >= 10   # two-week scan offset for P4

    def test_suggest_is_pure(self, client):
        body = {"patient": payload("c", category="P4", ready_day=5,
                                   fractions=5, fraction_blocks=5)}
        slots = {(client.post("/patients:suggest", json=body).json()["start_day"],
                  client.post("/patients:suggest", json=body).json()["linac"])
                 for _ in range(5)}
        assert len(slots) == 1

    def test_invalid_patient_422(self, client):
        r = client.post("/patients:suggest", json={"patient": payload(
            "x", fractions=0)})
        assert r.status_code == 422

    def test_unknown_strategy_422(self, client):
        r = client.post("/patients:suggest", json={
            "patient": payload("c", category="P4", ready_day=5),
            "strategy": "psychic"})
        assert r.status_code == 422


class TestBooking:
    def _suggest(self, client, pid, **kw):
        return client.post("/patients:suggest",
                           json={"patient": payload(pid, **kw)}).json()

    def test_round_trip_keeps_state_feasible(self, client):
        sug = self._suggest(client, "a")
        r = client.post("/bookings", json={"token": sug["id"]})
        assert r.status_code == 200
        svc = client.app.state.service
        patients = list(svc.patients.values())
        assert check_schedule(svc.state.schedule, patients,
                              svc.state.scenario, gamma=0.1) == []

    def test_token_consumed(self, client):
        sug = self._suggest(client, "a")
        assert client.post("/bookings", json={"token": sug["id"]}).status_code == 200
        assert client.post("/bookings", json={"token": sug["id"]}).status_code == 410

    def test_unknown_token_404(self, client):
        assert client.post("/bookings", json={"token": "nope"}).status_code == 404

    def test_version_conflict_returns_fresh_suggestion(self, client):
        s1 = self._suggest(client, "a")
        s2 = self._suggest(client, "b")
        assert client.post("/bookings", json={"token": s2["id"]}).status_code == 200
        r = client.post("/bookings", json={"token": s1["id"]})
        assert r.status_code == 409
        assert "fresh_suggestion" in r.json()["detail"]

    def test_race_for_last_capacity(self, small_model):
        """Two tokens, one slot: the loser gets a conflict, never an oversell."""
        horizon = 60
        total = np.full((horizon, 1), 120, dtype=np.int64)
        committed = total.copy()
        committed[10] -= 3   # exactly one 3-block single-fraction slot left
        app = create_app(Scenario(1, horizon, total, committed), gamma=0.0)
        client = TestClient(app)
        s1 = self._suggest(client, "a", fractions=1)
        s2 = self._suggest(client, "b", fractions=1)
        assert s1["start_day"] == s2["start_day"] == 10
        assert client.post("/bookings", json={"token": s1["id"]}).status_code == 200
        assert client.post("/bookings", json={"token": s2["id"]}).status_code == 409

    def test_rebooking_same_patient_422(self, client):
        sug = self._suggest(client, "a")
        client.post("/bookings", json={"token": sug["id"]})
        r = client.post("/patients:suggest", json={"patient": payload("a")})
        assert r.status_code == 422

    def test_expired_token_410(self, small_model):
        app = create_app(Scenario.empty(1, 60), gamma=0.0, token_ttl=-1.0)
        client = TestClient(app)
        sug = self._suggest(client, "a")
        assert client.post("/bookings", json={"token": sug["id"]}).status_code == 410

    def test_forced_booking(self, client):
        r = client.post("/bookings", json={
            "patient": payload("f"), "start_day": 3, "linac": 1, "force": True})
        assert r.status_code == 200
        assert r.json()["start_day"] == 3

    def test_forced_booking_feasibility_enforced(self, client):
        r = client.post("/bookings", json={
            "patient": payload("f", category="P4", ready_day=5, fractions=3,
                               fraction_blocks=10),
            "start_day": 2, "linac": 0, "force": True})
        assert r.status_code == 422   # before ready day


class TestOccupancy:
    def test_empty_state_all_remaining(self, client):
        doc = client.get("/occupancy", params={"day_from": 0, "days": 3}).json()
        assert len(doc["cells"]) == 6
        assert all(c["remaining"] == 120 for c in doc["cells"])
        assert all(c["reserved"] == pytest.approx(12.0) for c in doc["cells"])

    def test_booking_delta(self, client):
        before = client.get("/occupancy", params={"day_from": 0, "days": 10}).json()
        sug = client.post("/patients:suggest", json={"patient": payload(
            "a", fractions=2, fraction_blocks=7)}).json()
        client.post("/bookings", json={"token": sug["id"]})
        after = client.get("/occupancy", params={"day_from": 0, "days": 10}).json()
        deltas = [(b["remaining"] - a["remaining"])
                  for b, a in zip(before["cells"], after["cells"])]
        assert sorted(deltas) == [0.0] * 18 + [7.0, 7.0]

    def test_range_past_horizon_416(self, client):
        r = client.get("/occupancy", params={"day_from": 115, "days": 10})
        assert r.status_code == 416


class TestExplanations:
    def test_model_backed_explanation(self, client):
        sug = client.post("/patients:suggest", json={"patient": payload(
            "c", category="P4", ready_day=5, fractions=5, fraction_blocks=5)}).json()
        doc = client.get(f"/explanations/{sug['id']}").json()
        attr = doc["attribution"]
        assert abs(attr["base_value"] + sum(attr["phis"])
                   - attr["prediction"]) < 1e-9
        if doc["waterfall"]:
            assert doc["waterfall"][-1]["cumulative"] == pytest.approx(
                attr["prediction"], abs=1e-9)

    def test_greedy_suggestion_409(self, client):
        sug = client.post("/patients:suggest",
                          json={"patient": payload("a")}).json()
        assert client.get(f"/explanations/{sug['id']}").status_code == 409

    def test_unknown_id_404(self, client):
        assert client.get("/explanations/missing").status_code == 404


class TestWhatIf:
    def test_single_strategy_matches_suggest(self, client):
        body = payload("c", category="P4", ready_day=5, fractions=5,
                       fraction_blocks=5)
        direct = client.post("/patients:suggest", json={"patient": body}).json()
        wi = client.post("/whatif", json={
            "patient": body, "strategies": ["prediction-based"]}).json()
        sug = wi["suggestions"]["prediction-based"]
        assert (sug["start_day"], sug["linac"]) == (direct["start_day"],
                                                    direct["linac"])

    def test_does_not_mutate_state(self, client):
        body = payload("c", category="P4", ready_day=5, fractions=5,
                       fraction_blocks=5)
        svc = client.app.state.service
        before = svc.state.avail.tobytes()
        client.post("/whatif", json={
            "patient": body,
            "strategies": ["prediction-based", "online-greedy",
                           "earliest-eligible"]})
        assert svc.state.avail.tobytes() == before
        assert svc.state.version == 0

    def test_per_strategy_errors_reported(self, client):
        wi = client.post("/whatif", json={
            "patient": payload("c", category="P4", ready_day=5),
            "strategies": ["online-greedy", "psychic"]}).json()
        assert "error" in wi["suggestions"]["psychic"]
        assert "start_day" in wi["suggestions"]["online-greedy"]


class TestJournal:
    def test_replay_restores_state(self, tmp_path, small_model):
        journal = tmp_path / "journal.jsonl"
        scenario = Scenario.empty(2, 120)
        c1 = TestClient(create_app(scenario, gamma=0.1, journal_path=journal))
        sug = c1.post("/patients:suggest", json={"patient": payload("a")}).json()
        c1.post("/bookings", json={"token": sug["id"]})
        assert journal.exists() and len(journal.read_text().splitlines()) == 1

        c2 = TestClient(create_app(scenario, gamma=0.1, journal_path=journal))
        svc = c2.app.state.service
        assert "a" in svc.state.schedule
        r = c2.post("/patients:suggest", json={"patient": payload("a")})
        assert r.status_code == 422   # still booked after restart


class TestConcurrency:
    def test_hammer_no_oversell(self, small_model):
        """Concurrent suggest/book loops: conflicts allowed, oversell not."""
        app = create_app(Scenario.empty(2, 200), gamma=0.1, model=small_model)
        client = TestClient(app)

        def loop(worker):
            booked = 0
            for i in range(6):
                pid = f"w{worker}-{i}"
                r = client.post("/patients:suggest", json={"patient": payload(
                    pid, category="P3", ready_day=5, fractions=3,
                    fraction_blocks=8)})
                if r.status_code != 200:
                    continue
                b = client.post("/bookings", json={"token": r.json()["id"]})
                if b.status_code == 200:
                    booked += 1
            return booked

        with concurrent.futures.ThreadPoolExecutor(max_workers=8) as pool:
            total = sum(pool.map(loop, range(8)))
        svc = app.state.service
        assert total == len(svc.state.schedule.assignments) > 0
        patients = list(svc.patients.values())
        assert check_schedule(svc.state.schedule, patients,
                              svc.state.scenario, gamma=0.1) == []
