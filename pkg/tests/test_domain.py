import datetime as dt
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from radsched.domain import (CATEGORIES, Calendar, InfeasibleAssignmentError,
                             ObjectiveWeights, Patient, Scenario, Schedule,
                             UnassignedPatientsError, check_schedule,
                             overdue_time, patient_cost, schedule_cost,
                             waiting_time)
from conftest import make_patient


class TestCalendar:
    def test_epoch_is_day_zero(self):
        cal = Calendar()
        assert cal.date(0) == dt.date(2024, 1, 1)
        assert cal.index(dt.date(2024, 1, 1)) == 0

    def test_weekend_skipped(self):
        cal = Calendar()
        assert cal.date(4) == dt.date(2024, 1, 5)   # Friday
        assert cal.date(5) == dt.date(2024, 1, 8)   # next Monday

    def test_weekend_date_rejected(self):
        with pytest.raises(ValueError):
            Calendar().index(dt.date(2024, 1, 6))

    def test_midweek_epoch(self):
        cal = Calendar(epoch=dt.date(2024, 1, 3))   # a Wednesday
        assert cal.date(2) == dt.date(2024, 1, 5)
        assert cal.date(3) == dt.date(2024, 1, 8)

    @given(st.integers(min_value=0, max_value=5000))
    def test_round_trip(self, index):
        cal = Calendar()
        date = cal.date(index)
        assert date.weekday() < 5
        assert cal.index(date) == index

    @given(st.integers(min_value=0, max_value=2000))
    def test_dates_strictly_increase(self, index):
        cal = Calendar()
        assert cal.date(index + 1) > cal.date(index)


class TestPatient:
    def test_valid_patient(self):
        p = make_patient()
        assert p.due_day == 28 and not p.is_palliative

    def test_ready_before_admission_rejected(self):
        with pytest.raises(ValueError, match="ready_day"):
            Patient("x", CATEGORIES["P2"], 5, 0, 4, 8, 2, 3)

    def test_due_day_must_match_category(self):
        with pytest.raises(ValueError, match="due_day"):
            Patient("x", CATEGORIES["P2"], 5, 0, 5, 9, 2, 3)

    @pytest.mark.parametrize("fractions", [0, 46])
    def test_fractions_bounds(self, fractions):
        with pytest.raises(ValueError, match="fractions"):
            make_patient(fractions=fractions)

    @pytest.mark.parametrize("blocks", [1, 34])
    def test_blocks_bounds(self, blocks):
        with pytest.raises(ValueError, match="fraction_blocks"):
            make_patient(fraction_blocks=blocks)

    def test_json_round_trip(self):
        p = make_patient(category="P2", admission_day=7, ready_offset=1)
        assert Patient.from_json(p.to_json()) == p


class TestCosts:
    def test_waiting_is_days_since_admission(self):
        p = make_patient(category="P3", admission_day=10, ready_offset=5)
        assert waiting_time(p, 17) == 7

    def test_start_before_ready_rejected(self):
        p = make_patient(category="P3", admission_day=0, ready_offset=5)
        with pytest.raises(InfeasibleAssignmentError):
            waiting_time(p, 4)

    def test_overdue_clamped_at_zero(self):
        p = make_patient(category="P3")
        assert overdue_time(p, 10) == 0
        assert overdue_time(p, 16) == 2

    def test_cost_zero_at_ready_day(self):
        # starting the day the patient becomes ready incurs no penalty at all
        p = make_patient(category="P3", ready_offset=5)
        assert patient_cost(p, 5, ObjectiveWeights()) == 0.0

    def test_cost_frozen_value(self):
        # P3, a=0, r=5, d=14, t=16: 16*ln17 + 100*2*ln3
        p = make_patient(category="P3", ready_offset=5)
        assert patient_cost(p, 16, ObjectiveWeights()) == pytest.approx(
            265.0538712385214, abs=1e-12)

    def test_cost_one_day_wait(self):
        p = make_patient(category="P2", admission_day=3, ready_offset=0,
                         fractions=2, fraction_blocks=3)
        assert patient_cost(p, 4, ObjectiveWeights()) == pytest.approx(
            math.log(2), abs=1e-15)

    def test_cost_monotone_in_start_day(self):
        p = make_patient(category="P4", ready_offset=5)
        w = ObjectiveWeights()
        costs = [patient_cost(p, t, w) for t in range(5, 60)]
        assert all(b >= a for a, b in zip(costs, costs[1:]))

    def test_schedule_cost_requires_all_patients(self):
        p = make_patient()
        with pytest.raises(UnassignedPatientsError):
            schedule_cost(Schedule(), [p], ObjectiveWeights())

    def test_weights_validation(self):
        with pytest.raises(ValueError):
            ObjectiveWeights(waiting=2.0, overdue=1.0)


class TestScenario:
    def test_empty_scenario(self):
        s = Scenario.empty(2, 10)
        assert s.available.sum() == 2 * 10 * 120

    def test_committed_bounds_checked(self):
        total = np.full((5, 1), 120, dtype=np.int64)
        bad = np.full((5, 1), 121, dtype=np.int64)
        with pytest.raises(ValueError):
            Scenario(1, 5, total, bad)

    def test_json_round_trip(self):
        s = Scenario.empty(2, 6, reservation=0.1)
        s2 = Scenario.from_json(s.to_json())
        assert s2.reservation == 0.1
        np.testing.assert_array_equal(s2.total_capacity, s.total_capacity)


class TestCheckSchedule:
    def _tiny(self):
        return Scenario.empty(1, 20)

    def test_feasible_schedule_clean(self):
        p = make_patient(category="P2", fractions=2, fraction_blocks=3,
                         ready_offset=0)
        sched = Schedule()
        sched.assign(p.id, 0, 0)
        assert check_schedule(sched, [p], self._tiny()) == []

    def test_ready_date_violation(self):
        p = make_patient(category="P3", ready_offset=5)
        sched = Schedule()
        sched.assign(p.id, 3, 0)
        kinds = [v.kind for v in check_schedule(sched, [p], self._tiny())]
        assert "ready_date" in kinds

    def test_capacity_violation(self):
        patients = [make_patient(pid=f"p{i}", category="P2", ready_offset=0,
                                 fractions=1, fraction_blocks=33, seq=i)
                    for i in range(4)]
        sched = Schedule()
        for p in patients:
            sched.assign(p.id, 0, 0)   # 132 blocks on a 120-block day
        kinds = [v.kind for v in check_schedule(sched, patients, self._tiny())]
        assert "capacity" in kinds

    def test_reservation_violation_only_for_curatives(self):
        cur = make_patient(pid="c", category="P3", ready_offset=5,
                           fractions=1, fraction_blocks=20)
        sched = Schedule()
        sched.assign(cur.id, 5, 0)
        scenario = self._tiny()
        # gamma=0.9 leaves only 12 curative blocks; 20 violate the reservation
        assert any(v.kind == "reservation"
                   for v in check_schedule(sched, [cur], scenario, gamma=0.9))
        pal = make_patient(pid="q", category="P2", ready_offset=0,
                           fractions=1, fraction_blocks=20)
        sched2 = Schedule()
        sched2.assign(pal.id, 0, 0)
        assert check_schedule(sched2, [pal], scenario, gamma=0.9) == []

    def test_horizon_violation(self):
        p = make_patient(category="P4", ready_offset=5, fractions=30)
        sched = Schedule()
        sched.assign(p.id, 5, 0)
        kinds = [v.kind for v in check_schedule(sched, [p], self._tiny())]
        assert "horizon" in kinds

    def test_double_assignment_rejected(self):
        sched = Schedule()
        sched.assign("a", 0, 0)
        with pytest.raises(ValueError, match="already assigned"):
            sched.assign("a", 1, 0)
