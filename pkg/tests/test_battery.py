"""Battery model tests: charge law, coulomb counting, heat, failure ladder."""

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from iemisim.battery import (
    BatteryHealth,
    BatteryState,
    OcvCurve,
    charge_current,
    step,
    terminal_voltage,
)

# 3000 mAh cell
CAPACITY_C = 10800.0


def _cell(soc=0.1, **kwargs) -> BatteryState:
    return BatteryState(capacity=CAPACITY_C, soc=soc, **kwargs)


class TestOcvCurve:
    def test_knot_interpolation(self):
        curve = OcvCurve(((0.0, 3.0), (0.1, 3.5), (0.9, 4.0), (1.0, 4.2)))
        assert curve(0.0) == pytest.approx(3.0)
        assert curve(0.1) == pytest.approx(3.5)
        assert curve(0.5) == pytest.approx(3.75)
        assert curve(1.0) == pytest.approx(4.2)

    def test_extrapolates_last_slope_above_full(self):
        curve = OcvCurve(((0.0, 3.0), (0.1, 3.5), (0.9, 4.0), (1.0, 4.2)))
        # last segment slope is 2 V per unit soc
        assert curve(1.5) == pytest.approx(5.2)
        assert curve(1.65) == pytest.approx(5.5)

    def test_rejects_non_monotone(self):
        with pytest.raises(ValueError):
            OcvCurve(((0.0, 3.0), (0.5, 2.9)))
        with pytest.raises(ValueError):
            OcvCurve(((0.5, 3.0), (0.5, 3.1)))


class TestChargeLaw:
    def test_equal_voltages_no_current(self):
        cell = _cell(soc=0.1)
        assert charge_current(3.5, cell) == 0.0

    def test_one_amp_point(self):
        # Derived by inverting the charge law by hand: 66 mV across 66 mOhm.
        cell = _cell(soc=0.1, r_esr=0.066)
        assert charge_current(3.566, cell) == pytest.approx(1.0, rel=1e-9)

    def test_halving_esr_doubles_current(self):
        a = charge_current(3.7, _cell(soc=0.1, r_esr=0.066))
        b = charge_current(3.7, _cell(soc=0.1, r_esr=0.033))
        assert b == pytest.approx(2.0 * a, rel=1e-12)

    def test_discharge_is_negative(self):
        assert charge_current(3.0, _cell(soc=0.1)) < 0.0

    def test_terminal_voltage(self):
        cell = _cell(soc=0.1, r_esr=0.066)
        assert terminal_voltage(cell, 0.0) == pytest.approx(3.5)
        assert terminal_voltage(cell, 1.0) == pytest.approx(3.566)

    @settings(max_examples=100, deadline=None)
    @given(i=st.floats(-5, 5), soc=st.floats(0.0, 1.2))
    def test_charge_and_terminal_are_inverses(self, i, soc):
        cell = _cell(soc=soc)
        assert charge_current(terminal_voltage(cell, i), cell) == pytest.approx(i, abs=1e-9)


class TestStep:
    def test_zero_current_only_cools(self):
        cell = _cell(soc=0.5, temperature=310.0)
        after = step(cell, 0.0, 1.0)
        assert after.soc == cell.soc
        assert cell.t_ambient < after.temperature < cell.temperature

    def test_coulomb_counting_one_hour(self):
        cell = _cell(soc=0.1)
        for _ in range(3600):
            cell = step(cell, 1.0, 1.0)
        assert cell.soc == pytest.approx(0.1 + 3600.0 / CAPACITY_C, rel=1e-9)
        assert cell.soc == pytest.approx(0.1 + 1.0 / 3.0, rel=1e-9)

    def test_energy_bookkeeping_without_dissipation(self):
        """With dissipation off, the temperature rise equals the integrated
        resistive heat over the thermal mass."""
        cell = _cell(soc=0.2, dissipation=0.0, thermal_mass=40.0, r_esr=0.066)
        i, dt, steps = 2.0, 1.0, 600
        for _ in range(steps):
            cell = step(cell, i, dt)
        expected = i * i * 0.066 * dt * steps / 40.0
        assert cell.temperature - 293.15 == pytest.approx(expected, rel=1e-6)

    def test_half_step_consistency(self):
        full = _cell(soc=0.2, temperature=300.0)
        halved = full
        for _ in range(60):
            full = step(full, 1.5, 1.0)
        for _ in range(120):
            halved = step(halved, 1.5, 0.5)
        assert halved.soc == pytest.approx(full.soc, rel=1e-12)
        assert halved.temperature == pytest.approx(full.temperature, rel=1e-4)

    def test_overvoltage_hold_destroys_cell(self):
        """Holding the terminal at 5.5 V drives the cell past its peak and
        into collapse: voltage climbs, the can bulges, failure follows."""
        cell = _cell(soc=1.0)
        held_at = 5.5
        peak_ocv = 0.0
        for _ in range(20000):
            i = max(0.0, min(charge_current(held_at, cell), 0.9))
            cell = step(cell, i, 1.0)
            peak_ocv = max(peak_ocv, cell.ocv())
            if cell.health is BatteryHealth.FAILED and cell.ocv() <= 0.05:
                break
        assert cell.health is BatteryHealth.FAILED
        assert peak_ocv > 5.2
        assert cell.ocv() <= 0.05
        assert cell.temperature > 343.15  # reached at least 70 C on the way

    def test_bulge_requires_sustained_overvoltage(self):
        cell = _cell(soc=1.06, tau_bulge=300.0)  # ocv 4.32, just over v_fail
        brief = step(cell, 0.0, 100.0)
        assert brief.health is BatteryHealth.NOMINAL
        sustained = cell
        for _ in range(4):
            sustained = step(sustained, 0.0, 100.0)
        assert sustained.health is BatteryHealth.BULGED

    def test_thermal_runaway_flag(self):
        cell = _cell(soc=0.5, temperature=394.0)
        after = step(cell, 0.0, 1.0)
        assert after.health is BatteryHealth.THERMAL_RUNAWAY

    def test_dt_must_be_positive(self):
        with pytest.raises(ValueError):
            step(_cell(), 1.0, 0.0)

    @settings(max_examples=100, deadline=None)
    @given(
        currents=st.lists(st.floats(-3, 8, allow_nan=False), min_size=1, max_size=40),
        start_temp=st.floats(280.0, 420.0),
    )
    def test_health_never_regresses(self, currents, start_temp):
        order = {
            BatteryHealth.NOMINAL: 0,
            BatteryHealth.BULGED: 1,
            BatteryHealth.FAILED: 2,
            BatteryHealth.THERMAL_RUNAWAY: 3,
        }
        cell = _cell(soc=0.9, temperature=start_temp)
        rank = order[cell.health]
        for i in currents:
            cell = step(cell, i, 30.0)
            assert order[cell.health] >= rank
            rank = order[cell.health]

    @settings(max_examples=100, deadline=None)
    @given(i=st.floats(0.0, 5.0), steps=st.integers(1, 50))
    def test_charging_never_decreases_soc(self, i, steps):
        cell = _cell(soc=0.3)
        for _ in range(steps):
            after = step(cell, i, 10.0)
            assert after.soc >= cell.soc
            cell = after
