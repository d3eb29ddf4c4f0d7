"""Charger state machine tests: phase sequencing on measured values."""

import pytest

from iemisim.charger import (
    CONSTANT_CURRENT,
    CONSTANT_VOLTAGE,
    IDLE,
    PRECHARGE,
    ChargerConfig,
    OverCurrent,
    OverTemperature,
    OverVoltage,
    PhaseName,
    charger_step,
    faulted,
)

AMBIENT = 293.15


def _cfg(**kwargs) -> ChargerConfig:
    defaults = dict(
        i_precharge=0.1,
        v_precharge_threshold=3.0,
        i_cc=1.0,
        v_cv=4.2,
        i_terminate=0.1,
        cells_in_series=2,
    )
    defaults.update(kwargs)
    return ChargerConfig(**defaults)


class TestConfig:
    def test_invalid_orderings_rejected(self):
        with pytest.raises(ValueError):
            _cfg(i_precharge=2.0)  # above i_cc
        with pytest.raises(ValueError):
            _cfg(i_terminate=1.0)  # not below i_cc
        with pytest.raises(ValueError):
            _cfg(v_precharge_threshold=5.0)  # above v_cv
        with pytest.raises(ValueError):
            _cfg(cells_in_series=0)


class TestPhaseLogic:
    def test_idle_with_discharged_pack_enters_cc(self):
        # 7.0 V across two cells sits above the 3.0 V/cell precharge
        # threshold, so charging starts straight in constant current.
        phase, command = charger_step(_cfg(), IDLE, 7.0, 0.0, AMBIENT)
        assert phase is CONSTANT_CURRENT
        assert command.v_limit_effective == pytest.approx(8.4)
        assert command.i_limit_effective == pytest.approx(1.0)

    def test_idle_with_deeply_depleted_pack_precharges(self):
        phase, command = charger_step(_cfg(), IDLE, 4.0, 0.0, AMBIENT)
        assert phase is PRECHARGE
        assert command.i_limit_effective == pytest.approx(0.1)

    def test_precharge_advances_at_threshold(self):
        phase, command = charger_step(_cfg(), PRECHARGE, 6.0, 0.1, AMBIENT)
        assert phase is CONSTANT_CURRENT
        phase, command = charger_step(_cfg(), PRECHARGE, 5.9, 0.1, AMBIENT)
        assert phase is PRECHARGE

    def test_cc_advances_to_cv_on_measured_voltage(self):
        phase, _ = charger_step(_cfg(), CONSTANT_CURRENT, 8.4, 1.0, AMBIENT)
        assert phase is CONSTANT_VOLTAGE
        phase, _ = charger_step(_cfg(), CONSTANT_CURRENT, 8.39, 1.0, AMBIENT)
        assert phase is CONSTANT_CURRENT

    def test_cv_terminates_at_cutoff_current(self):
        phase, command = charger_step(_cfg(), CONSTANT_VOLTAGE, 8.4, 0.1, AMBIENT)
        assert phase.name is PhaseName.DONE
        assert command.v_limit_effective == 0.0
        phase, _ = charger_step(_cfg(), CONSTANT_VOLTAGE, 8.4, 0.11, AMBIENT)
        assert phase is CONSTANT_VOLTAGE

    def test_attacked_voltage_defers_cv_transition(self):
        """A -1.3 V sensor offset makes a real 5.5 V pack read 4.2 V per
        cell-pair equivalent; the FSM acts on the measured value only."""
        cfg = _cfg(cells_in_series=1)
        # real 5.5 V, measured 4.2 V: transition happens on the measurement
        phase, _ = charger_step(cfg, CONSTANT_CURRENT, 4.2, 0.9, AMBIENT)
        assert phase is CONSTANT_VOLTAGE
        phase, _ = charger_step(cfg, CONSTANT_CURRENT, 4.19, 0.9, AMBIENT)
        assert phase is CONSTANT_CURRENT

    def test_terminal_phases_are_latched(self):
        done, _ = charger_step(_cfg(), CONSTANT_VOLTAGE, 8.4, 0.05, AMBIENT)
        again, command = charger_step(_cfg(), done, 2.0, 5.0, AMBIENT)
        assert again is done
        assert command.i_limit_effective == 0.0
        fault = faulted("over_voltage")
        still, _ = charger_step(_cfg(), fault, 7.0, 0.5, AMBIENT)
        assert still == fault


class TestProtections:
    def test_over_voltage_faults_on_measured(self):
        cfg = _cfg(protections=(OverVoltage(9.0),))
        phase, command = charger_step(cfg, CONSTANT_CURRENT, 9.5, 1.0, AMBIENT)
        assert phase.name is PhaseName.FAULTED
        assert phase.fault_reason == "over_voltage"
        assert command.v_limit_effective == 0.0

    def test_over_current_and_temperature(self):
        cfg = _cfg(protections=(OverCurrent(2.0), OverTemperature(330.0)))
        phase, _ = charger_step(cfg, CONSTANT_CURRENT, 7.0, 2.5, AMBIENT)
        assert phase.fault_reason == "over_current"
        phase, _ = charger_step(cfg, CONSTANT_CURRENT, 7.0, 1.0, 340.0)
        assert phase.fault_reason == "over_temperature"

    def test_protections_do_not_fire_in_range(self):
        cfg = _cfg(protections=(OverVoltage(9.0), OverCurrent(2.0)))
        phase, _ = charger_step(cfg, CONSTANT_CURRENT, 8.0, 1.0, AMBIENT)
        assert phase is CONSTANT_CURRENT
