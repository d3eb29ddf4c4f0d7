"""Scenario engine tests: sweeps, timelines, determinism, calibration."""

from dataclasses import replace

import pytest

from iemisim.battery import BatteryState
from iemisim.charger import ChargerConfig
from iemisim.core import (
    AdjustableDivider,
    AttackSource,
    BatteryLoad,
    BatterySimRig,
    ConstantResistance,
    ConstantVoltage,
    ConverterSpec,
    CurrentSense,
    FixedDividerAdjustableRef,
    Topology,
)
from iemisim.coupling import CouplingProfile, InjectionPoint, ResonancePeak
from iemisim.equilibrium import solve_operating_point
from iemisim.protection import LowPassFilterModel
from iemisim.scenario import (
    AttackStep,
    CalibrationTarget,
    CalibrationUnreachable,
    Scenario,
    SweepSpec,
    SweepVariable,
    calibrate_scenario,
    channel_offsets,
    run_charging_attack,
    run_distance_sweep,
    run_frequency_sweep,
    run_power_sweep,
    run_timeline,
    solve_record,
)


def _divider_scenario(points=101, kappa=-0.0140625, load_r=100.0) -> Scenario:
    converter = ConverterSpec(
        topology=Topology.SEPIC,
        v_in=12.0,
        voltage_network=AdjustableDivider(beta=1.25 / 12.0, v_ref=1.25),
        i_abs_max=5.0,
        v_abs_max=30.0,
    )
    return Scenario(
        converter=converter,
        load=ConstantResistance(load_r),
        coupling={
            InjectionPoint.VOLTAGE_FEEDBACK: CouplingProfile(
                (ResonancePeak(6.5e8, 100.0, kappa),), InjectionPoint.VOLTAGE_FEEDBACK
            )
        },
        attack=AttackSource(frequency=6.5e8, power_tx=0.08, distance=0.3),
        sweep=SweepSpec(SweepVariable.FREQUENCY, 5e7, 3e9, points=points),
    )


def _cc_supply_scenario(kappa=-0.45, i_set=1.0, v_load=7.0, points=61) -> Scenario:
    converter = ConverterSpec(
        topology=Topology.BUCK,
        v_in=12.0,
        voltage_network=FixedDividerAdjustableRef(beta=0.1, v_ref=1.1),
        current_network=CurrentSense(0.004, 100.0, 0.4 * i_set),
        i_abs_max=40.0,
        v_abs_max=11.0,
    )
    return Scenario(
        converter=converter,
        load=ConstantVoltage(v_load),
        coupling={
            InjectionPoint.CURRENT_FEEDBACK: CouplingProfile(
                (ResonancePeak(1.1e9, 100.0, kappa),), InjectionPoint.CURRENT_FEEDBACK
            )
        },
        attack=AttackSource(frequency=1.1e9, power_tx=0.08, distance=0.3),
        sweep=SweepSpec(SweepVariable.FREQUENCY, 5e7, 3e9, points=points),
    )


class TestSweepSpec:
    def test_linear_values(self):
        spec = SweepSpec(SweepVariable.DISTANCE, 1.0, 5.0, points=5, spacing="linear")
        assert spec.values() == [1.0, 2.0, 3.0, 4.0, 5.0]

    def test_log_endpoints_exact(self):
        spec = SweepSpec(SweepVariable.FREQUENCY, 5e7, 3e9, points=11, spacing="log")
        values = spec.values()
        assert values[0] == 5e7 and values[-1] == 3e9
        assert len(values) == 11
        ratios = [b / a for a, b in zip(values, values[1:])]
        assert max(ratios) == pytest.approx(min(ratios), rel=1e-9)

    def test_invalid_specs_rejected(self):
        with pytest.raises(ValueError):
            SweepSpec(SweepVariable.FREQUENCY, 0.0, 1e9)
        with pytest.raises(ValueError):
            SweepSpec(SweepVariable.FREQUENCY, 2e9, 1e9)
        with pytest.raises(ValueError):
            SweepSpec(SweepVariable.FREQUENCY, 1e8, 1e9, points=1)
        with pytest.raises(ValueError):
            SweepSpec(SweepVariable.FREQUENCY, 1e8, 1e9, spacing="cubic")


class TestFrequencySweep:
    def test_empty_profiles_give_flat_nominal_output(self):
        scenario = replace(_divider_scenario(), coupling={})
        records = run_frequency_sweep(scenario)
        assert all(r.v_real == pytest.approx(12.0, rel=1e-12) for r in records)
        assert all(r.events == "" for r in records)

    def test_peak_shows_at_center_frequency(self):
        scenario = _cc_supply_scenario(points=201)
        records = run_frequency_sweep(scenario)
        baseline = 1.0
        peak = max(records, key=lambda r: abs(r.i_real - baseline))
        assert peak.frequency_hz == pytest.approx(1.1e9, rel=0.01)
        assert peak.i_real - baseline == pytest.approx(1.0, rel=0.01)
        far = [r for r in records if r.frequency_hz < 2e8 or r.frequency_hz > 2.9e9]
        assert all(abs(r.i_real - baseline) < 0.02 for r in far)

    def test_three_setpoint_fractional_curves_identical(self):
        """Pairwise comparison of fractional-change curves at three set
        voltages: the adjustable-divider algebra makes them equal."""
        curves = []
        for setpoint in (5.0, 12.0, 24.0):
            scenario = _divider_scenario(points=101)
            net = scenario.converter.voltage_network.with_setpoint(setpoint)
            scenario = replace(scenario, converter=replace(scenario.converter, voltage_network=net))
            records = run_frequency_sweep(scenario)
            v0 = solve_record(scenario, None, 0.0).v_real
            curves.append([(r.v_real - v0) / v0 for r in records])
        for other in curves[1:]:
            for a, b in zip(curves[0], other):
                assert b == pytest.approx(a, rel=1e-9, abs=1e-15)

    def test_sweep_matches_isolated_solves(self):
        scenario = _divider_scenario(points=17)
        records = run_frequency_sweep(scenario)
        for record in records:
            src = replace(scenario.attack, frequency=record.sweep_or_time)
            va_v, va_i = channel_offsets(scenario, src)
            pt = solve_operating_point(scenario.converter, scenario.load, va_v, va_i)
            assert record.v_real == pt.v_real
            assert record.i_real == pt.i_real

    def test_thread_counts_give_identical_records(self):
        scenario = _divider_scenario(points=257)
        serial = run_frequency_sweep(scenario, threads=1)
        threaded = run_frequency_sweep(scenario, threads=8)
        assert serial == threaded

    def test_filter_attenuates_offsets(self):
        base = _divider_scenario(points=11)
        filtered = replace(
            base,
            filters={InjectionPoint.VOLTAGE_FEEDBACK: LowPassFilterModel(cutoff=1e5, parasitic_floor=40.0)},
        )
        src = base.attack
        raw_v, _ = channel_offsets(base, src)
        att_v, _ = channel_offsets(filtered, src)
        assert abs(att_v) < abs(raw_v)
        assert abs(att_v) >= abs(raw_v) * 0.01 * 0.999  # parasitic floor leaks

    def test_filter_passes_attack_inside_passband_unchanged(self):
        base = _divider_scenario()
        filtered = replace(
            base,
            filters={InjectionPoint.VOLTAGE_FEEDBACK: LowPassFilterModel(cutoff=1e10)},
        )
        raw_v, _ = channel_offsets(base, base.attack)
        att_v, _ = channel_offsets(filtered, base.attack)
        assert att_v == raw_v

    def test_shielding_scales_offsets(self):
        base = _divider_scenario()
        shielded = replace(base, shield_factor=0.5)
        raw_v, _ = channel_offsets(base, base.attack)
        att_v, _ = channel_offsets(shielded, base.attack)
        assert att_v == raw_v * 0.5

    def test_detector_flags_disagreement_in_records(self):
        from iemisim.protection import AttackDetector

        # dense sweep: the resonance is only ~1% wide, so coarse grids miss it
        scenario = replace(_divider_scenario(points=2048), detector=AttackDetector(v_threshold=0.05))
        records = run_frequency_sweep(scenario)
        flagged = [r for r in records if "attack_detected_voltage" in r.events]
        assert flagged
        # flags appear at resonance, not far off it
        assert all(abs(r.frequency_hz - 6.5e8) / 6.5e8 < 0.5 for r in flagged)


class TestPowerSweep:
    def test_linear_through_origin(self):
        scenario = replace(
            _cc_supply_scenario(points=61),
            sweep=SweepSpec(SweepVariable.POWER, 8e-4, 8e-2, points=41, spacing="log"),
        )
        records = run_power_sweep(scenario)
        baseline = solve_record(scenario, None, 0.0).i_real
        xs = [r.power_w for r in records if r.mode != "overloaded"]
        ys = [r.i_real - baseline for r in records if r.mode != "overloaded"]
        slope = sum(x * y for x, y in zip(xs, ys)) / sum(x * x for x in xs)
        ss_res = sum((y - slope * x) ** 2 for x, y in zip(xs, ys))
        mean = sum(ys) / len(ys)
        ss_tot = sum((y - mean) ** 2 for y in ys)
        assert 1.0 - ss_res / ss_tot >= 0.999

    def test_doubling_power_doubles_shift(self):
        scenario = _cc_supply_scenario()
        baseline = solve_record(scenario, None, 0.0).i_real
        lo = solve_record(scenario, replace(scenario.attack, power_tx=0.02), 0.0)
        hi = solve_record(scenario, replace(scenario.attack, power_tx=0.04), 0.0)
        assert hi.i_real - baseline == pytest.approx(2.0 * (lo.i_real - baseline), rel=1e-12)

    def test_sweep_past_device_limit_plateaus_as_overloaded(self):
        scenario = replace(
            _cc_supply_scenario(),
            sweep=SweepSpec(SweepVariable.POWER, 0.01, 10.0, points=31, spacing="log"),
        )
        records = run_power_sweep(scenario)
        overloaded = [r for r in records if r.mode == "overloaded"]
        assert overloaded
        plateau = {r.i_real for r in overloaded}
        assert all(i == pytest.approx(40.0, rel=1e-12) for i in plateau)


class TestDistanceSweep:
    def test_inverse_square_shift(self):
        scenario = replace(
            _cc_supply_scenario(),
            attack=AttackSource(frequency=1.1e9, power_tx=6.7, distance=1.0),
            sweep=SweepSpec(SweepVariable.DISTANCE, 1.0, 4.0, points=4, spacing="linear"),
        )
        records = run_distance_sweep(scenario)
        baseline = solve_record(scenario, None, 0.0).i_real
        d1 = records[0].i_real - baseline
        d2 = records[1].i_real - baseline
        d4 = records[3].i_real - baseline
        assert d2 == pytest.approx(d1 / 4.0, rel=1e-12)
        assert d4 == pytest.approx(d1 / 16.0, rel=1e-12)


def _battery_charger_scenario(**overrides) -> Scenario:
    converter = ConverterSpec(
        topology=Topology.BUCK,
        v_in=12.0,
        voltage_network=FixedDividerAdjustableRef(beta=0.25, v_ref=1.05),
        current_network=CurrentSense(0.01, 50.0, 0.5),
        i_abs_max=6.0,
        v_abs_max=8.0,
    )
    cell = BatteryState(capacity=10800.0, soc=0.1)
    charger = ChargerConfig(
        i_precharge=0.1, v_precharge_threshold=3.0, i_cc=1.0, v_cv=4.2,
        i_terminate=0.05, cells_in_series=1,
    )
    fields = dict(
        converter=converter,
        load=BatteryLoad(cell),
        charger=charger,
        duration=600.0,
        dt=1.0,
    )
    fields.update(overrides)
    return Scenario(**fields)


class TestTimeline:
    def test_no_attack_charge_is_safe_and_completes(self):
        scenario = _battery_charger_scenario(duration=40000.0, dt=2.0)
        records = run_charging_attack(scenario)
        assert records[-1].phase == "done"
        assert max(r.v_real for r in records) <= 4.2 + 1e-9
        phases = []
        for r in records:
            if not phases or phases[-1] != r.phase:
                phases.append(r.phase)
        assert phases == ["constant_current", "constant_voltage", "done"]

    def test_precharge_path_for_deeply_depleted_cell(self):
        cell = BatteryState(capacity=10800.0, soc=0.01)  # ocv 3.05 V
        charger = ChargerConfig(
            i_precharge=0.1, v_precharge_threshold=3.2, i_cc=1.0, v_cv=4.2,
            i_terminate=0.05, cells_in_series=1,
        )
        scenario = _battery_charger_scenario(
            load=BatteryLoad(cell), charger=charger, duration=4000.0, dt=1.0
        )
        records = run_charging_attack(scenario)
        assert records[0].phase == "precharge"
        assert any(r.phase == "constant_current" for r in records)

    def test_coulomb_conservation(self):
        scenario = _battery_charger_scenario(duration=900.0)
        records = run_charging_attack(scenario)
        integral = sum(r.i_real * scenario.dt for r in records)
        soc_gain = records[-1].soc - scenario.load.battery.soc
        assert soc_gain * scenario.load.battery.capacity == pytest.approx(integral, rel=1e-9)

    def test_static_timeline_matches_quasistatic_solver(self):
        scenario = Scenario(
            converter=_divider_scenario().converter,
            load=ConstantResistance(47.0),
            coupling=_divider_scenario().coupling,
            attack=AttackSource(frequency=6.5e8, power_tx=0.08, distance=0.3),
            duration=5.0,
            dt=1.0,
        )
        records = run_timeline(scenario)
        va_v, va_i = channel_offsets(scenario, scenario.attack)
        pt = solve_operating_point(scenario.converter, scenario.load, va_v, va_i)
        last = records[-1]
        assert last.v_real == pytest.approx(pt.v_real, rel=1e-6)
        assert last.i_real == pytest.approx(pt.i_real, rel=1e-6)

    def test_attack_schedule_switches_sources(self):
        on = AttackSource(frequency=6.5e8, power_tx=0.08, distance=0.3)
        off = AttackSource(frequency=6.5e8, power_tx=0.0, distance=0.3)
        scenario = Scenario(
            converter=_divider_scenario().converter,
            load=ConstantResistance(100.0),
            coupling=_divider_scenario().coupling,
            attack=off,
            schedule=(AttackStep(3.0, on), AttackStep(6.0, off)),
            duration=9.0,
            dt=1.0,
        )
        records = run_timeline(scenario)
        v_nominal = 12.0
        assert records[0].v_real == pytest.approx(v_nominal, rel=1e-12)
        assert records[4].v_real != pytest.approx(v_nominal, rel=1e-9)
        assert records[-1].v_real == pytest.approx(v_nominal, rel=1e-12)

    def test_power_ceiling_faults_charger(self):
        # commanded power is 4.2 V * 1.0 A, just above the 4.0 W ceiling
        charger = ChargerConfig(
            i_precharge=0.1, v_precharge_threshold=3.0, i_cc=1.0, v_cv=4.2,
            i_terminate=0.05, cells_in_series=1, power_ceiling=4.0,
        )
        scenario = _battery_charger_scenario(charger=charger, duration=60.0)
        records = run_charging_attack(scenario)
        assert records[-1].phase == "faulted"
        assert "fault:overload" in records[-1].events

    def test_voltage_attack_raises_real_cv_plateau_by_offset_over_beta(self):
        """Static voltage-channel offset: the real plateau sits at
        v_cv - offset/beta while the charger reads exactly v_cv."""
        offset = -0.1  # feedback-referred volts
        beta = 0.25
        coupling = {
            InjectionPoint.VOLTAGE_FEEDBACK: CouplingProfile(
                (ResonancePeak(8.55e8, 100.0, offset / (0.08 / 0.09)),),
                InjectionPoint.VOLTAGE_FEEDBACK,
            )
        }
        scenario = _battery_charger_scenario(
            coupling=coupling,
            attack=AttackSource(frequency=8.55e8, power_tx=0.08, distance=0.3),
            duration=30000.0,
            dt=2.0,
        )
        records = run_charging_attack(scenario)
        cv = [r for r in records if r.phase == "constant_voltage"]
        assert cv
        plateau = max(r.v_real for r in cv)
        assert plateau == pytest.approx(4.2 - offset / beta, rel=1e-9)
        assert max(r.v_measured for r in cv) == pytest.approx(4.2, rel=1e-9)

    def test_requires_charger_and_battery(self):
        scenario = _battery_charger_scenario(charger=None)
        with pytest.raises(ValueError):
            run_charging_attack(scenario)
        rig = _battery_charger_scenario(load=BatterySimRig(v_internal=3.5, esr=0.066))
        with pytest.raises(ValueError):
            run_charging_attack(rig)


class TestCalibrateScenario:
    def test_zero_target_gives_zero_kappa(self):
        scenario = _cc_supply_scenario()
        calibrated = calibrate_scenario(
            scenario, CalibrationTarget("delta_i", 0.0), InjectionPoint.CURRENT_FEEDBACK
        )
        peak = calibrated.coupling[InjectionPoint.CURRENT_FEEDBACK].peaks[0]
        assert peak.peak_kappa == 0.0

    def test_hits_current_target_within_tolerance(self):
        scenario = _cc_supply_scenario(kappa=-1.0)
        calibrated = calibrate_scenario(
            scenario, CalibrationTarget("delta_i", 1.0), InjectionPoint.CURRENT_FEEDBACK
        )
        achieved = solve_record(calibrated, calibrated.attack, 0.0).i_real - 1.0
        assert achieved == pytest.approx(1.0, rel=1e-3)

    def test_saturated_target_is_unreachable(self):
        scenario = _cc_supply_scenario()  # device limit 40 A
        with pytest.raises(CalibrationUnreachable):
            calibrate_scenario(
                scenario, CalibrationTarget("delta_i", 60.0), InjectionPoint.CURRENT_FEEDBACK
            )

    def test_round_trip_against_reported_effect(self):
        """Calibrate to a +1 A effect, then confirm the scenario reproduces it."""
        scenario = _cc_supply_scenario(kappa=-0.1)
        calibrated = calibrate_scenario(
            scenario, CalibrationTarget("i_real", 2.0), InjectionPoint.CURRENT_FEEDBACK
        )
        assert solve_record(calibrated, calibrated.attack, 0.0).i_real == pytest.approx(2.0, rel=1e-3)
